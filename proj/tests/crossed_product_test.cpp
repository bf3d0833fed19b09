#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"

using namespace prostar;
using prostar::testing::Instance;
using prostar::testing::make_instance;

namespace {

std::vector<Index> sorted(std::vector<Index> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Irreducible dimensions of the test groups.
std::vector<Index> irreps(const std::string& g) {
  if (g == "trivial") return {1};
  if (g == "Z2") return {1, 1};
  if (g == "Z3") return {1, 1, 1};
  return {1, 1, 2};
}

SystemPtr swap_system() {
  return make_system(GroupAction::block_permutation(FiniteGroup::cyclic(2), FiniteCStarAlgebra({1, 1}), {{0, 1}, {1, 0}}));
}

}  // namespace

TEST(CrossedProduct, GoldenDecompositions) {
  const auto c = FiniteCStarAlgebra::full(1);
  const auto z2 = build_crossed_product(make_system(GroupAction::trivial(FiniteGroup::cyclic(2), c)));
  EXPECT_EQ(z2.standard_form().block_sizes(), (std::vector<Index>{1, 1}));
  const auto sw = build_crossed_product(swap_system());
  EXPECT_EQ(sw.standard_form().block_sizes(), (std::vector<Index>{2}));
  const auto s3 = build_crossed_product(make_system(GroupAction::trivial(FiniteGroup::symmetric3(), c)));
  EXPECT_EQ(s3.standard_form().block_sizes(), (std::vector<Index>{1, 1, 2}));
  for (const auto* xp : {&z2, &sw, &s3}) EXPECT_TRUE(xp->report.passed());
}

TEST(CrossedProduct, InnerActionsMatchTensorWithGroupAlgebra) {
  Rng rng(61);
  for (const char* g : {"trivial", "Z2", "Z3", "S3"})
    for (const auto& blocks : std::vector<std::vector<Index>>{{2}, {2, 1}}) {
      const FiniteCStarAlgebra a(blocks);
      const auto alpha = prostar::testing::sample_inner_action(rng, prostar::testing::group_by_name(g), a);
      const auto xp = build_crossed_product(make_system(alpha));
      ASSERT_TRUE(xp.report.passed()) << g;
      std::vector<Index> expect;
      for (Index n : blocks)
        for (Index d : irreps(g)) expect.push_back(n * d);
      EXPECT_EQ(sorted(xp.standard_form().block_sizes()), sorted(expect)) << g << " on " << a.describe();
      EXPECT_EQ(xp.standard_form().linear_dim(), alpha.group().order() * a.linear_dim());
    }
}

TEST(CrossedProduct, FreeActionOnFunctionsGivesMatrixAlgebra) {
  // Z3 rotating C^3: C(Z3) x| Z3 = M3.
  const auto g = FiniteGroup::cyclic(3);
  std::vector<std::vector<Index>> perms;
  for (Index x = 0; x < 3; ++x) perms.push_back({x % 3, (1 + x) % 3, (2 + x) % 3});
  const auto xp = build_crossed_product(make_system(GroupAction::block_permutation(g, FiniteCStarAlgebra::diagonal(3), perms)));
  EXPECT_EQ(xp.standard_form().block_sizes(), (std::vector<Index>{3}));
}

TEST(CrossedProduct, ConvolutionLawsOnRandomTriples) {
  Rng rng(62);
  for (const char* g : {"Z2", "Z3", "S3"}) {
    const auto s = make_system(prostar::testing::sample_inner_action(rng, prostar::testing::group_by_name(g), FiniteCStarAlgebra({2, 1})));
    const auto xp = build_crossed_product(s);
    for (int k = 0; k < 3; ++k) {
      const auto f = random_convolution_element(rng, s), h = random_convolution_element(rng, s), l = random_convolution_element(rng, s);
      const double scale = 1.0 + l1_seminorm(f) * l1_seminorm(h) * l1_seminorm(l);
      EXPECT_LE(convolve(convolve(f, h), l).distance(convolve(f, convolve(h, l))), 1e-10 * scale);
      EXPECT_LE(involution(convolve(f, h)).distance(convolve(involution(h), involution(f))), 1e-10 * scale);
      EXPECT_LE(involution(involution(f)).distance(f), 1e-12 * (1.0 + l1_seminorm(f)));
      EXPECT_LE(convolve(ConvolutionElement::unit(s), f).distance(f), 1e-12 * (1.0 + l1_seminorm(f)));
      // the regular representation is a *-homomorphism of the convolution algebra
      EXPECT_LE((xp.embed(convolve(f, h)) - xp.embed(f) * xp.embed(h)).norm(), 1e-10 * scale);
      EXPECT_LE((xp.embed(involution(f)) - xp.embed(f).adjoint()).norm(), 1e-10 * scale);
      // standard form
      EXPECT_LE((xp.to_standard(convolve(f, h))).distance(xp.to_standard(f) * xp.to_standard(h)), 1e-9 * scale);
      EXPECT_LE(xp.from_standard(xp.to_standard(f)).distance(f), 1e-9 * (1.0 + l1_seminorm(f)));
      // the C*-norm is dominated by the L1 norm
      EXPECT_LE(matrix_operator_norm(xp.embed(f)), l1_seminorm(f) * (1.0 + 1e-12));
    }
  }
}

TEST(CrossedProduct, MismatchedSystemsAreRejected) {
  Rng rng(63);
  const auto s1 = swap_system();
  const auto s2 = make_system(GroupAction::trivial(FiniteGroup::cyclic(2), FiniteCStarAlgebra({1, 1})));
  EXPECT_THROW(convolve(random_convolution_element(rng, s1), random_convolution_element(rng, s2)), StructuralError);
}

TEST(IntegratedForm, IsUnitalStarHomomorphismAndMatchesDirectSum) {
  Rng rng(64);
  for (int k = 0; k < 8; ++k) {
    const Instance in = prostar::testing::grid_instance(rng, 3 * k + 2);
    const auto d = covariant_dilation(in.rho, in.alpha, in.u);
    const auto xp = build_crossed_product(make_system(in.alpha));
    const auto form = integrated_form(d.representation(), d.v, xp);
    EXPECT_TRUE(form.report.passed()) << in.label;
    EXPECT_LE(form.report.max_residual(), 1e-9) << in.label;
    const auto f = random_convolution_element(rng, xp.system);
    ComplexMatrix direct = ComplexMatrix::Zero(d.module().flat_dim(), d.module().flat_dim());
    for (Index x = 0; x < in.g.order(); ++x) direct += d.representation().apply(f.value(x)).flat() * d.v.at(x).flat();
    EXPECT_LE(matrix_operator_norm(form.apply(f).flat() - direct), 1e-10 * (1.0 + l1_seminorm(f)));
    EXPECT_LE(matrix_operator_norm(form.on_standard.apply(xp.to_standard(f)).flat() - direct), 1e-9 * (1.0 + l1_seminorm(f)));
  }
}

TEST(IntegratedForm, TrivialGroupIsExactlyPhi) {
  Rng rng(65);
  const Instance in = make_instance(rng, {2, 1}, 2, 2, "trivial");
  const auto d = covariant_dilation(in.rho, in.alpha, in.u);
  const auto xp = build_crossed_product(make_system(in.alpha));
  const auto form = integrated_form(d.representation(), d.v, xp);
  for (int k = 0; k < 5; ++k) {
    const auto f = random_convolution_element(rng, xp.system);
    EXPECT_EQ((form.apply(f).flat() - d.representation().apply(f.value(0)).flat()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(IntegratedForm, NonCovariantPairIsRejected) {
  // alpha = Ad diag(1, -1) on M2, Phi = id on C^2, v trivial: Phi o alpha != Phi.
  const auto g = FiniteGroup::cyclic(2);
  const FiniteCStarAlgebra a = FiniteCStarAlgebra::full(2);
  ComplexMatrix flip = ComplexMatrix::Identity(2, 2);
  flip(1, 1) = -1.0;
  const auto alpha = GroupAction::inner(g, a, {ComplexMatrix::Identity(2, 2), flip});
  const auto phi = CompletelyPositiveMap::identity_representation(a);
  const auto xp = build_crossed_product(make_system(alpha));
  EXPECT_THROW(integrated_form(phi, UnitaryRepresentation::trivial(g, phi.target()), xp), PreconditionError);
  const auto v = UnitaryRepresentation(g, phi.target(), {AdjointableOperator::identity(phi.target()),
                                                         AdjointableOperator(phi.target(), phi.target(), flip)});
  EXPECT_TRUE(integrated_form(phi, v, xp).report.passed());
}

TEST(Extension, AgreesWithDirectFormulaAndIsUnitalCp) {
  Rng rng(67);
  for (int k = 0; k < 8; ++k) {
    const Instance in = prostar::testing::grid_instance(rng, 7 * k + 3);
    const auto d = covariant_dilation(in.rho, in.alpha, in.u);
    const auto xp = build_crossed_product(make_system(in.alpha));
    const auto ext = extend_covariant_cp(d, xp);
    EXPECT_TRUE(ext.report.passed()) << in.label;
    EXPECT_TRUE(ext.report.find("agrees with sum rho(f(g)) u_g")->pass);
    EXPECT_GE(ext.certification.min_eigenvalue(), -1e-9);
    EXPECT_LE(matrix_operator_norm(ext.on_standard.apply(AlgebraElement::identity(xp.standard_form())).flat() -
                                   in.e.projection()),
              1e-10);
    const auto f = random_convolution_element(rng, xp.system);
    EXPECT_LE(operator_distance(ext.apply(f), direct_extension(in.rho, in.u, f)), 1e-10 * (1.0 + l1_seminorm(f)));
  }
}

TEST(Extension, TrivialGroupGivesBackRho) {
  Rng rng(68);
  for (const auto& blocks : std::vector<std::vector<Index>>{{2}, {3}, {2, 1}}) {
    const Instance in = make_instance(rng, blocks, 2, 2, "trivial");
    const auto d = covariant_dilation(in.rho, in.alpha, in.u);
    const auto xp = build_crossed_product(make_system(in.alpha));
    const auto ext = extend_covariant_cp(d, xp);
    for (Index i = 0; i < in.a.linear_dim(); ++i) {
      const auto f = ConvolutionElement::delta(xp.system, 0, AlgebraElement::basis(in.a, i));
      EXPECT_LE(operator_distance(ext.apply(f), in.rho.basis_value(i)), 1e-12);
    }
  }
}

TEST(Extension, RejectsUnverifiedDilation) {
  Rng rng(69);
  const Instance in = make_instance(rng, {2}, 1, 1, "Z2");
  auto d = covariant_dilation(in.rho, in.alpha, in.u);
  d.report = verify_dilation(with_scaled_connector(d, 0.5));
  const auto xp = build_crossed_product(make_system(in.alpha));
  EXPECT_THROW(extend_covariant_cp(d, xp), PreconditionError);
}
