#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "support.hpp"

using namespace prostar;
using prostar::testing::Instance;
using prostar::testing::make_instance;

namespace {

// Choi matrix of a map on M_n built directly from its values on matrix units.
ComplexMatrix brute_choi(const CompletelyPositiveMap& rho) {
  const Index n = rho.source().total_matrix_dim();
  const Index d = rho.target().flat_dim();
  ComplexMatrix c = ComplexMatrix::Zero(n * d, n * d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      c.block(i * d, j * d, d, d) = rho.apply(AlgebraElement::unit(rho.source(), 0, i, j)).flat();
  return c;
}

// Minimal Stinespring dimension of rho viewed as a map into M_{flat_dim}:
// sum over blocks of n_k * rank(Choi_k), ranks from the reference solver.
Index stinespring_dimension(const CompletelyPositiveMap& rho) {
  const auto& a = rho.source();
  Index dim = 0;
  const auto chois = choi_matrices(rho);
  for (Index k = 0; k < a.num_blocks(); ++k) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> s(chois[static_cast<std::size_t>(k)]);
    const double top = s.eigenvalues().cwiseAbs().maxCoeff();
    Index r = 0;
    for (Index i = 0; i < s.eigenvalues().size(); ++i) r += s.eigenvalues()(i) > 1e-9 * top;
    dim += a.block_size(k) * r;
  }
  return dim;
}

}  // namespace

TEST(CpMap, TransposeIsPositiveButNotCompletelyPositive) {
  const auto t = prostar::testing::transpose_map(2);
  const auto cert = verify_completely_positive(t);
  EXPECT_FALSE(cert.is_cp);
  EXPECT_NEAR(cert.min_eigenvalue(), -1.0, 1e-10);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> s(brute_choi(t));
  EXPECT_NEAR(s.eigenvalues()(0), -1.0, 1e-12);
  // still positive on positive elements
  Rng rng(41);
  for (int k = 0; k < 5; ++k) {
    const auto p = random_positive_element(rng, t.source());
    EXPECT_TRUE(is_positive(t.apply(p).flat()).positive);
  }
  const auto rep = certification_report(cert);
  EXPECT_FALSE(rep.passed());
  ASSERT_TRUE(rep.witness.has_value());
}

TEST(CpMap, ChoiMatchesBruteForce) {
  Rng rng(42);
  const auto rho = random_unital_cp(rng, FiniteCStarAlgebra::full(3), HilbertModule(FiniteCStarAlgebra::full(1), 2), 2);
  EXPECT_LE((choi_matrices(rho).front() - brute_choi(rho)).norm(), 1e-12);
  EXPECT_TRUE(verify_completely_positive(rho).is_cp);
  EXPECT_TRUE(verify_nondegenerate(rho).passed());
}

TEST(CpMap, AmplificationPreservesCpAndExposesTranspose) {
  Rng rng(43);
  const auto rho = random_unital_cp(rng, FiniteCStarAlgebra({2, 1}), HilbertModule(FiniteCStarAlgebra::full(2), 1), 1);
  EXPECT_TRUE(verify_completely_positive(amplify(rho, 2)).is_cp);
  const auto t2 = amplify(prostar::testing::transpose_map(2), 2);
  EXPECT_FALSE(verify_completely_positive(t2).is_cp);
  // a positive element of M_2(M_2) sent to a non-positive one: the swap-like E_ij (x) E_ij sum
  ComplexMatrix m = ComplexMatrix::Zero(4, 4);
  m(0, 0) = m(0, 3) = m(3, 0) = m(3, 3) = 1.0;
  const auto x = AlgebraElement(t2.source(), {m});
  EXPECT_TRUE(is_positive(x).positive);
  EXPECT_FALSE(is_positive(t2.apply(x).flat()).positive);
}

TEST(CpMap, StandardMapsCertify) {
  const FiniteCStarAlgebra a({2, 1});
  const HilbertModule e(FiniteCStarAlgebra::full(1), 3);
  EXPECT_TRUE(verify_completely_positive(CompletelyPositiveMap::trace_state(a, e)).is_cp);
  const auto id = CompletelyPositiveMap::identity_representation(a);
  EXPECT_TRUE(verify_representation(id).passed());
  EXPECT_FALSE(verify_representation(CompletelyPositiveMap::trace_state(FiniteCStarAlgebra::full(2), e)).passed());
}

TEST(CpMap, CovariantAverageIsCovariantAndUnital) {
  Rng rng(44);
  for (const char* g : {"Z2", "Z3", "S3"}) {
    const Instance in = make_instance(rng, {3}, 2, 2, g);
    EXPECT_TRUE(check_covariance(in.rho, in.alpha, in.u).passed()) << g;
    EXPECT_TRUE(verify_completely_positive(in.rho).is_cp);
    EXPECT_TRUE(verify_nondegenerate(in.rho).passed());
  }
}

TEST(CpMap, NonCovariantMapIsDetected) {
  Rng rng(45);
  const auto in = prostar::testing::flip_instance(rng);
  const auto rep = check_covariance(in.rho, in.alpha, in.u);
  EXPECT_FALSE(rep.passed());
  EXPECT_TRUE(rep.witness.has_value());
}

TEST(Ksgns, DimensionMatchesMinimalStinespringOracle) {
  Rng rng(46);
  for (int k = 0; k < 12; ++k) {
    const Instance in = prostar::testing::grid_instance(rng, k);
    const auto core = ksgns_construct(in.rho);
    const Index m = in.b.total_matrix_dim();
    EXPECT_EQ(core.basis.size(), m * stinespring_dimension(in.rho)) << in.label;
    EXPECT_EQ(core.quotient.null_dimension() + core.quotient.retained.cols(), in.a.linear_dim() * complex_dimension(in.e));
    EXPECT_TRUE(scalarization_check(core.gram, core.quotient).consistent) << in.label;
    EXPECT_TRUE(core.report.passed()) << in.label;
  }
}

TEST(Ksgns, RepresentationIsUnitalStarHomomorphism) {
  Rng rng(47);
  const Instance in = make_instance(rng, {2, 1}, 2, 2, "S3");
  const auto core = ksgns_construct(in.rho);
  EXPECT_TRUE(verify_representation(core.representation, 1e-9).passed());
  // V* Phi(a) V = rho(a) on a random element
  const auto x = random_element(rng, in.a);
  const ComplexMatrix lhs = core.connector.flat().adjoint() * core.representation.apply(x).flat() * core.connector.flat();
  EXPECT_LE(matrix_operator_norm(lhs - in.rho.apply(x).flat()), 1e-9);
}

TEST(Ksgns, RankDeficientMapHasNullSpace) {
  // rho(a) = a on C^2: dim A (x) E = 4 * 2 = 8 complex, E_rho = C^2, null space 6.
  const FiniteCStarAlgebra a = FiniteCStarAlgebra::full(2);
  const auto id = CompletelyPositiveMap::identity_representation(a);
  const auto core = ksgns_construct(id);
  EXPECT_EQ(core.basis.size(), 2);
  EXPECT_EQ(core.quotient.null_dimension(), 6);
}

TEST(Ksgns, PreconditionsAreEnforced) {
  EXPECT_THROW(ksgns_construct(prostar::testing::transpose_map(2)), PreconditionError);
  const FiniteCStarAlgebra a = FiniteCStarAlgebra::full(2);
  const HilbertModule e(FiniteCStarAlgebra::full(1), 1);
  const auto half = CompletelyPositiveMap::from_function(
      a, e, [&](const AlgebraElement& x) { return AdjointableOperator(e, e, 0.25 * x.block(0).trace() * ComplexMatrix::Identity(1, 1)); });
  EXPECT_THROW(ksgns_construct(half), PreconditionError);
}

TEST(Dilation, VerifiesOnGridInstances) {
  Rng rng(48);
  for (int k = 0; k < 24; ++k) {
    const Instance in = prostar::testing::grid_instance(rng, k);
    const auto d = covariant_dilation(in.rho, in.alpha, in.u);
    EXPECT_TRUE(d.report.passed()) << in.label;
    EXPECT_LE(d.report.max_residual(), 1e-9) << in.label;
    EXPECT_TRUE(verify_unitary_representation(d.v, 1e-9).passed()) << in.label;
  }
}

TEST(Dilation, UniquenessAcrossMixedAndPermutedRealizations) {
  Rng rng(49);
  for (int k = 0; k < 6; ++k) {
    const Instance in = prostar::testing::grid_instance(rng, 5 * k + 1);
    const auto d1 = covariant_dilation(in.rho, in.alpha, in.u);
    KsgnsOptions o;
    o.mixing_seed = 100 + static_cast<std::uint64_t>(k);
    const auto d2 = covariant_dilation(in.rho, in.alpha, in.u, o);
    std::vector<Index> perm(static_cast<std::size_t>(d2.module().rank()));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Index>((i + 1) % perm.size());
    const auto un = uniqueness_unitary(d1, permuted_triple(d2, perm));
    EXPECT_TRUE(un.report.passed()) << in.label;
    EXPECT_LE(un.report.value_of("unitary"), 1e-9);
    EXPECT_LE(un.report.value_of("intertwines group unitaries"), 1e-9);
  }
}

TEST(Dilation, NegativeControlsFailByName) {
  Rng rng(50);
  const Instance in = make_instance(rng, {2}, 1, 2, "Z2");
  const auto d = covariant_dilation(in.rho, in.alpha, in.u);
  ASSERT_TRUE(d.report.passed());
  const auto scaled = verify_dilation(with_scaled_connector(d, 0.5));
  EXPECT_FALSE(scaled.find("dilation identity")->pass);
  EXPECT_NEAR(scaled.value_of("dilation identity"), 0.75, 1e-9);
  const auto padded = verify_dilation(with_padded_module(d));
  EXPECT_FALSE(padded.find("minimality")->pass);
  EXPECT_TRUE(padded.find("dilation identity")->pass);
  const auto bad = prostar::testing::flip_instance(rng);
  try {
    covariant_dilation(bad.rho, bad.alpha, bad.u);
    FAIL() << "non-covariant map was dilated";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("covariance"), std::string::npos);
  }
}
