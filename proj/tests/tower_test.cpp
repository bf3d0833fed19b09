#include <gtest/gtest.h>

#include "support.hpp"

using namespace prostar;

namespace {

// M2+C+C -> M2+C -> M2 by dropping the last block.
AlgebraTower three_level_chain() {
  const FiniteCStarAlgebra b0({2, 1, 1}), b1({2, 1}), b2({2});
  return AlgebraTower::chain({b0, b1, b2}, {StarHomomorphism::block_projection(b0, {0, 1}), StarHomomorphism::block_projection(b1, {0})});
}

AlgebraTower two_level_chain() {
  const FiniteCStarAlgebra b0({2, 1}), b1({2});
  return AlgebraTower::chain({b0, b1}, {StarHomomorphism::block_projection(b0, {0})});
}

// 0 >= 1, 2 >= 3 over C+C -> C, C -> C; `consistent` picks the same block on both sides.
AlgebraTower diamond(bool consistent) {
  const FiniteCStarAlgebra top({1, 1}), c({1});
  const DirectedPoset p(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  std::vector<TowerEdge> e = {{0, 1, StarHomomorphism::block_projection(top, {0})},
                              {0, 2, StarHomomorphism::block_projection(top, {consistent ? Index{0} : Index{1}})},
                              {1, 3, StarHomomorphism::identity(c)},
                              {2, 3, StarHomomorphism::identity(c)}};
  return AlgebraTower(p, {top, c, c, c}, e);
}

}  // namespace

TEST(Poset, ChainOrderAndBounds) {
  const auto p = DirectedPoset::chain(4);
  EXPECT_TRUE(p.geq(0, 3));
  EXPECT_FALSE(p.geq(3, 0));
  EXPECT_EQ(p.top(), Index{0});
  const auto ub = p.upper_bound(2, 3);
  ASSERT_TRUE(ub.has_value());
  EXPECT_TRUE(p.geq(*ub, 2) && p.geq(*ub, 3));
  EXPECT_EQ(p.strict_pairs().size(), 6u);
  EXPECT_TRUE(verify_poset(p).passed());
}

TEST(Poset, NonDirectedAndCyclicOrdersFail) {
  const DirectedPoset two(2, {});
  EXPECT_FALSE(verify_poset(two).find("directed")->pass);
  const DirectedPoset cyc(2, {{0, 1}, {1, 0}});
  EXPECT_FALSE(verify_poset(cyc).find("antisymmetric")->pass);
  EXPECT_THROW(DirectedPoset(2, {{0, 5}}), StructuralError);
}

TEST(AlgebraTower, ChainsAndConsistentDiamondVerify) {
  EXPECT_TRUE(verify_tower(three_level_chain()).passed());
  EXPECT_TRUE(verify_tower(two_level_chain()).passed());
  EXPECT_TRUE(verify_tower(diamond(true)).passed());
  EXPECT_TRUE(verify_tower(AlgebraTower::single(FiniteCStarAlgebra({3}))).passed());
}

TEST(AlgebraTower, InconsistentDiamondFailsComposition) {
  const auto rep = verify_tower(diamond(false));
  EXPECT_FALSE(rep.find("composition")->pass);
  ASSERT_TRUE(rep.witness.has_value());
  EXPECT_NE(rep.witness->find("chain"), std::string::npos);
}

TEST(AlgebraTower, NonSurjectiveConnectingMapFails) {
  const FiniteCStarAlgebra c({1}), cc({1, 1});
  const auto diag = StarHomomorphism::from_function(c, cc, [&](const AlgebraElement& x) {
    return AlgebraElement(cc, {x.block(0), x.block(0)});
  });
  const auto rep = verify_tower(AlgebraTower::chain({c, cc}, {diag}));
  EXPECT_FALSE(rep.find("surjective")->pass);
}

TEST(AlgebraTower, EdgesAgainstTheOrderAreRejected) {
  const FiniteCStarAlgebra b0({2, 1}), b1({2});
  EXPECT_THROW(AlgebraTower(DirectedPoset::chain(2), {b0, b1}, {{1, 0, StarHomomorphism::block_projection(b0, {0})}}), StructuralError);
  EXPECT_THROW(AlgebraTower(DirectedPoset::chain(2), {b0, b1}, {}), StructuralError);
}

TEST(CoherentElement, SeminormsAreMonotoneAndClosed) {
  Rng rng(71);
  const auto t = three_level_chain();
  for (int k = 0; k < 10; ++k) {
    const auto a = random_coherent_element(rng, t), b = random_coherent_element(rng, t);
    EXPECT_LE(a.coherence_residual(), 1e-12);
    for (const auto& [p, q] : t.poset().strict_pairs()) EXPECT_LE(seminorm_eval(a, q), seminorm_eval(a, p) + 1e-10);
    EXPECT_LE((a * b).coherence_residual(), 1e-12);
    EXPECT_LE((a + b).coherence_residual(), 1e-12);
    EXPECT_LE(a.adjoint().coherence_residual(), 1e-12);
    // C*-seminorms: p(a* a) = p(a)^2
    for (Index p = 0; p < t.size(); ++p) {
      const double n = seminorm_eval(a, p);
      EXPECT_NEAR(seminorm_eval(a.adjoint() * a, p), n * n, 1e-9 * n * n);
    }
  }
  EXPECT_LE(CoherentElement::identity(t).coherence_residual(), 0.0);
}

TEST(CoherentElement, IncoherentFamilyHasResidual) {
  const auto t = two_level_chain();
  const CoherentElement bad(t, {AlgebraElement::identity(t.level(0)), AlgebraElement::zero(t.level(1))});
  EXPECT_NEAR(bad.coherence_residual(), std::sqrt(2.0), 1e-12);
}

TEST(TowerAction, InducedActionIsCompatibleAndIsometric) {
  Rng rng(72);
  const auto t = three_level_chain();
  for (const char* g : {"Z2", "S3"}) {
    const auto alpha = prostar::testing::sample_inner_action(rng, prostar::testing::group_by_name(g), t.level(0));
    const auto act = TowerAction::from_top(t, alpha);
    EXPECT_TRUE(verify_tower_action(act).passed()) << g;
    const auto a = random_coherent_element(rng, t);
    for (Index x = 0; x < act.group().order(); ++x) {
      const auto ga = act.apply(x, a);
      EXPECT_LE(ga.coherence_residual(), 1e-10);
      for (Index p = 0; p < t.size(); ++p) EXPECT_NEAR(seminorm_eval(ga, p), seminorm_eval(a, p), 1e-10);
    }
  }
}

TEST(ModuleTower, InnerProductsAndSigmaAreCoherent) {
  Rng rng(73);
  const auto t = three_level_chain();
  for (Index rank : {1, 2}) {
    const auto mt = ModuleTower::from_top(t, HilbertModule(t.level(0), rank));
    EXPECT_TRUE(verify_tower(mt).passed());
    const auto x = prostar::testing::random_module_element(rng, mt.module(0));
    const auto y = prostar::testing::random_module_element(rng, mt.module(0));
    const auto pi = t.connecting(0, 2);
    EXPECT_LE(inner_product(mt.sigma(0, 2, x), mt.sigma(0, 2, y)).distance(pi.apply(inner_product(x, y))), 1e-12);
  }
}

TEST(ModuleTower, InducedOperatorsIntertwineSigma) {
  Rng rng(74);
  const auto t = three_level_chain();
  const auto mt = ModuleTower::from_top(t, HilbertModule(t.level(0), 2));
  const auto& e = mt.module(0);
  const AdjointableOperator s(e, e, random_module_unitary(rng, e.base(), 2));
  const AdjointableOperator r(e, e, random_module_unitary(rng, e.base(), 2));
  const auto s2 = induced_map(mt, 0, 2, s), r2 = induced_map(mt, 0, 2, r);
  EXPECT_LE(operator_distance(induced_map(mt, 0, 2, s * r), s2 * r2), 1e-12);
  EXPECT_LE(operator_distance(induced_map(mt, 0, 2, s.adjoint()), s2.adjoint()), 1e-12);
  const auto x = prostar::testing::random_module_element(rng, e);
  EXPECT_LE((mt.sigma(0, 2, s.apply(x)).flat() - s2.apply(mt.sigma(0, 2, x)).flat()).norm(), 1e-12);
  EXPECT_THROW(induced_map(mt, 2, 0, s2), StructuralError);
}

TEST(Levelwise, KsgnsAndIntegratedCoherenceOnChains) {
  Rng rng(75);
  struct Case {
    bool three;
    Index rank;
    const char* group;
  };
  for (const Case& c : {Case{true, 1, "trivial"}, Case{true, 1, "Z2"}, Case{false, 2, "Z2"}, Case{false, 1, "S3"}}) {
    const auto t = c.three ? three_level_chain() : two_level_chain();
    const FiniteCStarAlgebra a({2});
    const auto g = prostar::testing::group_by_name(c.group);
    const HilbertModule e(t.level(0), c.rank);
    const auto mt = ModuleTower::from_top(t, e);
    const auto alpha = prostar::testing::sample_inner_action(rng, g, a);
    const auto u = UnitaryRepresentation::from_matrices(g, e, sample_representation(rng, g, c.rank), random_module_unitary(rng, e.base(), c.rank));
    const auto rho = covariant_average(random_unital_cp(rng, a, e, 1), alpha, u);
    const auto lw = levelwise_ksgns_coherence(rho, alpha, u, mt);
    EXPECT_TRUE(lw.report.passed()) << c.group << " rank " << c.rank;
    EXPECT_LE(lw.report.max_residual(), 1e-9);
    EXPECT_EQ(lw.levels.size(), static_cast<std::size_t>(t.size()));
    EXPECT_FALSE(lw.connecting.empty());

    const auto& top = lw.levels[0];
    const auto ft = ModuleTower::from_top(t, top.module());
    const auto xp = build_crossed_product(make_system(alpha));
    const auto ic = levelwise_integrated_coherence(top.representation(), top.v, ft, xp);
    EXPECT_TRUE(ic.passed()) << c.group;
    EXPECT_LE(ic.max_residual(), 1e-9);
  }
}

TEST(Levelwise, NonCovariantInputNamesTheLevel) {
  Rng rng(76);
  const auto t = two_level_chain();
  const HilbertModule e(t.level(0), 1);
  const auto mt = ModuleTower::from_top(t, e);
  const auto in = prostar::testing::flip_instance(rng, e);
  try {
    levelwise_ksgns_coherence(in.rho, in.alpha, in.u, mt);
    FAIL() << "non-covariant map accepted";
  } catch (const PreconditionError& err) {
    EXPECT_NE(std::string(err.what()).find("level"), std::string::npos);
  }
}

TEST(Levelwise, PullBackAlongAlgebraTowerStaysCp) {
  Rng rng(77);
  const auto t = three_level_chain();
  const HilbertModule e(FiniteCStarAlgebra({1}), 2);
  const auto rho2 = random_unital_cp(rng, t.level(2), e, 1);
  const auto rho = pull_back_cp(rho2, t.connecting(0, 2));
  EXPECT_TRUE(verify_completely_positive(rho).is_cp);
  EXPECT_TRUE(verify_nondegenerate(rho).passed());
  const auto a = random_coherent_element(rng, t);
  EXPECT_LE(operator_distance(rho.apply(a.at(0)), rho2.apply(a.at(2))), 1e-12);
}
