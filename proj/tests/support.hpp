#pragma once

#include <string>
#include <vector>

#include "prostar/prostar.hpp"

namespace prostar::testing {

// One covariant input: (A, B, E, G, alpha, u, rho) with rho a group average.
struct Instance {
  FiniteCStarAlgebra a;
  FiniteCStarAlgebra b;
  HilbertModule e;
  FiniteGroup g;
  GroupAction alpha;
  UnitaryRepresentation u;
  CompletelyPositiveMap rho;
  std::string label;
};

inline FiniteGroup group_by_name(const std::string& name) {
  if (name == "trivial") return FiniteGroup::trivial();
  if (name == "Z2") return FiniteGroup::cyclic(2);
  if (name == "Z3") return FiniteGroup::cyclic(3);
  return FiniteGroup::symmetric3();
}

// Inner action on A by a unitary representation of G living in A.
inline GroupAction sample_inner_action(Rng& rng, const FiniteGroup& g, const FiniteCStarAlgebra& a) {
  const Index n = a.total_matrix_dim();
  MatrixRepresentation u(static_cast<std::size_t>(g.order()), ComplexMatrix::Identity(n, n));
  for (Index k = 0; k < a.num_blocks(); ++k) {
    const Index m = a.block_size(k);
    const Index off = a.matrix_offset(k);
    const auto r = conjugate_representation(sample_representation(rng, g, m), random_unitary_matrix(rng, m));
    for (Index x = 0; x < g.order(); ++x) u[static_cast<std::size_t>(x)].block(off, off, m, m) = r[static_cast<std::size_t>(x)];
  }
  return GroupAction::inner(g, a, u);
}

inline Instance make_instance(Rng& rng, const std::vector<Index>& a_blocks, Index b_size, Index rank,
                              const std::string& group, Index multiplicity = 2) {
  Instance in;
  in.a = FiniteCStarAlgebra(a_blocks);
  in.b = FiniteCStarAlgebra::full(b_size);
  in.e = HilbertModule(in.b, rank);
  in.g = group_by_name(group);
  in.alpha = sample_inner_action(rng, in.g, in.a);
  in.u = UnitaryRepresentation::from_matrices(in.g, in.e, sample_representation(rng, in.g, rank),
                                              random_module_unitary(rng, in.b, rank));
  in.rho = covariant_average(random_unital_cp(rng, in.a, in.e, multiplicity), in.alpha, in.u);
  in.label = in.a.describe() + " on " + in.e.describe() + ", G = " + group;
  return in;
}

// Cycles through the acceptance grid: A in {M2, M3, M2+C}, B in {C, M2},
// rank in {1, 2}, G in {trivial, Z2, Z3, S3}, multiplicity in {1, 2}.
inline Instance grid_instance(Rng& rng, int k) {
  static const std::vector<std::vector<Index>> as = {{2}, {3}, {2, 1}};
  static const std::vector<std::string> gs = {"trivial", "Z2", "Z3", "S3"};
  const auto& a = as[static_cast<std::size_t>(k % 3)];
  const Index b = (k / 3) % 2 == 0 ? 1 : 2;
  const Index rank = (k / 6) % 2 == 0 ? 1 : 2;
  const auto& g = gs[static_cast<std::size_t>((k / 12) % 4 + k) % 4];
  const Index mult = k % 2 == 0 ? 2 : 1;
  return make_instance(rng, a, b, rank, g, mult);
}

// alpha = Ad diag(1, -1) on M2, u trivial, rho a random unital CP map: not covariant.
inline Instance flip_instance(Rng& rng, const HilbertModule& e = HilbertModule(FiniteCStarAlgebra::full(1), 2)) {
  Instance in;
  in.a = FiniteCStarAlgebra::full(2);
  in.b = e.base();
  in.e = e;
  in.g = FiniteGroup::cyclic(2);
  ComplexMatrix d = ComplexMatrix::Identity(2, 2);
  d(1, 1) = -1.0;
  in.alpha = GroupAction::inner(in.g, in.a, {ComplexMatrix::Identity(2, 2), d});
  in.u = UnitaryRepresentation::trivial(in.g, in.e);
  in.rho = random_unital_cp(rng, in.a, in.e, 2);
  in.label = "flip";
  return in;
}

inline CompletelyPositiveMap transpose_map(Index n) {
  const FiniteCStarAlgebra a = FiniteCStarAlgebra::full(n);
  const HilbertModule e(FiniteCStarAlgebra::full(1), n);
  return CompletelyPositiveMap::from_function(
      a, e, [&](const AlgebraElement& x) { return AdjointableOperator(e, e, ComplexMatrix(x.block_diagonal().transpose())); });
}

// Non-zero M_k(B) pattern entries with random complex values, as a module element.
inline ModuleElement random_module_element(Rng& rng, const HilbertModule& e) {
  const Index N = e.base().total_matrix_dim();
  return ModuleElement(e, e.projection() * restrict_to_pattern(e.base(), random_complex_matrix(rng, e.flat_dim(), N)));
}

}  // namespace prostar::testing
