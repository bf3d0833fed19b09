#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "prostar/algebra.hpp"
#include "prostar/hilbert_module.hpp"
#include "prostar/homomorphism.hpp"
#include "prostar/random.hpp"
#include "prostar/report.hpp"

namespace prostar {

// Finite group given by its Cayley table: mul(g, h) = index of gh.
class FiniteGroup {
 public:
  FiniteGroup() : FiniteGroup(std::vector<std::vector<Index>>{{0}}) {}

  // Identity and inverses are located from the table; a table without them
  // is still representable so that verify_group can report the defect.
  explicit FiniteGroup(std::vector<std::vector<Index>> table, std::string name = {})
      : table_(std::move(table)), name_(std::move(name)) {
    const Index n = order();
    if (n < 1) throw StructuralError("FiniteGroup: empty table");
    for (const auto& row : table_) {
      if (static_cast<Index>(row.size()) != n) throw StructuralError("FiniteGroup: table is not square");
      for (Index x : row)
        if (x < 0 || x >= n) throw StructuralError("FiniteGroup: table entry out of range");
    }
    identity_ = -1;
    for (Index e = 0; e < n && identity_ < 0; ++e) {
      bool ok = true;
      for (Index h = 0; h < n && ok; ++h) ok = mul(e, h) == h && mul(h, e) == h;
      if (ok) identity_ = e;
    }
    inverse_.assign(static_cast<std::size_t>(n), -1);
    if (identity_ >= 0)
      for (Index g = 0; g < n; ++g)
        for (Index h = 0; h < n; ++h)
          if (mul(g, h) == identity_ && mul(h, g) == identity_) {
            inverse_[static_cast<std::size_t>(g)] = h;
            break;
          }
  }

  static FiniteGroup trivial() { return FiniteGroup({{0}}, "trivial"); }

  static FiniteGroup cyclic(Index n) {
    std::vector<std::vector<Index>> t(static_cast<std::size_t>(n), std::vector<Index>(static_cast<std::size_t>(n)));
    for (Index g = 0; g < n; ++g)
      for (Index h = 0; h < n; ++h) t[static_cast<std::size_t>(g)][static_cast<std::size_t>(h)] = (g + h) % n;
    return FiniteGroup(std::move(t), n == 1 ? "trivial" : "Z" + std::to_string(n));
  }

  // S_3 as permutations of {0,1,2}; element k is permutations()[k], and
  // gh means "apply h, then g".
  static const std::vector<std::vector<int>>& s3_permutations() {
    static const std::vector<std::vector<int>> p = {{0, 1, 2}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}, {1, 2, 0}, {2, 0, 1}};
    return p;
  }

  static FiniteGroup symmetric3() {
    const auto& p = s3_permutations();
    auto find = [&](const std::vector<int>& q) {
      for (std::size_t k = 0; k < p.size(); ++k)
        if (p[k] == q) return static_cast<Index>(k);
      return Index{-1};
    };
    std::vector<std::vector<Index>> t(6, std::vector<Index>(6));
    for (std::size_t g = 0; g < 6; ++g)
      for (std::size_t h = 0; h < 6; ++h) {
        std::vector<int> c(3);
        for (int i = 0; i < 3; ++i) c[static_cast<std::size_t>(i)] = p[g][static_cast<std::size_t>(p[h][static_cast<std::size_t>(i)])];
        t[g][h] = find(c);
      }
    return FiniteGroup(std::move(t), "S3");
  }

  Index order() const { return static_cast<Index>(table_.size()); }
  Index mul(Index g, Index h) const { return table_[static_cast<std::size_t>(g)][static_cast<std::size_t>(h)]; }
  Index identity() const {
    if (identity_ < 0) throw StructuralError("FiniteGroup: table has no identity element");
    return identity_;
  }
  Index inverse(Index g) const {
    const Index i = inverse_[static_cast<std::size_t>(g)];
    if (i < 0) throw StructuralError("FiniteGroup: element has no inverse");
    return i;
  }
  bool has_identity() const { return identity_ >= 0; }
  Index raw_inverse(Index g) const { return inverse_[static_cast<std::size_t>(g)]; }

  // Finite groups are unimodular.
  double modular_function(Index) const { return 1.0; }

  const std::vector<std::vector<Index>>& cayley_table() const { return table_; }
  const std::string& name() const { return name_; }

  friend bool operator==(const FiniteGroup& a, const FiniteGroup& b) { return a.table_ == b.table_; }
  friend bool operator!=(const FiniteGroup& a, const FiniteGroup& b) { return !(a == b); }

 private:
  std::vector<std::vector<Index>> table_;
  std::string name_;
  Index identity_ = -1;
  std::vector<Index> inverse_;
};

inline VerificationReport verify_group(const FiniteGroup& g) {
  VerificationReport rep;
  rep.subject = "group " + (g.name().empty() ? std::to_string(g.order()) : g.name());
  const Index n = g.order();
  Index bad_assoc = 0;
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b)
      for (Index c = 0; c < n; ++c)
        if (g.mul(g.mul(a, b), c) != g.mul(a, g.mul(b, c))) {
          if (bad_assoc == 0) {
            std::ostringstream w;
            w << "associativity fails on triple (" << a << ", " << b << ", " << c << ")";
            rep.fail_with(w.str());
          }
          ++bad_assoc;
        }
  rep.require("associative", bad_assoc == 0);
  rep.require("identity", g.has_identity());
  if (!g.has_identity()) rep.fail_with("no two-sided identity element");
  bool inv = g.has_identity();
  for (Index a = 0; a < n && inv; ++a)
    if (g.raw_inverse(a) < 0) {
      inv = false;
      rep.fail_with("element " + std::to_string(a) + " has no inverse");
    }
  rep.require("inverses", inv);
  return rep;
}

// Finite-dimensional matrix representation g -> R_g of a finite group.
using MatrixRepresentation = std::vector<ComplexMatrix>;

// One-dimensional characters, found by assigning roots of unity to a
// generating set and propagating through the Cayley table.
inline std::vector<std::vector<Complex>> one_dimensional_characters(const FiniteGroup& g) {
  const Index n = g.order();
  const Index e = g.identity();
  std::vector<Index> gens;
  {
    std::vector<char> reached(static_cast<std::size_t>(n), 0);
    reached[static_cast<std::size_t>(e)] = 1;
    auto close = [&]() {
      bool grew = true;
      while (grew) {
        grew = false;
        for (Index a = 0; a < n; ++a)
          if (reached[static_cast<std::size_t>(a)])
            for (Index s : gens) {
              const Index c = g.mul(a, s);
              if (!reached[static_cast<std::size_t>(c)]) {
                reached[static_cast<std::size_t>(c)] = 1;
                grew = true;
              }
            }
      }
    };
    for (Index a = 0; a < n; ++a)
      if (!reached[static_cast<std::size_t>(a)]) {
        gens.push_back(a);
        close();
      }
  }
  std::vector<std::vector<Complex>> out;
  std::vector<Index> choice(gens.size(), 0);
  const double two_pi = 2.0 * std::numbers::pi;
  while (true) {
    std::vector<Complex> chi(static_cast<std::size_t>(n), Complex(0.0, 0.0));
    std::vector<char> set(static_cast<std::size_t>(n), 0);
    chi[static_cast<std::size_t>(e)] = 1.0;
    set[static_cast<std::size_t>(e)] = 1;
    bool ok = true;
    bool grew = true;
    while (grew && ok) {
      grew = false;
      for (Index a = 0; a < n && ok; ++a) {
        if (!set[static_cast<std::size_t>(a)]) continue;
        for (std::size_t k = 0; k < gens.size(); ++k) {
          const Complex root = std::polar(1.0, two_pi * static_cast<double>(choice[k]) / static_cast<double>(n));
          const Index c = g.mul(a, gens[k]);
          const Complex val = chi[static_cast<std::size_t>(a)] * root;
          if (!set[static_cast<std::size_t>(c)]) {
            chi[static_cast<std::size_t>(c)] = val;
            set[static_cast<std::size_t>(c)] = 1;
            grew = true;
          } else if (std::abs(chi[static_cast<std::size_t>(c)] - val) > 1e-9) {
            ok = false;
            break;
          }
        }
      }
    }
    if (ok)
      for (Index a = 0; a < n && ok; ++a)
        for (Index b = 0; b < n && ok; ++b)
          ok = std::abs(chi[static_cast<std::size_t>(g.mul(a, b))] - chi[static_cast<std::size_t>(a)] * chi[static_cast<std::size_t>(b)]) < 1e-9;
    if (ok) out.push_back(std::move(chi));
    std::size_t k = 0;
    while (k < choice.size() && ++choice[k] == n) choice[k++] = 0;
    if (k == choice.size()) break;
  }
  return out;
}

// Diagonal representation g -> diag(chi_{k_1}(g), ..., chi_{k_d}(g)).
inline MatrixRepresentation character_representation(const FiniteGroup& g, const std::vector<std::vector<Complex>>& chars,
                                                     const std::vector<Index>& picks) {
  MatrixRepresentation r;
  for (Index a = 0; a < g.order(); ++a) {
    ComplexMatrix d = ComplexMatrix::Zero(static_cast<Index>(picks.size()), static_cast<Index>(picks.size()));
    for (std::size_t i = 0; i < picks.size(); ++i)
      d(static_cast<Index>(i), static_cast<Index>(i)) = chars.at(static_cast<std::size_t>(picks[i]))[static_cast<std::size_t>(a)];
    r.push_back(d);
  }
  return r;
}

// Permutation representation of S_3 on C^3.
inline MatrixRepresentation s3_permutation_representation() {
  MatrixRepresentation r;
  for (const auto& p : FiniteGroup::s3_permutations()) {
    ComplexMatrix m = ComplexMatrix::Zero(3, 3);
    for (int i = 0; i < 3; ++i) m(p[static_cast<std::size_t>(i)], i) = 1.0;
    r.push_back(m);
  }
  return r;
}

// Two-dimensional irreducible representation of S_3: the permutation
// representation restricted to the sum-zero plane.
inline MatrixRepresentation s3_standard_representation() {
  ComplexMatrix basis(3, 2);
  basis << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(6.0), -1.0 / std::sqrt(2.0), 1.0 / std::sqrt(6.0), 0.0, -2.0 / std::sqrt(6.0);
  MatrixRepresentation r;
  for (const auto& m : s3_permutation_representation()) r.push_back(basis.adjoint() * m * basis);
  return r;
}

inline MatrixRepresentation conjugate_representation(const MatrixRepresentation& r, const ComplexMatrix& w) {
  MatrixRepresentation out;
  for (const auto& m : r) out.push_back(w * m * w.adjoint());
  return out;
}

// Action of G on A by *-automorphisms.
class GroupAction {
 public:
  GroupAction() : GroupAction(FiniteGroup::trivial(), FiniteCStarAlgebra()) {}

  GroupAction(FiniteGroup group, FiniteCStarAlgebra algebra)
      : group_(std::move(group)), algebra_(std::move(algebra)) {
    for (Index g = 0; g < group_.order(); ++g) autos_.push_back(StarHomomorphism::identity(algebra_));
  }

  GroupAction(FiniteGroup group, FiniteCStarAlgebra algebra, std::vector<StarHomomorphism> automorphisms)
      : group_(std::move(group)), algebra_(std::move(algebra)), autos_(std::move(automorphisms)) {
    if (static_cast<Index>(autos_.size()) != group_.order())
      throw StructuralError("GroupAction: one automorphism per group element required");
    for (const auto& a : autos_)
      if (a.source() != algebra_ || a.target() != algebra_) throw StructuralError("GroupAction: automorphism on wrong algebra");
  }

  static GroupAction trivial(const FiniteGroup& g, const FiniteCStarAlgebra& a) { return GroupAction(g, a); }

  // alpha_g = Ad(U_g) for unitaries U_g in A, given as block-diagonal matrices.
  static GroupAction inner(const FiniteGroup& g, const FiniteCStarAlgebra& a, const MatrixRepresentation& u) {
    if (static_cast<Index>(u.size()) != g.order()) throw StructuralError("GroupAction::inner: one unitary per element");
    std::vector<StarHomomorphism> autos;
    for (const auto& m : u) autos.push_back(StarHomomorphism::conjugation(AlgebraElement::from_block_diagonal(a, m)));
    return GroupAction(g, a, std::move(autos));
  }

  // alpha_g moves block k to block perms[g][k]; permuted blocks must have equal size.
  static GroupAction block_permutation(const FiniteGroup& g, const FiniteCStarAlgebra& a,
                                       const std::vector<std::vector<Index>>& perms) {
    if (static_cast<Index>(perms.size()) != g.order()) throw StructuralError("GroupAction::block_permutation: one permutation per element");
    std::vector<StarHomomorphism> autos;
    for (const auto& perm : perms) {
      if (static_cast<Index>(perm.size()) != a.num_blocks()) throw StructuralError("GroupAction::block_permutation: permutation must list every block");
      std::vector<bool> seen(perm.size(), false);
      for (Index k = 0; k < a.num_blocks(); ++k) {
        const Index t = perm[static_cast<std::size_t>(k)];
        if (t < 0 || t >= a.num_blocks() || seen[static_cast<std::size_t>(t)])
          throw StructuralError("GroupAction::block_permutation: not a permutation");
        seen[static_cast<std::size_t>(t)] = true;
        if (a.block_size(t) != a.block_size(k)) throw StructuralError("GroupAction::block_permutation: permuted blocks must have equal size");
      }
      autos.push_back(StarHomomorphism::from_function(a, a, [&](const AlgebraElement& x) {
        std::vector<ComplexMatrix> out(x.blocks().size());
        for (Index k = 0; k < a.num_blocks(); ++k) out[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] = x.block(k);
        return AlgebraElement(a, std::move(out));
      }));
    }
    return GroupAction(g, a, std::move(autos));
  }

  const FiniteGroup& group() const { return group_; }
  const FiniteCStarAlgebra& algebra() const { return algebra_; }
  const StarHomomorphism& automorphism(Index g) const { return autos_.at(static_cast<std::size_t>(g)); }
  const std::vector<StarHomomorphism>& automorphisms() const { return autos_; }

  AlgebraElement apply(Index g, const AlgebraElement& a) const { return automorphism(g).apply(a); }

 private:
  FiniteGroup group_;
  FiniteCStarAlgebra algebra_;
  std::vector<StarHomomorphism> autos_;
};

namespace detail {

inline double max_column_norm(const ComplexMatrix& m) {
  double r = 0.0;
  for (Index j = 0; j < m.cols(); ++j) r = std::max(r, m.col(j).norm());
  return r;
}

}  // namespace detail

inline VerificationReport verify_action(const GroupAction& act, double tol = kDefaultTolerance) {
  VerificationReport rep;
  rep.subject = "action of " + act.group().name() + " on " + act.algebra().describe();
  rep.absorb(verify_group(act.group()), "group");
  if (!rep.passed()) return rep;
  const auto& g = act.group();
  const Index d = act.algebra().linear_dim();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  const double e_res = detail::max_column_norm(act.automorphism(g.identity()).action_matrix() - id);
  rep.record("identity element acts trivially", e_res, tol);
  if (e_res > tol) rep.fail_with("alpha_e differs from the identity");
  for (Index a = 0; a < g.order(); ++a)
    for (Index b = 0; b < g.order(); ++b) {
      const ComplexMatrix lhs = act.automorphism(a).action_matrix() * act.automorphism(b).action_matrix();
      const double r = detail::max_column_norm(lhs - act.automorphism(g.mul(a, b)).action_matrix());
      const double thr = tol * (1.0 + detail::max_column_norm(lhs));
      rep.record("composition law", r, thr);
      if (r > thr) {
        std::ostringstream w;
        w << "alpha_" << a << " alpha_" << b << " != alpha_" << g.mul(a, b) << ", residual " << r;
        rep.fail_with(w.str());
      }
    }
  HomomorphismCheckOptions opt;
  opt.tolerance = tol;
  opt.check_surjective = true;
  for (Index a = 0; a < g.order(); ++a) {
    const auto h = verify_star_homomorphism(act.automorphism(a), opt);
    rep.absorb(h.report, "automorphism");
    if (!h.passed()) rep.fail_with("alpha_" + std::to_string(a) + " is not a *-automorphism");
  }
  return rep;
}

// Unitary representation g -> u_g on a Hilbert module.
class UnitaryRepresentation {
 public:
  UnitaryRepresentation() = default;

  UnitaryRepresentation(FiniteGroup group, HilbertModule module, std::vector<AdjointableOperator> unitaries)
      : group_(std::move(group)), module_(std::move(module)), unitaries_(std::move(unitaries)) {
    if (static_cast<Index>(unitaries_.size()) != group_.order())
      throw StructuralError("UnitaryRepresentation: one operator per group element required");
    for (const auto& u : unitaries_)
      if (u.domain() != module_ || u.codomain() != module_)
        throw StructuralError("UnitaryRepresentation: operator not on the module");
  }

  static UnitaryRepresentation trivial(const FiniteGroup& g, const HilbertModule& e) {
    return UnitaryRepresentation(g, e, std::vector<AdjointableOperator>(static_cast<std::size_t>(g.order()), AdjointableOperator::identity(e)));
  }

  // u_g = W (R_g (x) 1_B) W* on the free module B^n, with W unitary in M_n(B).
  static UnitaryRepresentation from_matrices(const FiniteGroup& g, const HilbertModule& e, const MatrixRepresentation& r,
                                             const ComplexMatrix& w_flat) {
    if (!e.is_free()) throw PreconditionError("UnitaryRepresentation::from_matrices: module must be free");
    const Index N = e.base().total_matrix_dim();
    std::vector<AdjointableOperator> us;
    for (const auto& m : r) {
      if (m.rows() != e.rank()) throw StructuralError("UnitaryRepresentation::from_matrices: wrong matrix size");
      us.emplace_back(e, e, w_flat * kron(m, ComplexMatrix::Identity(N, N)) * w_flat.adjoint());
    }
    return UnitaryRepresentation(g, e, std::move(us));
  }

  const FiniteGroup& group() const { return group_; }
  const HilbertModule& module() const { return module_; }
  const AdjointableOperator& at(Index g) const { return unitaries_.at(static_cast<std::size_t>(g)); }
  const std::vector<AdjointableOperator>& unitaries() const { return unitaries_; }

 private:
  FiniteGroup group_;
  HilbertModule module_;
  std::vector<AdjointableOperator> unitaries_;
};

inline VerificationReport verify_unitary_representation(const UnitaryRepresentation& u, double tol = kDefaultTolerance) {
  VerificationReport rep;
  rep.subject = "unitary representation of " + u.group().name() + " on " + u.module().describe();
  const auto& g = u.group();
  for (Index a = 0; a < g.order(); ++a) {
    const auto c = is_unitary(u.at(a), tol);
    rep.record("unitary", std::max(c.isometry_residual, c.coisometry_residual), tol);
    if (!c.unitary) rep.fail_with("u_" + std::to_string(a) + " is not unitary");
  }
  const double e_res = operator_distance(u.at(g.identity()), AdjointableOperator::identity(u.module()));
  rep.record("u_e = id", e_res, tol);
  if (e_res > tol) rep.fail_with("u_e differs from the identity");
  for (Index a = 0; a < g.order(); ++a)
    for (Index b = 0; b < g.order(); ++b) {
      const double r = operator_distance(u.at(a) * u.at(b), u.at(g.mul(a, b)));
      rep.record("group law", r, tol);
      if (r > tol) {
        std::ostringstream w;
        w << "u_" << a << " u_" << b << " != u_" << g.mul(a, b) << ", residual " << r;
        rep.fail_with(w.str());
      }
    }
  return rep;
}

// Random unitary in M_n(B), flattened.
inline ComplexMatrix random_module_unitary(Rng& rng, const FiniteCStarAlgebra& b, Index n) {
  const AlgebraElement w = random_unitary_element(rng, matrix_amplification(b, n));
  return flat_from_amplified(w, b, n);
}

// An n-dimensional representation of g built from its standard pieces:
// S_3 uses the 2- and 3-dimensional permutation-derived representations when
// they fit, otherwise a diagonal of seeded one-dimensional characters.
inline MatrixRepresentation sample_representation(Rng& rng, const FiniteGroup& g, Index n) {
  if (g.name() == "S3" && g == FiniteGroup::symmetric3()) {
    if (n == 2) return s3_standard_representation();
    if (n == 3) return s3_permutation_representation();
  }
  const auto chars = one_dimensional_characters(g);
  std::vector<Index> picks;
  std::uniform_int_distribution<Index> pick(0, static_cast<Index>(chars.size()) - 1);
  for (Index i = 0; i < n; ++i) picks.push_back(pick(rng));
  return character_representation(g, chars, picks);
}

}  // namespace prostar
