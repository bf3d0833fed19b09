#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "prostar/crossed_product.hpp"
#include "prostar/ksgns.hpp"

namespace prostar {

// Finite directed poset given by covering relations (p, q) meaning p >= q.
class DirectedPoset {
 public:
  DirectedPoset() : DirectedPoset(1, {}) {}

  DirectedPoset(Index size, std::vector<std::pair<Index, Index>> covers) : n_(size), covers_(std::move(covers)) {
    if (n_ < 1) throw StructuralError("DirectedPoset: at least one level required");
    geq_.assign(static_cast<std::size_t>(n_ * n_), false);
    for (Index p = 0; p < n_; ++p) set(p, p);
    for (const auto& [p, q] : covers_) {
      check(p);
      check(q);
      set(p, q);
    }
    for (Index k = 0; k < n_; ++k)
      for (Index i = 0; i < n_; ++i)
        for (Index j = 0; j < n_; ++j)
          if (geq(i, k) && geq(k, j)) set(i, j);
  }

  static DirectedPoset chain(Index n) {
    std::vector<std::pair<Index, Index>> c;
    for (Index p = 0; p + 1 < n; ++p) c.emplace_back(p, p + 1);
    return DirectedPoset(n, std::move(c));
  }

  Index size() const { return n_; }
  const std::vector<std::pair<Index, Index>>& covers() const { return covers_; }
  bool geq(Index p, Index q) const { return geq_[static_cast<std::size_t>(p * n_ + q)]; }

  void check(Index p) const {
    if (p < 0 || p >= n_) throw StructuralError("DirectedPoset: unknown level " + std::to_string(p));
  }

  std::optional<Index> upper_bound(Index p, Index q) const {
    check(p);
    check(q);
    for (Index r = 0; r < n_; ++r)
      if (geq(r, p) && geq(r, q)) return r;
    return std::nullopt;
  }

  // The maximum, when there is one.
  std::optional<Index> top() const {
    for (Index r = 0; r < n_; ++r) {
      bool all = true;
      for (Index p = 0; p < n_ && all; ++p) all = geq(r, p);
      if (all) return r;
    }
    return std::nullopt;
  }

  // Pairs p >= q with p != q.
  std::vector<std::pair<Index, Index>> strict_pairs() const {
    std::vector<std::pair<Index, Index>> out;
    for (Index p = 0; p < n_; ++p)
      for (Index q = 0; q < n_; ++q)
        if (p != q && geq(p, q)) out.emplace_back(p, q);
    return out;
  }

 private:
  void set(Index p, Index q) { geq_[static_cast<std::size_t>(p * n_ + q)] = true; }

  Index n_;
  std::vector<std::pair<Index, Index>> covers_;
  std::vector<bool> geq_;
};

inline VerificationReport verify_poset(const DirectedPoset& p) {
  VerificationReport rep;
  rep.subject = "poset";
  for (Index a = 0; a < p.size(); ++a)
    for (Index b = 0; b < p.size(); ++b) {
      if (a != b && p.geq(a, b) && p.geq(b, a)) {
        rep.require("antisymmetric", false);
        rep.fail_with("levels " + std::to_string(a) + " and " + std::to_string(b) + " lie on a cycle");
      }
      if (!p.upper_bound(a, b)) {
        rep.require("directed", false);
        rep.fail_with("levels " + std::to_string(a) + " and " + std::to_string(b) + " have no upper bound");
      }
    }
  rep.require("antisymmetric", true);
  rep.require("directed", true);
  return rep;
}

struct TowerEdge {
  Index from;
  Index to;
  StarHomomorphism map;
};

// Inverse system {A_p; pi_pq}. Connecting maps between non-adjacent levels
// default to the composite along the first path through the given edges.
class AlgebraTower {
 public:
  AlgebraTower() = default;

  AlgebraTower(DirectedPoset poset, std::vector<FiniteCStarAlgebra> levels, std::vector<TowerEdge> edges)
      : poset_(std::move(poset)), levels_(std::move(levels)), edges_(std::move(edges)) {
    if (static_cast<Index>(levels_.size()) != poset_.size()) throw StructuralError("AlgebraTower: one algebra per level required");
    for (const auto& e : edges_) {
      poset_.check(e.from);
      poset_.check(e.to);
      if (!poset_.geq(e.from, e.to)) throw StructuralError("AlgebraTower: edge does not follow the order");
      if (e.map.source() != level(e.from) || e.map.target() != level(e.to))
        throw StructuralError("AlgebraTower: connecting map between the wrong algebras");
    }
    for (const auto& [p, q] : poset_.strict_pairs())
      if (!path(p, q)) throw StructuralError("AlgebraTower: no connecting map from " + std::to_string(p) + " to " + std::to_string(q));
  }

  static AlgebraTower single(const FiniteCStarAlgebra& a) { return AlgebraTower(DirectedPoset(), {a}, {}); }

  // Chain 0 >= 1 >= ... with the given adjacent maps.
  static AlgebraTower chain(std::vector<FiniteCStarAlgebra> levels, std::vector<StarHomomorphism> maps) {
    std::vector<TowerEdge> e;
    for (std::size_t i = 0; i < maps.size(); ++i) e.push_back({static_cast<Index>(i), static_cast<Index>(i + 1), maps[i]});
    const Index n = static_cast<Index>(levels.size());
    return AlgebraTower(DirectedPoset::chain(n), std::move(levels), std::move(e));
  }

  const DirectedPoset& poset() const { return poset_; }
  Index size() const { return poset_.size(); }
  const FiniteCStarAlgebra& level(Index p) const {
    poset_.check(p);
    return levels_[static_cast<std::size_t>(p)];
  }
  const std::vector<TowerEdge>& edges() const { return edges_; }

  StarHomomorphism connecting(Index p, Index q) const {
    poset_.check(p);
    poset_.check(q);
    if (p == q) return StarHomomorphism::identity(level(p));
    if (!poset_.geq(p, q)) throw StructuralError("AlgebraTower: level " + std::to_string(p) + " is not above " + std::to_string(q));
    return *path(p, q);
  }

 private:
  std::optional<StarHomomorphism> path(Index p, Index q, Index depth = 0) const {
    if (depth > poset_.size()) return std::nullopt;
    for (const auto& e : edges_)
      if (e.from == p && e.to == q) return e.map;
    for (const auto& e : edges_)
      if (e.from == p && e.to != p && poset_.geq(e.to, q))
        if (auto rest = path(e.to, q, depth + 1)) return compose(*rest, e.map);
    return std::nullopt;
  }

  DirectedPoset poset_;
  std::vector<FiniteCStarAlgebra> levels_;
  std::vector<TowerEdge> edges_;
};

inline VerificationReport verify_tower(const AlgebraTower& t, double tol = kDefaultTolerance) {
  VerificationReport rep;
  rep.subject = "algebra tower";
  rep.absorb(verify_poset(t.poset()));
  HomomorphismCheckOptions hopt;
  hopt.tolerance = tol;
  for (const auto& e : t.edges()) {
    const auto h = verify_star_homomorphism(e.map, hopt);
    const std::string tag = std::to_string(e.from) + "->" + std::to_string(e.to);
    rep.absorb(h.report, "pi " + tag);
    const bool onto = column_rank(e.map.action_matrix()) == e.map.target().linear_dim();
    rep.require("surjective", onto);
    if (!onto) rep.fail_with("pi " + tag + " is not surjective");
  }
  const Index n = t.size();
  const auto& P = t.poset();
  for (Index p = 0; p < n; ++p)
    for (Index q = 0; q < n; ++q)
      for (Index r = 0; r < n; ++r) {
        if (p == q || q == r || !P.geq(p, q) || !P.geq(q, r)) continue;
        const ComplexMatrix lhs = t.connecting(q, r).action_matrix() * t.connecting(p, q).action_matrix();
        const double res = detail::max_column_norm(lhs - t.connecting(p, r).action_matrix());
        rep.record("composition", res, tol);
        if (res > tol) {
          std::ostringstream w;
          w << "chain " << p << " >= " << q << " >= " << r << ": pi_qr pi_pq differs from pi_pr by " << res;
          rep.fail_with(w.str());
        }
      }
  rep.record("composition", 0.0, tol);
  return rep;
}

// Family (a_p) with pi_pq(a_p) = a_q.
class CoherentElement {
 public:
  CoherentElement(const AlgebraTower& tower, std::vector<AlgebraElement> values)
      : tower_(&tower), values_(std::move(values)) {
    if (static_cast<Index>(values_.size()) != tower.size()) throw StructuralError("CoherentElement: one value per level required");
    for (Index p = 0; p < tower.size(); ++p)
      if (values_[static_cast<std::size_t>(p)].algebra() != tower.level(p))
        throw StructuralError("CoherentElement: value at level " + std::to_string(p) + " in the wrong algebra");
  }

  // Pushes a value at the top level down the tower.
  static CoherentElement from_top(const AlgebraTower& tower, const AlgebraElement& a) {
    const auto top = tower.poset().top();
    if (!top) throw StructuralError("CoherentElement::from_top: tower has no top level");
    if (a.algebra() != tower.level(*top)) throw StructuralError("CoherentElement::from_top: value not in the top algebra");
    std::vector<AlgebraElement> v;
    for (Index q = 0; q < tower.size(); ++q) v.push_back(tower.connecting(*top, q).apply(a));
    return CoherentElement(tower, std::move(v));
  }

  static CoherentElement identity(const AlgebraTower& tower) {
    std::vector<AlgebraElement> v;
    for (Index q = 0; q < tower.size(); ++q) v.push_back(AlgebraElement::identity(tower.level(q)));
    return CoherentElement(tower, std::move(v));
  }

  const AlgebraTower& tower() const { return *tower_; }
  const AlgebraElement& at(Index p) const {
    tower_->poset().check(p);
    return values_[static_cast<std::size_t>(p)];
  }

  double coherence_residual() const {
    double r = 0.0;
    for (const auto& [p, q] : tower_->poset().strict_pairs())
      r = std::max(r, tower_->connecting(p, q).apply(at(p)).distance(at(q)));
    return r;
  }

  CoherentElement adjoint() const { return map([](const AlgebraElement& a) { return a.adjoint(); }); }

  friend CoherentElement operator+(const CoherentElement& a, const CoherentElement& b) {
    return a.zip(b, [](const AlgebraElement& x, const AlgebraElement& y) { return x + y; });
  }
  friend CoherentElement operator*(const CoherentElement& a, const CoherentElement& b) {
    return a.zip(b, [](const AlgebraElement& x, const AlgebraElement& y) { return x * y; });
  }
  friend CoherentElement operator*(Complex s, const CoherentElement& a) {
    return a.map([s](const AlgebraElement& x) { return s * x; });
  }

  template <class F>
  CoherentElement map(F&& f) const {
    std::vector<AlgebraElement> v;
    for (const auto& x : values_) v.push_back(f(x));
    return CoherentElement(*tower_, std::move(v));
  }

 private:
  template <class F>
  CoherentElement zip(const CoherentElement& o, F&& f) const {
    if (tower_ != o.tower_) throw StructuralError("CoherentElement: different towers");
    std::vector<AlgebraElement> v;
    for (std::size_t i = 0; i < values_.size(); ++i) v.push_back(f(values_[i], o.values_[i]));
    return CoherentElement(*tower_, std::move(v));
  }

  const AlgebraTower* tower_;
  std::vector<AlgebraElement> values_;
};

// p(a) = ||a_p||.
inline double seminorm_eval(const CoherentElement& a, Index p) { return operator_norm(a.at(p)); }

inline CoherentElement random_coherent_element(Rng& rng, const AlgebraTower& t) {
  const auto top = t.poset().top();
  if (!top) throw StructuralError("random_coherent_element: tower has no top level");
  return CoherentElement::from_top(t, random_element(rng, t.level(*top)));
}

// Levelwise actions with alpha^(q)_g pi_pq = pi_pq alpha^(p)_g.
class TowerAction {
 public:
  TowerAction(const AlgebraTower& tower, FiniteGroup group, std::vector<GroupAction> levels)
      : tower_(&tower), group_(std::move(group)), levels_(std::move(levels)) {
    if (static_cast<Index>(levels_.size()) != tower.size()) throw StructuralError("TowerAction: one action per level required");
    for (Index p = 0; p < tower.size(); ++p) {
      const auto& a = levels_[static_cast<std::size_t>(p)];
      if (a.algebra() != tower.level(p) || a.group() != group_)
        throw StructuralError("TowerAction: action at level " + std::to_string(p) + " has the wrong algebra or group");
    }
  }

  // alpha^(q)_g = pi alpha_g pi^+ for pi = pi_top,q; well defined when alpha preserves ker pi.
  static TowerAction from_top(const AlgebraTower& tower, const GroupAction& alpha) {
    const auto top = tower.poset().top();
    if (!top) throw StructuralError("TowerAction::from_top: tower has no top level");
    if (alpha.algebra() != tower.level(*top)) throw StructuralError("TowerAction::from_top: action not on the top algebra");
    std::vector<GroupAction> levels;
    for (Index q = 0; q < tower.size(); ++q) {
      const auto pi = tower.connecting(*top, q);
      const ComplexMatrix& m = pi.action_matrix();
      const ComplexMatrix pinv = m.adjoint() * Eigen::PartialPivLU<ComplexMatrix>(m * m.adjoint()).inverse();
      std::vector<StarHomomorphism> autos;
      for (Index g = 0; g < alpha.group().order(); ++g)
        autos.emplace_back(tower.level(q), tower.level(q), m * alpha.automorphism(g).action_matrix() * pinv);
      levels.emplace_back(alpha.group(), tower.level(q), std::move(autos));
    }
    return TowerAction(tower, alpha.group(), std::move(levels));
  }

  const AlgebraTower& tower() const { return *tower_; }
  const FiniteGroup& group() const { return group_; }
  const GroupAction& level(Index p) const {
    tower_->poset().check(p);
    return levels_[static_cast<std::size_t>(p)];
  }

  CoherentElement apply(Index g, const CoherentElement& a) const {
    std::vector<AlgebraElement> v;
    for (Index p = 0; p < tower_->size(); ++p) v.push_back(level(p).apply(g, a.at(p)));
    return CoherentElement(*tower_, std::move(v));
  }

 private:
  const AlgebraTower* tower_;
  FiniteGroup group_;
  std::vector<GroupAction> levels_;
};

inline VerificationReport verify_tower_action(const TowerAction& act, double tol = kDefaultTolerance) {
  VerificationReport rep;
  rep.subject = "tower action";
  const auto& t = act.tower();
  for (Index p = 0; p < t.size(); ++p) rep.absorb(verify_action(act.level(p), tol), "level " + std::to_string(p));
  for (const auto& [p, q] : t.poset().strict_pairs()) {
    const ComplexMatrix& pi = t.connecting(p, q).action_matrix();
    for (Index g = 0; g < act.group().order(); ++g) {
      const double r = detail::max_column_norm(act.level(q).automorphism(g).action_matrix() * pi -
                                               pi * act.level(p).automorphism(g).action_matrix());
      rep.record("compatibility", r, tol);
      if (r > tol) rep.fail_with("alpha does not commute with pi_" + std::to_string(p) + std::to_string(q) + " at g = " + std::to_string(g));
    }
  }
  rep.record("compatibility", 0.0, tol);
  return rep;
}

// pi applied to every N_B x N_B block of a flattened matrix over B.
inline ComplexMatrix entrywise(const StarHomomorphism& pi, const ComplexMatrix& flat) {
  const Index Ns = pi.source().total_matrix_dim(), Nt = pi.target().total_matrix_dim();
  if (flat.rows() % Ns != 0 || flat.cols() % Ns != 0) throw StructuralError("entrywise: shape is not a multiple of the block size");
  const Index r = flat.rows() / Ns, c = flat.cols() / Ns;
  ComplexMatrix out(r * Nt, c * Nt);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j)
      out.block(i * Nt, j * Nt, Nt, Nt) =
          pi.apply(AlgebraElement::from_block_diagonal(pi.source(), flat.block(i * Ns, j * Ns, Ns, Ns))).block_diagonal();
  return out;
}

// {E_p; sigma_pq} over a B-side tower; sigma_pq is pi_pq on each coordinate.
class ModuleTower {
 public:
  ModuleTower(const AlgebraTower& base, std::vector<HilbertModule> modules) : base_(&base), modules_(std::move(modules)) {
    if (static_cast<Index>(modules_.size()) != base.size()) throw StructuralError("ModuleTower: one module per level required");
    for (Index p = 0; p < base.size(); ++p) {
      const auto& m = modules_[static_cast<std::size_t>(p)];
      if (m.base() != base.level(p)) throw StructuralError("ModuleTower: module at level " + std::to_string(p) + " over the wrong algebra");
      if (m.rank() != modules_.front().rank()) throw StructuralError("ModuleTower: ambient ranks differ between levels");
      bases_.push_back(complex_basis(m));
    }
  }

  // E_q = pi^(n)(P) B_q^n from E = P B^n at the top level.
  static ModuleTower from_top(const AlgebraTower& base, const HilbertModule& e) {
    const auto top = base.poset().top();
    if (!top) throw StructuralError("ModuleTower::from_top: tower has no top level");
    if (e.base() != base.level(*top)) throw StructuralError("ModuleTower::from_top: module not over the top algebra");
    std::vector<HilbertModule> ms;
    for (Index q = 0; q < base.size(); ++q) {
      if (q == *top) {
        ms.push_back(e);
        continue;
      }
      ComplexMatrix p = entrywise(base.connecting(*top, q), e.projection());
      if (e.is_free()) ms.emplace_back(base.level(q), e.rank());
      else ms.emplace_back(base.level(q), e.rank(), hermitian_part(p));
    }
    return ModuleTower(base, std::move(ms));
  }

  const AlgebraTower& base() const { return *base_; }
  Index size() const { return base_->size(); }
  const HilbertModule& module(Index p) const {
    base_->poset().check(p);
    return modules_[static_cast<std::size_t>(p)];
  }
  const ComplexBasis& basis(Index p) const {
    base_->poset().check(p);
    return bases_[static_cast<std::size_t>(p)];
  }

  ModuleElement sigma(Index p, Index q, const ModuleElement& x) const {
    if (x.module() != module(p)) throw StructuralError("ModuleTower::sigma: element not in the level module");
    return ModuleElement(module(q), entrywise(base_->connecting(p, q), x.flat()));
  }

 private:
  const AlgebraTower* base_;
  std::vector<HilbertModule> modules_;
  std::vector<ComplexBasis> bases_;
};

inline VerificationReport verify_tower(const ModuleTower& t, double tol = kDefaultTolerance) {
  VerificationReport rep;
  rep.subject = "module tower";
  rep.absorb(verify_tower(t.base(), tol), "base");
  const auto& P = t.base().poset();
  for (const auto& [p, q] : P.strict_pairs()) {
    const auto pi = t.base().connecting(p, q);
    const auto& ep = t.module(p);
    const double pr = (entrywise(pi, ep.projection()) - t.module(q).projection()).norm();
    rep.record("projection coherent", pr, tol * (1.0 + ep.projection().norm()));
    const auto& basis = t.basis(p);
    std::vector<ModuleElement> xs, ys;
    for (Index k = 0; k < basis.size(); ++k) {
      xs.push_back(basis.element(k));
      ys.push_back(t.sigma(p, q, xs.back()));
    }
    double ip = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = 0; j < xs.size(); ++j)
        ip = std::max(ip, inner_product(ys[i], ys[j]).distance(pi.apply(inner_product(xs[i], xs[j]))));
    rep.record("inner product compatible", ip, tol);
    if (ip > tol) rep.fail_with("<sigma x, sigma y> differs from pi<x, y> for levels " + std::to_string(p) + " >= " + std::to_string(q));
    for (Index r = 0; r < t.size(); ++r) {
      if (r == q || !P.geq(q, r)) continue;
      double c = 0.0;
      for (const auto& x : xs)
        c = std::max(c, (t.sigma(q, r, t.sigma(p, q, x)).flat() - t.sigma(p, r, x).flat()).norm());
      rep.record("sigma composition", c, tol);
    }
  }
  rep.record("inner product compatible", 0.0, tol);
  return rep;
}

// (pi_pq)_*(T_p): pi applied entrywise; checked against sigma(T x) = T_q sigma(x).
inline AdjointableOperator induced_map(const ModuleTower& mt, Index p, Index q, const AdjointableOperator& t,
                                       double tol = 1e-9) {
  if (!mt.base().poset().geq(p, q)) throw StructuralError("induced_map: level " + std::to_string(p) + " is not above " + std::to_string(q));
  if (t.domain() != mt.module(p) || t.codomain() != mt.module(p))
    throw StructuralError("induced_map: operator does not act on the level-" + std::to_string(p) + " module");
  if (p == q) return t;
  const auto pi = mt.base().connecting(p, q);
  AdjointableOperator tq(mt.module(q), mt.module(q), entrywise(pi, t.flat()));
  const auto& basis = mt.basis(p);
  const double scale = 1.0 + matrix_operator_norm(t.flat());
  for (Index k = 0; k < basis.size(); ++k) {
    const auto x = basis.element(k);
    const double r = (mt.sigma(p, q, t.apply(x)).flat() - tq.apply(mt.sigma(p, q, x)).flat()).norm();
    if (r > tol * scale) {
      std::ostringstream w;
      w << "induced_map: T does not respect ker sigma_" << p << q << " (basis vector " << k << ", residual " << r << ")";
      throw StructuralError(w.str());
    }
  }
  return tq;
}

// rho_q = (pi_q)_* rho on the level-q module.
inline CompletelyPositiveMap push_cp(const ModuleTower& mt, Index p, Index q, const CompletelyPositiveMap& rho) {
  std::vector<AdjointableOperator> vals;
  for (const auto& v : rho.basis_values()) vals.push_back(induced_map(mt, p, q, v));
  return CompletelyPositiveMap(rho.source(), mt.module(q), std::move(vals));
}

inline UnitaryRepresentation push_representation(const ModuleTower& mt, Index p, Index q, const UnitaryRepresentation& u) {
  std::vector<AdjointableOperator> us;
  for (const auto& x : u.unitaries()) us.push_back(induced_map(mt, p, q, x));
  return UnitaryRepresentation(u.group(), mt.module(q), std::move(us));
}

// rho = rho_p o pi_p for a map defined at one level of an A-side tower.
inline CompletelyPositiveMap pull_back_cp(const CompletelyPositiveMap& rho_p, const StarHomomorphism& pi_p) {
  if (pi_p.target() != rho_p.source()) throw StructuralError("pull_back_cp: homomorphism does not land in the source of rho");
  return CompletelyPositiveMap::from_function(pi_p.source(), rho_p.target(),
                                              [&](const AlgebraElement& a) { return rho_p.apply(pi_p.apply(a)); });
}

struct LevelwiseDilation {
  std::vector<CovariantDilation> levels;
  std::map<std::pair<Index, Index>, ComplexMatrix> connecting;  // E_rho coordinates, level p -> level q
  VerificationReport report;
};

// Dilates rho (given at the top level of the B-tower) independently at every
// level and checks the connecting maps [a (x) xi] -> [a (x) sigma(xi)].
inline LevelwiseDilation levelwise_ksgns_coherence(const CompletelyPositiveMap& rho, const GroupAction& alpha,
                                                   const UnitaryRepresentation& u, const ModuleTower& mt,
                                                   double tol = 1e-9) {
  const auto tr = verify_tower(mt, tol);
  if (!tr.passed()) throw PreconditionError("levelwise_ksgns_coherence: module tower does not verify" + (tr.witness ? ": " + *tr.witness : std::string()));
  const auto top = mt.base().poset().top();
  if (!top) throw StructuralError("levelwise_ksgns_coherence: tower has no top level");
  if (rho.target() != mt.module(*top)) throw StructuralError("levelwise_ksgns_coherence: rho is not on the top-level module");
  LevelwiseDilation out;
  auto& rep = out.report;
  rep.subject = "levelwise KSGNS coherence";
  const Index n = mt.size();
  for (Index q = 0; q < n; ++q) {
    const std::string lv = "level " + std::to_string(q);
    const auto rq = push_cp(mt, *top, q, rho);
    const auto uq = push_representation(mt, *top, q, u);
    const auto cert = verify_completely_positive(rq, kDefaultTolerance);
    if (!cert.is_cp) throw PreconditionError("levelwise_ksgns_coherence: " + lv + " map is not completely positive");
    const auto cov = check_covariance(rq, alpha, uq, kDefaultTolerance);
    if (!cov.passed()) throw PreconditionError("levelwise_ksgns_coherence: " + lv + " is not covariant");
    out.levels.push_back(covariant_dilation(rq.with_certification(cert), alpha, uq));
    const auto& d = out.levels.back();
    rep.absorb(d.report, lv);
    rep.notes.push_back(lv + ": dilation dimension " + std::to_string(d.dimension()) + ", null space " +
                        std::to_string(d.core.quotient.null_dimension()));
  }

  const auto& a = alpha.algebra();
  const Index dA = a.linear_dim();
  for (const auto& [p, q] : mt.base().poset().strict_pairs()) {
    const auto& dp = out.levels[static_cast<std::size_t>(p)];
    const auto& dq = out.levels[static_cast<std::size_t>(q)];
    const auto& gp = dp.core.gram;
    const auto& gq = dq.core.gram;
    const std::string tag = std::to_string(p) + "->" + std::to_string(q);

    // sigma on complex coordinates of E.
    ComplexMatrix cs(gq.module_dim, gp.module_dim);
    for (Index t = 0; t < gp.module_dim; ++t)
      cs.col(t) = gq.module_basis.coordinates(mt.sigma(p, q, gp.module_basis.element(t)).flat());
    const ComplexMatrix span = kron(ComplexMatrix::Identity(dA, dA), cs);
    const ComplexMatrix c = dq.core.quotient.to_coordinates() * span * dp.core.quotient.from_coordinates();
    out.connecting[{p, q}] = c;
    double leak = 0.0;
    if (dp.core.quotient.null_dimension() > 0 && dq.core.quotient.lambda_max > 0.0) {
      const ComplexMatrix y = span * dp.core.quotient.null_space;
      for (Index k = 0; k < y.cols(); ++k) leak = std::max(leak, std::abs((y.col(k).adjoint() * gq.scalar * y.col(k))(0, 0)));
      leak /= dq.core.quotient.lambda_max;
    }
    rep.record("connecting map well-defined", leak, tol);
    rep.require("connecting map onto", column_rank(c, 1e-9) == dq.dimension());

    // Module compatibility: <C x, C y> = pi <x, y> on basis vectors of E_rho at level p.
    const auto pi = mt.base().connecting(p, q);
    std::vector<ModuleElement> xs, ys;
    for (Index k = 0; k < dp.dimension(); ++k) {
      xs.push_back(dp.core.basis.element(k));
      ys.push_back(ModuleElement(dq.module(), unvec(dq.core.basis.vectors * c.col(k), dq.module().flat_dim(),
                                                    dq.module().base().total_matrix_dim())));
    }
    double ip = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = 0; j < xs.size(); ++j)
        ip = std::max(ip, inner_product(ys[i], ys[j]).distance(pi.apply(inner_product(xs[i], xs[j]))));
    rep.record("connecting map inner product", ip, tol);

    auto coords = [](const AdjointableOperator& t, const ComplexBasis& dom, const ComplexBasis& cod) {
      return operator_coordinates(t, dom, cod);
    };
    double phi = 0.0;
    for (Index i = 0; i < dA; ++i) {
      const ComplexMatrix lp = coords(dp.representation().basis_value(i), dp.core.basis, dp.core.basis);
      const ComplexMatrix lq = coords(dq.representation().basis_value(i), dq.core.basis, dq.core.basis);
      phi = std::max(phi, (c * lp - lq * c).norm());
    }
    rep.record("Phi square " + tag, phi, tol);
    const ComplexMatrix vp = coords(dp.connector(), gp.module_basis, dp.core.basis);
    const ComplexMatrix vq = coords(dq.connector(), gq.module_basis, dq.core.basis);
    rep.record("V square " + tag, (c * vp - vq * cs).norm(), tol);
    double vg = 0.0;
    for (Index g = 0; g < alpha.group().order(); ++g) {
      const ComplexMatrix a1 = coords(dp.v.at(g), dp.core.basis, dp.core.basis);
      const ComplexMatrix a2 = coords(dq.v.at(g), dq.core.basis, dq.core.basis);
      vg = std::max(vg, (c * a1 - a2 * c).norm());
    }
    rep.record("v square " + tag, vg, tol);
  }
  return out;
}

// Integrated forms of the levelwise pushes of (Phi, v) and the identity
// pi_pq (Phi_p x v_p)(f) = (Phi_q x v_q)(f) on delta_g (x) a_i.
inline VerificationReport levelwise_integrated_coherence(const CompletelyPositiveMap& phi, const UnitaryRepresentation& v,
                                                         const ModuleTower& mt, const CrossedProductRealization& xp,
                                                         double tol = 1e-9) {
  const auto top = mt.base().poset().top();
  if (!top) throw StructuralError("levelwise_integrated_coherence: tower has no top level");
  VerificationReport rep;
  rep.subject = "levelwise integrated-form coherence";
  std::vector<IntegratedForm> forms;
  for (Index q = 0; q < mt.size(); ++q) {
    const auto fq = push_cp(mt, *top, q, phi);
    const auto vq = push_representation(mt, *top, q, v);
    forms.push_back(integrated_form(fq, vq, xp, tol));
    rep.absorb(forms.back().report, "level " + std::to_string(q));
  }
  const auto& alpha = *xp.system;
  const auto& a = alpha.algebra();
  for (const auto& [p, q] : mt.base().poset().strict_pairs()) {
    double r = 0.0;
    for (Index g = 0; g < alpha.group().order(); ++g)
      for (Index i = 0; i < a.linear_dim(); ++i) {
        const auto f = ConvolutionElement::delta(xp.system, g, AlgebraElement::basis(a, i));
        const auto lhs = induced_map(mt, p, q, forms[static_cast<std::size_t>(p)].apply(f));
        r = std::max(r, matrix_operator_norm(lhs.flat() - forms[static_cast<std::size_t>(q)].apply(f).flat()));
      }
    rep.record("connecting identity " + std::to_string(p) + "->" + std::to_string(q), r, tol);
  }
  rep.record("connecting identity", 0.0, tol);
  return rep;
}

}  // namespace prostar
