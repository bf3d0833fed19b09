#pragma once

#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "prostar/algebra.hpp"
#include "prostar/report.hpp"

namespace prostar {

// Matrices over B are stored flattened: an m x n matrix over B becomes an
// (m*N_B) x (n*N_B) complex matrix whose N_B x N_B blocks are block-diagonal
// in the pattern of B. Module elements of B^n are (n*N_B) x N_B matrices.

namespace detail {

// Largest entry outside the block pattern of B.
inline double pattern_defect(const FiniteCStarAlgebra& b, const ComplexMatrix& flat) {
  const Index N = b.total_matrix_dim();
  double d = 0.0;
  for (Index j = 0; j < flat.cols(); ++j)
    for (Index i = 0; i < flat.rows(); ++i)
      if (b.block_of_matrix_index(i % N) != b.block_of_matrix_index(j % N)) d = std::max(d, std::abs(flat(i, j)));
  return d;
}

inline ComplexMatrix grid_to_flat(const FiniteCStarAlgebra& b, const std::vector<std::vector<AlgebraElement>>& grid,
                                  Index rows, Index cols) {
  const Index N = b.total_matrix_dim();
  if (static_cast<Index>(grid.size()) != rows) throw StructuralError("operator grid: wrong number of rows");
  ComplexMatrix f(rows * N, cols * N);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = grid[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != cols) throw StructuralError("operator grid: wrong number of columns");
    for (Index j = 0; j < cols; ++j) {
      const auto& e = row[static_cast<std::size_t>(j)];
      if (e.algebra() != b) throw StructuralError("operator grid: entry not in base algebra");
      f.block(i * N, j * N, N, N) = e.block_diagonal();
    }
  }
  return f;
}

}  // namespace detail

// M_n(B) in standard form: block j of B becomes M_{n*m_j}, whose row
// i*m_j + r is flat row i*N_B + off_j + r.
inline FiniteCStarAlgebra matrix_amplification(const FiniteCStarAlgebra& b, Index n) {
  std::vector<Index> sizes;
  for (Index m : b.block_sizes()) sizes.push_back(n * m);
  return FiniteCStarAlgebra(sizes);
}

// perm[k] = flat index of the k-th row of the standard-form block diagonal.
inline std::vector<Index> amplification_permutation(const FiniteCStarAlgebra& b, Index n) {
  const Index N = b.total_matrix_dim();
  std::vector<Index> perm;
  for (Index j = 0; j < b.num_blocks(); ++j)
    for (Index i = 0; i < n; ++i)
      for (Index r = 0; r < b.block_size(j); ++r) perm.push_back(i * N + b.matrix_offset(j) + r);
  return perm;
}

inline ComplexMatrix flat_from_amplified(const AlgebraElement& x, const FiniteCStarAlgebra& b, Index n) {
  if (x.algebra() != matrix_amplification(b, n)) throw StructuralError("flat_from_amplified: element not in M_n(B)");
  const auto perm = amplification_permutation(b, n);
  const ComplexMatrix bd = x.block_diagonal();
  const Index d = bd.rows();
  ComplexMatrix f = ComplexMatrix::Zero(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) f(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) = bd(i, j);
  return f;
}

inline AlgebraElement amplified_from_flat(const ComplexMatrix& f, const FiniteCStarAlgebra& b, Index n) {
  const FiniteCStarAlgebra amp = matrix_amplification(b, n);
  if (f.rows() != amp.total_matrix_dim() || f.cols() != amp.total_matrix_dim())
    throw StructuralError("amplified_from_flat: wrong size");
  const auto perm = amplification_permutation(b, n);
  const Index d = f.rows();
  ComplexMatrix bd(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) bd(i, j) = f(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  return AlgebraElement::from_block_diagonal(amp, bd);
}

// Zeroes entries outside the block pattern of B.
inline ComplexMatrix restrict_to_pattern(const FiniteCStarAlgebra& b, ComplexMatrix f) {
  const Index N = b.total_matrix_dim();
  for (Index j = 0; j < f.cols(); ++j)
    for (Index i = 0; i < f.rows(); ++i)
      if (b.block_of_matrix_index(i % N) != b.block_of_matrix_index(j % N)) f(i, j) = 0.0;
  return f;
}

// E = P * B^n for a projection P in M_n(B).
class HilbertModule {
 public:
  HilbertModule() : HilbertModule(FiniteCStarAlgebra(), 1) {}

  HilbertModule(FiniteCStarAlgebra base, Index rank) : base_(std::move(base)), rank_(rank), free_(true) {
    if (rank_ < 1) throw StructuralError("HilbertModule: ambient rank must be positive");
    projection_ = ComplexMatrix::Identity(flat_dim(), flat_dim());
  }

  HilbertModule(FiniteCStarAlgebra base, Index rank, ComplexMatrix flat_projection, double tol = 1e-9)
      : base_(std::move(base)), rank_(rank), projection_(std::move(flat_projection)), free_(false) {
    if (rank_ < 1) throw StructuralError("HilbertModule: ambient rank must be positive");
    if (projection_.rows() != flat_dim() || projection_.cols() != flat_dim())
      throw StructuralError("HilbertModule: projection has wrong shape");
    require_finite(projection_, "HilbertModule");
    const double scale = 1.0 + projection_.norm();
    if (detail::pattern_defect(base_, projection_) > tol * scale)
      throw PreconditionError("HilbertModule: projection entries are not in the base algebra");
    if (hermitian_defect(projection_) > tol * scale || (projection_ * projection_ - projection_).norm() > tol * scale)
      throw PreconditionError("HilbertModule: range projection is not a self-adjoint idempotent");
    free_ = (projection_ - ComplexMatrix::Identity(flat_dim(), flat_dim())).norm() <= 1e-14;
  }

  static HilbertModule from_grid(const FiniteCStarAlgebra& base, const std::vector<std::vector<AlgebraElement>>& p) {
    const Index n = static_cast<Index>(p.size());
    return HilbertModule(base, n, detail::grid_to_flat(base, p, n, n));
  }

  const FiniteCStarAlgebra& base() const { return base_; }
  Index rank() const { return rank_; }
  Index flat_dim() const { return rank_ * base_.total_matrix_dim(); }
  const ComplexMatrix& projection() const { return projection_; }
  bool is_free() const { return free_; }

  AlgebraElement projection_entry(Index i, Index j) const {
    const Index N = base_.total_matrix_dim();
    return AlgebraElement::from_block_diagonal(base_, projection_.block(i * N, j * N, N, N));
  }

  friend bool operator==(const HilbertModule& a, const HilbertModule& b) {
    return a.base_ == b.base_ && a.rank_ == b.rank_ && (a.projection_ - b.projection_).norm() <= 1e-9 * (1.0 + a.projection_.norm());
  }
  friend bool operator!=(const HilbertModule& a, const HilbertModule& b) { return !(a == b); }

  std::string describe() const {
    std::ostringstream s;
    s << (free_ ? "" : "P.") << "(" << base_.describe() << ")^" << rank_;
    return s.str();
  }

 private:
  FiniteCStarAlgebra base_;
  Index rank_;
  ComplexMatrix projection_;
  bool free_;
};

class ModuleElement {
 public:
  ModuleElement(HilbertModule module, ComplexMatrix flat, double tol = 1e-9)
      : module_(std::move(module)), flat_(std::move(flat)) {
    if (flat_.rows() != module_.flat_dim() || flat_.cols() != module_.base().total_matrix_dim())
      throw StructuralError("ModuleElement: flat shape does not match module");
    require_finite(flat_, "ModuleElement");
    const double scale = 1.0 + flat_.norm();
    if (detail::pattern_defect(module_.base(), flat_) > tol * scale)
      throw StructuralError("ModuleElement: coordinates are not in the base algebra");
    if (!module_.is_free() && (module_.projection() * flat_ - flat_).norm() > tol * scale)
      throw PreconditionError("ModuleElement: element is not in the range of the module projection");
  }

  static ModuleElement from_coordinates(const HilbertModule& m, const std::vector<AlgebraElement>& coords) {
    if (static_cast<Index>(coords.size()) != m.rank()) throw StructuralError("ModuleElement: wrong number of coordinates");
    const Index N = m.base().total_matrix_dim();
    ComplexMatrix f(m.flat_dim(), N);
    for (Index i = 0; i < m.rank(); ++i) {
      if (coords[static_cast<std::size_t>(i)].algebra() != m.base())
        throw StructuralError("ModuleElement: coordinate not in base algebra");
      f.block(i * N, 0, N, N) = coords[static_cast<std::size_t>(i)].block_diagonal();
    }
    return ModuleElement(m, std::move(f));
  }

  static ModuleElement zero(const HilbertModule& m) {
    return ModuleElement(m, ComplexMatrix::Zero(m.flat_dim(), m.base().total_matrix_dim()));
  }

  const HilbertModule& module() const { return module_; }
  const ComplexMatrix& flat() const { return flat_; }

  AlgebraElement coordinate(Index i) const {
    const Index N = module_.base().total_matrix_dim();
    return AlgebraElement::from_block_diagonal(module_.base(), flat_.block(i * N, 0, N, N));
  }

  friend ModuleElement operator+(const ModuleElement& a, const ModuleElement& b) {
    a.same_module(b);
    return ModuleElement(a.module_, a.flat_ + b.flat_);
  }
  friend ModuleElement operator-(const ModuleElement& a, const ModuleElement& b) {
    a.same_module(b);
    return ModuleElement(a.module_, a.flat_ - b.flat_);
  }
  friend ModuleElement operator*(Complex s, const ModuleElement& a) { return ModuleElement(a.module_, s * a.flat_); }

 private:
  void same_module(const ModuleElement& o) const {
    if (module_ != o.module_) throw StructuralError("ModuleElement: module mismatch");
  }
  HilbertModule module_;
  ComplexMatrix flat_;
};

// T in L_B(E, F), stored as the flattened m x n matrix over B with Q T P = T.
class AdjointableOperator {
 public:
  AdjointableOperator() : AdjointableOperator(HilbertModule(), HilbertModule(), ComplexMatrix::Zero(1, 1)) {}

  AdjointableOperator(HilbertModule domain, HilbertModule codomain, ComplexMatrix flat, double tol = 1e-8)
      : domain_(std::move(domain)), codomain_(std::move(codomain)), flat_(std::move(flat)) {
    if (domain_.base() != codomain_.base()) throw StructuralError("AdjointableOperator: modules over different algebras");
    if (flat_.rows() != codomain_.flat_dim() || flat_.cols() != domain_.flat_dim())
      throw StructuralError("AdjointableOperator: matrix shape does not match modules");
    require_finite(flat_, "AdjointableOperator");
    const double scale = 1.0 + flat_.norm();
    if (detail::pattern_defect(domain_.base(), flat_) > tol * scale)
      throw StructuralError("AdjointableOperator: entries are not in the base algebra");
    if (!domain_.is_free() || !codomain_.is_free()) {
      const double corner = (codomain_.projection() * flat_ * domain_.projection() - flat_).norm();
      if (corner > tol * scale) throw PreconditionError("AdjointableOperator: corner condition Q T P = T fails");
    }
  }

  static AdjointableOperator from_grid(const HilbertModule& domain, const HilbertModule& codomain,
                                       const std::vector<std::vector<AlgebraElement>>& grid) {
    return AdjointableOperator(domain, codomain, detail::grid_to_flat(domain.base(), grid, codomain.rank(), domain.rank()));
  }

  static AdjointableOperator identity(const HilbertModule& e) { return AdjointableOperator(e, e, e.projection()); }

  static AdjointableOperator zero(const HilbertModule& domain, const HilbertModule& codomain) {
    return AdjointableOperator(domain, codomain, ComplexMatrix::Zero(codomain.flat_dim(), domain.flat_dim()));
  }

  const HilbertModule& domain() const { return domain_; }
  const HilbertModule& codomain() const { return codomain_; }
  const ComplexMatrix& flat() const { return flat_; }

  AlgebraElement entry(Index i, Index j) const {
    const Index N = domain_.base().total_matrix_dim();
    return AlgebraElement::from_block_diagonal(domain_.base(), flat_.block(i * N, j * N, N, N));
  }

  ModuleElement apply(const ModuleElement& x) const {
    if (x.module() != domain_) throw StructuralError("AdjointableOperator::apply: argument not in domain");
    return ModuleElement(codomain_, flat_ * x.flat());
  }
  ModuleElement operator()(const ModuleElement& x) const { return apply(x); }

  AdjointableOperator adjoint() const { return AdjointableOperator(codomain_, domain_, flat_.adjoint()); }

  friend AdjointableOperator operator+(const AdjointableOperator& a, const AdjointableOperator& b) {
    a.same_shape(b);
    return AdjointableOperator(a.domain_, a.codomain_, a.flat_ + b.flat_);
  }
  friend AdjointableOperator operator-(const AdjointableOperator& a, const AdjointableOperator& b) {
    a.same_shape(b);
    return AdjointableOperator(a.domain_, a.codomain_, a.flat_ - b.flat_);
  }
  friend AdjointableOperator operator*(Complex s, const AdjointableOperator& a) {
    return AdjointableOperator(a.domain_, a.codomain_, s * a.flat_);
  }
  friend AdjointableOperator operator*(double s, const AdjointableOperator& a) { return Complex(s, 0.0) * a; }

  // Composition S * T = S o T.
  friend AdjointableOperator operator*(const AdjointableOperator& s, const AdjointableOperator& t) {
    if (t.codomain_ != s.domain_) throw StructuralError("compose_adjointable: codomain/domain mismatch");
    return AdjointableOperator(t.domain_, s.codomain_, s.flat_ * t.flat_);
  }

 private:
  void same_shape(const AdjointableOperator& o) const {
    if (domain_ != o.domain_ || codomain_ != o.codomain_) throw StructuralError("AdjointableOperator: shape mismatch");
  }
  HilbertModule domain_;
  HilbertModule codomain_;
  ComplexMatrix flat_;
};

inline AlgebraElement inner_product(const ModuleElement& x, const ModuleElement& y) {
  if (x.module() != y.module()) throw StructuralError("inner_product: module mismatch");
  return AlgebraElement::from_block_diagonal(x.module().base(), x.flat().adjoint() * y.flat());
}

inline ModuleElement module_action(const ModuleElement& x, const AlgebraElement& b) {
  if (b.algebra() != x.module().base()) throw StructuralError("module_action: algebra mismatch");
  return ModuleElement(x.module(), x.flat() * b.block_diagonal());
}

inline AdjointableOperator compose_adjointable(const AdjointableOperator& s, const AdjointableOperator& t) { return s * t; }

inline AdjointableOperator adjoint_op(const AdjointableOperator& t) { return t.adjoint(); }

inline double element_norm(const ModuleElement& x) { return std::sqrt(operator_norm(inner_product(x, x))); }

// Q T P = T, so the largest singular value of the flattened matrix is the
// norm of T restricted to the range of P.
inline double operator_seminorm(const AdjointableOperator& t) { return matrix_operator_norm(t.flat()); }

// Operator-norm distance between two operators of the same shape.
inline double operator_distance(const AdjointableOperator& a, const AdjointableOperator& b) {
  if (a.domain() != b.domain() || a.codomain() != b.codomain()) throw StructuralError("operator_distance: shape mismatch");
  return matrix_operator_norm(a.flat() - b.flat());
}

struct UnitaryCheck {
  bool unitary = false;
  double isometry_residual = 0.0;   // ||T*T - id_domain||
  double coisometry_residual = 0.0; // ||TT* - id_codomain||
};

inline UnitaryCheck is_unitary(const AdjointableOperator& t, double tol = kDefaultTolerance) {
  UnitaryCheck c;
  c.isometry_residual = matrix_operator_norm(t.flat().adjoint() * t.flat() - t.domain().projection());
  c.coisometry_residual = matrix_operator_norm(t.flat() * t.flat().adjoint() - t.codomain().projection());
  c.unitary = c.isometry_residual <= tol && c.coisometry_residual <= tol;
  return c;
}

// Complex dimension of P*B^n: sum over blocks j of B of m_j * rank(P_j).
inline Index complex_dimension(const HilbertModule& e) {
  const auto& b = e.base();
  const Index N = b.total_matrix_dim();
  Index d = 0;
  for (Index k = 0; k < b.num_blocks(); ++k) {
    const Index m = b.block_size(k), o = b.matrix_offset(k);
    double tr = 0.0;
    for (Index i = 0; i < e.rank(); ++i)
      for (Index r = 0; r < m; ++r) tr += e.projection()(i * N + o + r, i * N + o + r).real();
    d += m * static_cast<Index>(std::llround(tr));
  }
  return d;
}

// Matrix units placed in one coordinate of B^n; trace-orthonormal.
inline ComplexMatrix standard_module_unit(const FiniteCStarAlgebra& b, Index rank, Index coord, Index basis_index) {
  const Index N = b.total_matrix_dim();
  const auto bi = b.basis_index(basis_index);
  ComplexMatrix f = ComplexMatrix::Zero(rank * N, N);
  f(coord * N + b.matrix_offset(bi.block) + bi.row, b.matrix_offset(bi.block) + bi.col) = 1.0;
  return f;
}

// A basis of E as a complex vector space, orthonormal for Re/Im of
// tr<x, y>. Columns of `vectors` are vec() of the flattened elements.
struct ComplexBasis {
  HilbertModule module;
  ComplexMatrix vectors;

  Index size() const { return vectors.cols(); }

  ModuleElement element(Index k) const {
    return ModuleElement(module, unvec(vectors.col(k), module.flat_dim(), module.base().total_matrix_dim()));
  }
  ComplexMatrix flat(Index k) const { return unvec(vectors.col(k), module.flat_dim(), module.base().total_matrix_dim()); }

  // Coordinates of an element of E.
  ComplexVector coordinates(const ComplexMatrix& flat_element) const { return vectors.adjoint() * vec(flat_element); }
};

inline ComplexBasis complex_basis(const HilbertModule& e) {
  const auto& b = e.base();
  const Index N = b.total_matrix_dim();
  const Index amb = e.rank() * b.linear_dim();
  ComplexMatrix units(e.flat_dim() * N, amb);
  for (Index i = 0; i < e.rank(); ++i)
    for (Index k = 0; k < b.linear_dim(); ++k) units.col(i * b.linear_dim() + k) = vec(standard_module_unit(b, e.rank(), i, k));
  if (e.is_free()) return ComplexBasis{e, std::move(units)};

  // Matrix of x -> P x on the standard units, then its range.
  ComplexMatrix m(amb, amb);
  for (Index l = 0; l < amb; ++l) {
    const ComplexMatrix px = e.projection() * unvec(units.col(l), e.flat_dim(), N);
    m.col(l) = units.adjoint() * vec(px);
  }
  const auto eig = hermitian_eigendecomposition(hermitian_part(m));
  std::vector<Index> keep;
  for (Index i = 0; i < amb; ++i)
    if (eig.values(i) > 0.5) keep.push_back(i);
  ComplexMatrix vecs(e.flat_dim() * N, static_cast<Index>(keep.size()));
  for (std::size_t t = 0; t < keep.size(); ++t) vecs.col(static_cast<Index>(t)) = units * eig.vectors.col(keep[t]);
  if (static_cast<Index>(keep.size()) != complex_dimension(e))
    throw NumericalError("complex_basis: basis size disagrees with the rank of the projection");
  return ComplexBasis{e, std::move(vecs)};
}

// The B-linear operator F <- E whose complex matrix in the given bases is c
// (rows: codomain basis, cols: domain basis). The complex map must be B-linear
// for the result to represent it; operator_coordinates recovers c in that case.
inline AdjointableOperator operator_from_coordinates(const ComplexBasis& dom, const ComplexBasis& cod,
                                                     const ComplexMatrix& c) {
  if (c.rows() != cod.size() || c.cols() != dom.size())
    throw StructuralError("operator_from_coordinates: coordinate matrix has wrong shape");
  const auto& b = dom.module.base();
  const Index N = b.total_matrix_dim();
  const HilbertModule& e = dom.module;
  ComplexMatrix flat(cod.module.flat_dim(), e.flat_dim());
  const ComplexMatrix mapped = cod.vectors * c;
  for (Index j = 0; j < e.rank(); ++j) {
    const ComplexMatrix u = e.projection().middleCols(j * N, N);
    const ComplexVector col = mapped * (dom.vectors.adjoint() * vec(u));
    flat.middleCols(j * N, N) = unvec(col, cod.module.flat_dim(), N);
  }
  return AdjointableOperator(e, cod.module, restrict_to_pattern(b, std::move(flat)));
}

inline ComplexMatrix operator_coordinates(const AdjointableOperator& t, const ComplexBasis& dom, const ComplexBasis& cod) {
  const Index N = dom.module.base().total_matrix_dim();
  ComplexMatrix c(cod.size(), dom.size());
  for (Index k = 0; k < dom.size(); ++k) {
    const ComplexMatrix img = t.flat() * unvec(dom.vectors.col(k), dom.module.flat_dim(), N);
    c.col(k) = cod.vectors.adjoint() * vec(img);
  }
  return c;
}

// Exhaustive check of <T x, y> = <x, T* y> on the complex bases.
inline double adjointability_residual(const AdjointableOperator& t) {
  const auto bd = complex_basis(t.domain());
  const auto bc = complex_basis(t.codomain());
  const ComplexMatrix ts = t.flat().adjoint();
  double r = 0.0;
  for (Index k = 0; k < bd.size(); ++k)
    for (Index l = 0; l < bc.size(); ++l) {
      const ComplexMatrix x = bd.flat(k), y = bc.flat(l);
      const ComplexMatrix lhs = (t.flat() * x).adjoint() * y;
      const ComplexMatrix rhs = x.adjoint() * (ts * y);
      r = std::max(r, (lhs - rhs).norm());
    }
  return r;
}

}  // namespace prostar
