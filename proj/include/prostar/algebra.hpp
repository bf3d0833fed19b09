#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "prostar/eigen.hpp"
#include "prostar/matrix.hpp"
#include "prostar/report.hpp"

namespace prostar {

// A finite-dimensional C*-algebra in standard form: M_{n_1} (+) ... (+) M_{n_k}.
//
// The matrix-unit basis is ordered block by block, row-major inside a block:
// basis index of E^{(k)}_{ij} is basis_offset(k) + i * n_k + j.
class FiniteCStarAlgebra {
 public:
  struct BasisIndex {
    Index block;
    Index row;
    Index col;
  };

  FiniteCStarAlgebra() : FiniteCStarAlgebra(std::vector<Index>{1}) {}

  explicit FiniteCStarAlgebra(std::vector<Index> block_sizes) : sizes_(std::move(block_sizes)) {
    if (sizes_.empty()) throw StructuralError("FiniteCStarAlgebra: block list is empty");
    for (Index n : sizes_)
      if (n <= 0) throw StructuralError("FiniteCStarAlgebra: block sizes must be positive");
    Index mo = 0, bo = 0;
    for (Index n : sizes_) {
      matrix_offsets_.push_back(mo);
      basis_offsets_.push_back(bo);
      mo += n;
      bo += n * n;
    }
    total_ = mo;
    linear_ = bo;
  }

  // Full matrix algebra M_n.
  static FiniteCStarAlgebra full(Index n) { return FiniteCStarAlgebra(std::vector<Index>{n}); }
  // Commutative algebra C^n.
  static FiniteCStarAlgebra diagonal(Index n) { return FiniteCStarAlgebra(std::vector<Index>(static_cast<std::size_t>(n), 1)); }

  const std::vector<Index>& block_sizes() const { return sizes_; }
  Index num_blocks() const { return static_cast<Index>(sizes_.size()); }
  Index block_size(Index k) const { return sizes_.at(static_cast<std::size_t>(k)); }
  Index total_matrix_dim() const { return total_; }
  Index linear_dim() const { return linear_; }
  Index matrix_offset(Index k) const { return matrix_offsets_.at(static_cast<std::size_t>(k)); }
  Index basis_offset(Index k) const { return basis_offsets_.at(static_cast<std::size_t>(k)); }

  Index basis_position(Index block, Index row, Index col) const {
    return basis_offset(block) + row * block_size(block) + col;
  }

  BasisIndex basis_index(Index i) const {
    if (i < 0 || i >= linear_) throw StructuralError("FiniteCStarAlgebra: basis index out of range");
    Index k = num_blocks() - 1;
    while (basis_offset(k) > i) --k;
    const Index local = i - basis_offset(k);
    return {k, local / block_size(k), local % block_size(k)};
  }

  // Block that owns row/column `r` of the block-diagonal embedding.
  Index block_of_matrix_index(Index r) const {
    Index k = num_blocks() - 1;
    while (matrix_offset(k) > r) --k;
    return k;
  }

  friend bool operator==(const FiniteCStarAlgebra& a, const FiniteCStarAlgebra& b) {
    return a.sizes_ == b.sizes_;
  }
  friend bool operator!=(const FiniteCStarAlgebra& a, const FiniteCStarAlgebra& b) { return !(a == b); }

  std::string describe() const {
    std::ostringstream os;
    for (std::size_t k = 0; k < sizes_.size(); ++k) os << (k ? "+" : "") << "M" << sizes_[k];
    return os.str();
  }

 private:
  std::vector<Index> sizes_;
  std::vector<Index> matrix_offsets_;
  std::vector<Index> basis_offsets_;
  Index total_ = 0;
  Index linear_ = 0;
};

// An element of a standard-form algebra, stored as its list of blocks.
class AlgebraElement {
 public:
  AlgebraElement() : AlgebraElement(zero(FiniteCStarAlgebra())) {}

  AlgebraElement(FiniteCStarAlgebra algebra, std::vector<ComplexMatrix> blocks)
      : algebra_(std::move(algebra)), blocks_(std::move(blocks)) {
    if (static_cast<Index>(blocks_.size()) != algebra_.num_blocks())
      throw StructuralError("AlgebraElement: block count does not match algebra " + algebra_.describe());
    for (Index k = 0; k < algebra_.num_blocks(); ++k) {
      const auto& b = blocks_[static_cast<std::size_t>(k)];
      if (b.rows() != algebra_.block_size(k) || b.cols() != algebra_.block_size(k))
        throw StructuralError("AlgebraElement: block shape does not match algebra " + algebra_.describe());
      require_finite(b, "AlgebraElement");
    }
  }

  static AlgebraElement zero(const FiniteCStarAlgebra& a) {
    std::vector<ComplexMatrix> blocks;
    for (Index n : a.block_sizes()) blocks.push_back(ComplexMatrix::Zero(n, n));
    return AlgebraElement(a, std::move(blocks));
  }

  static AlgebraElement identity(const FiniteCStarAlgebra& a) {
    std::vector<ComplexMatrix> blocks;
    for (Index n : a.block_sizes()) blocks.push_back(ComplexMatrix::Identity(n, n));
    return AlgebraElement(a, std::move(blocks));
  }

  // Matrix unit with basis index i.
  static AlgebraElement basis(const FiniteCStarAlgebra& a, Index i) {
    auto idx = a.basis_index(i);
    AlgebraElement e = zero(a);
    e.blocks_[static_cast<std::size_t>(idx.block)](idx.row, idx.col) = 1.0;
    return e;
  }

  static AlgebraElement unit(const FiniteCStarAlgebra& a, Index block, Index row, Index col) {
    return basis(a, a.basis_position(block, row, col));
  }

  static AlgebraElement from_coordinates(const FiniteCStarAlgebra& a, const ComplexVector& c) {
    if (c.size() != a.linear_dim()) throw StructuralError("AlgebraElement: coordinate vector has wrong length");
    std::vector<ComplexMatrix> blocks;
    for (Index k = 0; k < a.num_blocks(); ++k) {
      const Index n = a.block_size(k);
      ComplexMatrix b(n, n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) b(i, j) = c(a.basis_offset(k) + i * n + j);
      blocks.push_back(std::move(b));
    }
    return AlgebraElement(a, std::move(blocks));
  }

  // Reads the diagonal blocks of an N x N matrix, N = total_matrix_dim.
  static AlgebraElement from_block_diagonal(const FiniteCStarAlgebra& a, const ComplexMatrix& m) {
    if (m.rows() != a.total_matrix_dim() || m.cols() != a.total_matrix_dim())
      throw StructuralError("AlgebraElement: block-diagonal matrix has wrong size");
    std::vector<ComplexMatrix> blocks;
    for (Index k = 0; k < a.num_blocks(); ++k) {
      const Index o = a.matrix_offset(k), n = a.block_size(k);
      blocks.push_back(m.block(o, o, n, n));
    }
    return AlgebraElement(a, std::move(blocks));
  }

  const FiniteCStarAlgebra& algebra() const { return algebra_; }
  const std::vector<ComplexMatrix>& blocks() const { return blocks_; }
  const ComplexMatrix& block(Index k) const { return blocks_.at(static_cast<std::size_t>(k)); }

  ComplexVector coordinates() const {
    ComplexVector c(algebra_.linear_dim());
    for (Index k = 0; k < algebra_.num_blocks(); ++k) {
      const Index n = algebra_.block_size(k);
      const auto& b = blocks_[static_cast<std::size_t>(k)];
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) c(algebra_.basis_offset(k) + i * n + j) = b(i, j);
    }
    return c;
  }

  ComplexMatrix block_diagonal() const {
    const Index N = algebra_.total_matrix_dim();
    ComplexMatrix m = ComplexMatrix::Zero(N, N);
    for (Index k = 0; k < algebra_.num_blocks(); ++k) {
      const Index o = algebra_.matrix_offset(k), n = algebra_.block_size(k);
      m.block(o, o, n, n) = blocks_[static_cast<std::size_t>(k)];
    }
    return m;
  }

  AlgebraElement adjoint() const {
    std::vector<ComplexMatrix> out;
    out.reserve(blocks_.size());
    for (const auto& b : blocks_) out.push_back(b.adjoint());
    return AlgebraElement(algebra_, std::move(out));
  }

  // Max blockwise Frobenius distance.
  double distance(const AlgebraElement& other) const {
    same_algebra(other, "distance");
    double d = 0.0;
    for (std::size_t k = 0; k < blocks_.size(); ++k) d = std::max(d, (blocks_[k] - other.blocks_[k]).norm());
    return d;
  }

  friend AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
    return a.zip(b, "add", [](const ComplexMatrix& x, const ComplexMatrix& y) { return ComplexMatrix(x + y); });
  }
  friend AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
    return a.zip(b, "subtract", [](const ComplexMatrix& x, const ComplexMatrix& y) { return ComplexMatrix(x - y); });
  }
  friend AlgebraElement operator*(const AlgebraElement& a, const AlgebraElement& b) {
    return a.zip(b, "multiply", [](const ComplexMatrix& x, const ComplexMatrix& y) { return ComplexMatrix(x * y); });
  }
  friend AlgebraElement operator*(Complex s, const AlgebraElement& a) {
    std::vector<ComplexMatrix> out;
    for (const auto& b : a.blocks_) out.push_back(s * b);
    return AlgebraElement(a.algebra_, std::move(out));
  }
  friend AlgebraElement operator*(double s, const AlgebraElement& a) { return Complex(s, 0.0) * a; }

 private:
  void same_algebra(const AlgebraElement& other, const char* op) const {
    if (algebra_ != other.algebra_)
      throw StructuralError(std::string("AlgebraElement::") + op + ": algebra mismatch (" + algebra_.describe() +
                            " vs " + other.algebra_.describe() + ")");
  }

  template <class F>
  AlgebraElement zip(const AlgebraElement& other, const char* op, F&& f) const {
    same_algebra(other, op);
    std::vector<ComplexMatrix> out;
    out.reserve(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) out.push_back(f(blocks_[k], other.blocks_[k]));
    return AlgebraElement(algebra_, std::move(out));
  }

  FiniteCStarAlgebra algebra_;
  std::vector<ComplexMatrix> blocks_;
};

inline AlgebraElement multiply(const AlgebraElement& a, const AlgebraElement& b) { return a * b; }
inline AlgebraElement adjoint(const AlgebraElement& a) { return a.adjoint(); }

// C*-norm: max over blocks of the largest singular value.
inline double operator_norm(const AlgebraElement& a) {
  double m = 0.0;
  for (const auto& b : a.blocks()) m = std::max(m, matrix_operator_norm(b));
  return m;
}

inline Complex trace_functional(const AlgebraElement& a) {
  Complex t = 0.0;
  for (const auto& b : a.blocks()) t += b.trace();
  return t;
}

struct PositivityWitness {
  bool positive = false;
  bool hermitian = false;
  double min_eigenvalue = 0.0;
};

// Hermitian within tol, and every eigenvalue >= -tol * (1 + ||m||).
inline PositivityWitness is_positive(const ComplexMatrix& m, double tol = kDefaultTolerance) {
  PositivityWitness w;
  const double scale = 1.0 + m.norm();
  w.hermitian = hermitian_defect(m) <= tol * scale;
  if (!w.hermitian) {
    w.min_eigenvalue = min_eigenvalue(hermitian_part(m));
    return w;
  }
  w.min_eigenvalue = min_eigenvalue(hermitian_part(m));
  w.positive = w.min_eigenvalue >= -tol * (1.0 + matrix_operator_norm(m));
  return w;
}

inline PositivityWitness is_positive(const AlgebraElement& a, double tol = kDefaultTolerance) {
  PositivityWitness w;
  w.positive = true;
  w.hermitian = true;
  w.min_eigenvalue = std::numeric_limits<double>::infinity();
  const double norm = operator_norm(a);
  for (const auto& b : a.blocks()) {
    const bool herm = hermitian_defect(b) <= tol * (1.0 + norm);
    const double mn = min_eigenvalue(hermitian_part(b));
    w.hermitian = w.hermitian && herm;
    w.min_eigenvalue = std::min(w.min_eigenvalue, mn);
  }
  w.positive = w.hermitian && w.min_eigenvalue >= -tol * (1.0 + norm);
  return w;
}

// Positive square root; negative spectrum beyond tolerance is a precondition error.
inline AlgebraElement psd_sqrt(const AlgebraElement& a, double tol = kDefaultTolerance) {
  const auto w = is_positive(a, tol);
  if (!w.positive) {
    std::ostringstream msg;
    msg << "psd_sqrt: element is not positive (min eigenvalue " << w.min_eigenvalue << ")";
    throw PreconditionError(msg.str());
  }
  std::vector<ComplexMatrix> out;
  for (const auto& b : a.blocks())
    out.push_back(hermitian_part(hermitian_function(b, [](double x) { return std::sqrt(std::max(0.0, x)); })));
  return AlgebraElement(a.algebra(), std::move(out));
}

// Left-regular representation: column j holds the coordinates of a * E_j.
inline ComplexMatrix left_multiplication_matrix(const AlgebraElement& a) {
  const auto& alg = a.algebra();
  ComplexMatrix L = ComplexMatrix::Zero(alg.linear_dim(), alg.linear_dim());
  for (Index k = 0; k < alg.num_blocks(); ++k) {
    const Index n = alg.block_size(k);
    const auto& b = a.block(k);
    // a * E_{rc} has column c equal to column r of a.
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c)
        for (Index i = 0; i < n; ++i) L(alg.basis_position(k, i, c), alg.basis_position(k, r, c)) = b(i, r);
  }
  return L;
}

// Coordinates of the unit in the matrix-unit basis.
inline ComplexVector unit_coordinates(const FiniteCStarAlgebra& a) {
  return AlgebraElement::identity(a).coordinates();
}

}  // namespace prostar
