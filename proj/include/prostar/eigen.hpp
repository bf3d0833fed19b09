#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "prostar/matrix.hpp"

namespace prostar {

struct EigenSolverOptions {
  double hermitian_tolerance = 1e-12;  // relative to ||h||_F
  double convergence = 1e-13;          // off-diagonal mass relative to ||h||_F
  int max_sweeps = 100;
};

struct HermitianEigen {
  RealVector values;       // ascending
  ComplexMatrix vectors;   // columns, unitary
  int sweeps = 0;
};

namespace detail {

// Index of the first coordinate whose modulus exceeds `floor`.
inline Eigen::Index first_significant(const ComplexMatrix& v, Eigen::Index col, double floor) {
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    if (std::abs(v(i, col)) > floor) return i;
  return v.rows();
}

inline void jacobi_rotate(ComplexMatrix& a, ComplexMatrix& v, Eigen::Index p, Eigen::Index q) {
  const Complex apq = a(p, q);
  const double r = std::abs(apq);
  if (r == 0.0) return;
  const Complex e = apq / r;
  const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * r);
  double t;
  if (std::abs(theta) > 1e150) {
    t = 0.5 / theta;
  } else {
    t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  }
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const Complex jpq = s * e;
  const Complex jqp = -s * std::conj(e);
  const Eigen::Index n = a.rows();

  // a <- a J
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex akp = a(k, p);
    const Complex akq = a(k, q);
    a(k, p) = c * akp + jqp * akq;
    a(k, q) = jpq * akp + c * akq;
  }
  // a <- J* a
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex apk = a(p, k);
    const Complex aqk = a(q, k);
    a(p, k) = c * apk + std::conj(jqp) * aqk;
    a(q, k) = std::conj(jpq) * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  a(p, p) = a(p, p).real();
  a(q, q) = a(q, q).real();
  // v <- v J
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex vkp = v(k, p);
    const Complex vkq = v(k, q);
    v(k, p) = c * vkp + jqp * vkq;
    v(k, q) = jpq * vkp + c * vkq;
  }
}

inline double off_diagonal_mass(const ComplexMatrix& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

}  // namespace detail

// Cyclic complex Jacobi with a threshold strategy.
//
// Eigenvalues are returned ascending. Eigenvectors are phase-normalized so the
// first significant coordinate is real and positive; within a cluster of
// numerically equal eigenvalues, columns are ordered by the index of that
// coordinate.
inline HermitianEigen hermitian_eigendecomposition(const ComplexMatrix& h,
                                                   const EigenSolverOptions& opt = {}) {
  if (h.rows() != h.cols()) throw PreconditionError("hermitian_eigendecomposition: matrix is not square");
  const Eigen::Index n = h.rows();
  const double scale = h.norm();
  if (!all_finite(h) || !std::isfinite(scale))
    throw NumericalError("hermitian_eigendecomposition: non-finite entry or norm overflow");
  HermitianEigen out;
  if (n == 0) return out;
  if (hermitian_defect(h) > opt.hermitian_tolerance * scale) {
    std::ostringstream msg;
    msg << "hermitian_eigendecomposition: input not Hermitian (||h-h*||_F = " << hermitian_defect(h)
        << ", ||h||_F = " << scale << ")";
    throw PreconditionError(msg.str());
  }

  ComplexMatrix a = hermitian_part(h);
  ComplexMatrix v = ComplexMatrix::Identity(n, n);
  const double target = opt.convergence * scale;
  int sweep = 0;
  double off = detail::off_diagonal_mass(a);
  while (off > target) {
    if (sweep >= opt.max_sweeps) {
      std::ostringstream msg;
      msg << "hermitian_eigendecomposition: no convergence after " << sweep
          << " sweeps (off-diagonal mass " << off << ", target " << target << ", n = " << n << ")";
      throw NumericalError(msg.str());
    }
    // Early sweeps skip small elements; later sweeps rotate everything nonzero.
    const double threshold = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double mag = std::abs(a(p, q));
        if (mag <= threshold) continue;
        if (sweep > 3) {
          const double dp = std::abs(a(p, p).real());
          const double dq = std::abs(a(q, q).real());
          if (dp + 1e3 * mag == dp && dq + 1e3 * mag == dq) {
            a(p, q) = 0.0;
            a(q, p) = 0.0;
            continue;
          }
        }
        detail::jacobi_rotate(a, v, p, q);
      }
    }
    ++sweep;
    off = detail::off_diagonal_mass(a);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x).real() < a(y, y).real(); });

  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src).real();
    out.vectors.col(k) = v.col(src);
    const Eigen::Index lead = detail::first_significant(out.vectors, k, 1e-8);
    if (lead < n) {
      const Complex z = out.vectors(lead, k);
      out.vectors.col(k) *= std::conj(z) / std::abs(z);
    }
  }

  // Tie-break clusters of equal eigenvalues by leading coordinate.
  const double tie = 1e-12 * std::max(1.0, out.values.cwiseAbs().maxCoeff());
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && out.values(end) - out.values(end - 1) <= tie) ++end;
    if (end - start > 1) {
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(end - start));
      std::iota(idx.begin(), idx.end(), start);
      std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index x, Eigen::Index y) {
        return detail::first_significant(out.vectors, x, 1e-8) <
               detail::first_significant(out.vectors, y, 1e-8);
      });
      ComplexMatrix cols(n, end - start);
      RealVector vals(end - start);
      for (std::size_t t = 0; t < idx.size(); ++t) {
        cols.col(static_cast<Eigen::Index>(t)) = out.vectors.col(idx[t]);
        vals(static_cast<Eigen::Index>(t)) = out.values(idx[t]);
      }
      out.vectors.middleCols(start, end - start) = cols;
      out.values.segment(start, end - start) = vals;
    }
    start = end;
  }
  out.sweeps = sweep;
  return out;
}

// Largest singular value, via the top eigenvalue of the smaller Gram product.
inline double matrix_operator_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  const double f = m.norm();
  if (f == 0.0) return 0.0;
  ComplexMatrix gram = m.rows() <= m.cols() ? ComplexMatrix(m * m.adjoint())
                                            : ComplexMatrix(m.adjoint() * m);
  gram = hermitian_part(gram);
  const auto eig = hermitian_eigendecomposition(gram);
  return std::sqrt(std::max(0.0, eig.values(eig.values.size() - 1)));
}

// Number of eigenvalues of a PSD Gram matrix above rel * lambda_max (floor abs_floor).
inline Eigen::Index gram_rank(const ComplexMatrix& gram, double rel = 1e-9, double abs_floor = 1e-14) {
  if (gram.size() == 0) return 0;
  const auto eig = hermitian_eigendecomposition(hermitian_part(gram));
  const double top = eig.values(eig.values.size() - 1);
  const double thr = std::max(rel * top, abs_floor);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i)
    if (eig.values(i) > thr) ++r;
  return r;
}

// Rank of the column span of `cols`.
inline Eigen::Index column_rank(const ComplexMatrix& cols, double rel = 1e-9) {
  if (cols.size() == 0) return 0;
  return gram_rank(ComplexMatrix(cols.adjoint() * cols), rel);
}

// f(h) for Hermitian h through the spectral decomposition.
template <class F>
ComplexMatrix hermitian_function(const ComplexMatrix& h, F&& f) {
  const auto eig = hermitian_eigendecomposition(hermitian_part(h));
  RealVector fv(eig.values.size());
  for (Eigen::Index i = 0; i < fv.size(); ++i) fv(i) = f(eig.values(i));
  return eig.vectors * fv.asDiagonal() * eig.vectors.adjoint();
}

// Minimal eigenvalue of a Hermitian matrix (+inf for the empty matrix).
inline double min_eigenvalue(const ComplexMatrix& h) {
  if (h.size() == 0) return std::numeric_limits<double>::infinity();
  return hermitian_eigendecomposition(hermitian_part(h)).values(0);
}

}  // namespace prostar
