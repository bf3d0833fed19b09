#pragma once

#include <cstdint>
#include <random>

#include "prostar/algebra.hpp"

namespace prostar {

using Rng = std::mt19937_64;

inline double gaussian(Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(rng);
}

inline ComplexMatrix random_complex_matrix(Rng& rng, Index rows, Index cols) {
  ComplexMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      const double re = gaussian(rng);
      const double im = gaussian(rng);
      m(i, j) = Complex(re, im);
    }
  return m;
}

inline ComplexMatrix random_hermitian_matrix(Rng& rng, Index n) {
  return hermitian_part(random_complex_matrix(rng, n, n));
}

// Haar-distributed unitary: QR of a Ginibre matrix with the phases of R fixed.
inline ComplexMatrix random_unitary_matrix(Rng& rng, Index n) {
  const ComplexMatrix g = random_complex_matrix(rng, n, n);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(n, n);
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < n; ++i) {
    const Complex d = r(i, i);
    if (std::abs(d) > 0) q.col(i) *= d / std::abs(d);
  }
  return q;
}

inline AlgebraElement random_element(Rng& rng, const FiniteCStarAlgebra& a) {
  std::vector<ComplexMatrix> blocks;
  for (Index n : a.block_sizes()) blocks.push_back(random_complex_matrix(rng, n, n));
  return AlgebraElement(a, std::move(blocks));
}

inline AlgebraElement random_positive_element(Rng& rng, const FiniteCStarAlgebra& a) {
  const AlgebraElement x = random_element(rng, a);
  return x.adjoint() * x;
}

inline AlgebraElement random_unitary_element(Rng& rng, const FiniteCStarAlgebra& a) {
  std::vector<ComplexMatrix> blocks;
  for (Index n : a.block_sizes()) blocks.push_back(random_unitary_matrix(rng, n));
  return AlgebraElement(a, std::move(blocks));
}

}  // namespace prostar
