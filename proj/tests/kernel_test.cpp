#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "support.hpp"

using namespace prostar;

namespace {

RealVector oracle_eigenvalues(const ComplexMatrix& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> s(h);
  return s.eigenvalues();
}

}  // namespace

TEST(Eigen, MatchesReferenceSolverOnRandomHermitian) {
  Rng rng(11);
  for (Index n : {1, 2, 3, 5, 8, 17, 32}) {
    const ComplexMatrix h = random_hermitian_matrix(rng, n);
    const auto eig = hermitian_eigendecomposition(h);
    const RealVector ref = oracle_eigenvalues(h);
    EXPECT_LE((eig.values - ref).cwiseAbs().maxCoeff(), 1e-11 * (1.0 + h.norm())) << "n = " << n;
  }
}

TEST(Eigen, RoundTripAndOrthonormalityUpTo64) {
  Rng rng(12);
  for (Index n : {4, 16, 40, 64}) {
    const ComplexMatrix h = random_hermitian_matrix(rng, n);
    const auto eig = hermitian_eigendecomposition(h);
    const ComplexMatrix back = eig.vectors * eig.values.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
    EXPECT_LE((back - h).norm(), 1e-10 * h.norm()) << "n = " << n;
    EXPECT_LE((eig.vectors.adjoint() * eig.vectors - ComplexMatrix::Identity(n, n)).norm(), 1e-11);
    for (Index i = 1; i < n; ++i) EXPECT_LE(eig.values(i - 1), eig.values(i));
  }
}

TEST(Eigen, DegenerateSpectrumKeepsEigenspaces) {
  Rng rng(13);
  const ComplexMatrix u = random_unitary_matrix(rng, 6);
  RealVector d(6);
  d << -1, -1, 2, 2, 2, 5;
  const ComplexMatrix h = u * d.cast<Complex>().asDiagonal() * u.adjoint();
  const auto eig = hermitian_eigendecomposition(h);
  EXPECT_LE((eig.values - d).cwiseAbs().maxCoeff(), 1e-12);
  const ComplexMatrix p = eig.vectors.middleCols(2, 3) * eig.vectors.middleCols(2, 3).adjoint();
  const ComplexMatrix ref = u.middleCols(2, 3) * u.middleCols(2, 3).adjoint();
  EXPECT_LE((p - ref).norm(), 1e-10);
}

TEST(Eigen, RejectsNonHermitianAndOverflow) {
  ComplexMatrix m(2, 2);
  m << 1, 2, 0, 1;
  EXPECT_THROW(hermitian_eigendecomposition(m), PreconditionError);
  ComplexMatrix big(2, 2);
  big << 1e308, 1e308, 1e308, 1e308;
  EXPECT_THROW(hermitian_eigendecomposition(big + big), NumericalError);
}

TEST(Eigen, OperatorNormMatchesSingularValues) {
  Rng rng(14);
  for (auto [r, c] : std::vector<std::pair<Index, Index>>{{1, 1}, {3, 5}, {7, 2}, {6, 6}}) {
    const ComplexMatrix m = random_complex_matrix(rng, r, c);
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    EXPECT_NEAR(matrix_operator_norm(m), svd.singularValues()(0), 1e-11 * (1.0 + m.norm()));
  }
}

TEST(Eigen, RankOfLowRankGram) {
  Rng rng(15);
  const ComplexMatrix x = random_complex_matrix(rng, 9, 4);
  EXPECT_EQ(column_rank(x * random_complex_matrix(rng, 4, 7)), 4);
  EXPECT_EQ(gram_rank(ComplexMatrix::Zero(3, 3)), 0);
}

TEST(Matrix, KronAndVecIdentities) {
  Rng rng(16);
  const ComplexMatrix a = random_complex_matrix(rng, 2, 3), b = random_complex_matrix(rng, 3, 2);
  const ComplexMatrix x = random_complex_matrix(rng, 3, 3);
  // vec(A X B) = (B^T (x) A) vec(X)
  EXPECT_LE((vec(a * x * b) - kron(b.transpose(), a) * vec(x)).norm(), 1e-12);
  EXPECT_LE((unvec(vec(x), 3, 3) - x).norm(), 0.0);
  EXPECT_NEAR(std::abs(hs_inner(x, x) - Complex(x.squaredNorm(), 0.0)), 0.0, 1e-12);
}

TEST(Algebra, DimensionsAndBasisBookkeeping) {
  const FiniteCStarAlgebra a({2, 1, 3});
  EXPECT_EQ(a.linear_dim(), 4 + 1 + 9);
  EXPECT_EQ(a.total_matrix_dim(), 6);
  EXPECT_EQ(a.num_blocks(), 3);
  for (Index i = 0; i < a.linear_dim(); ++i) {
    const auto bi = a.basis_index(i);
    EXPECT_EQ(a.basis_position(bi.block, bi.row, bi.col), i);
  }
  EXPECT_THROW(FiniteCStarAlgebra(std::vector<Index>{}), StructuralError);
  EXPECT_THROW(FiniteCStarAlgebra(std::vector<Index>{2, 0}), StructuralError);
}

TEST(Algebra, CoordinatesRoundTripAndProducts) {
  Rng rng(17);
  const FiniteCStarAlgebra a({2, 1, 3});
  for (int k = 0; k < 5; ++k) {
    const auto x = random_element(rng, a), y = random_element(rng, a);
    EXPECT_LE(AlgebraElement::from_coordinates(a, x.coordinates()).distance(x), 1e-14);
    // block-diagonal oracle for the product and the adjoint
    const ComplexMatrix prod = x.block_diagonal() * y.block_diagonal();
    EXPECT_LE(((x * y).block_diagonal() - prod).norm(), 1e-12);
    EXPECT_LE((x.adjoint().block_diagonal() - x.block_diagonal().adjoint()).norm(), 0.0);
    EXPECT_LE((left_multiplication_matrix(x) * y.coordinates() - (x * y).coordinates()).norm(), 1e-12);
  }
  EXPECT_LE((unit_coordinates(a) - AlgebraElement::identity(a).coordinates()).norm(), 0.0);
}

TEST(Algebra, CStarIdentityProperty) {
  Rng rng(18);
  for (const auto& sizes : std::vector<std::vector<Index>>{{1}, {3}, {2, 2}, {4, 1, 2}}) {
    const FiniteCStarAlgebra a(sizes);
    for (int k = 0; k < 10; ++k) {
      const auto x = (0.1 + 10.0 * k) * random_element(rng, a);
      const double n = operator_norm(x);
      EXPECT_NEAR(operator_norm(x.adjoint() * x), n * n, 1e-9 * n * n);
      EXPECT_NEAR(operator_norm(x.adjoint()), n, 1e-10 * (1.0 + n));
    }
  }
}

TEST(Algebra, PositivityAndSquareRoot) {
  Rng rng(19);
  const FiniteCStarAlgebra a({3, 1});
  const auto p = random_positive_element(rng, a);
  ASSERT_TRUE(is_positive(p).positive);
  const auto r = psd_sqrt(p);
  EXPECT_LE((r * r).distance(p), 1e-10 * (1.0 + operator_norm(p)));
  EXPECT_TRUE(is_positive(r).positive);
  const auto neg = Complex(-1.0, 0.0) * p;
  EXPECT_FALSE(is_positive(neg).positive);
  EXPECT_THROW(psd_sqrt(neg), PreconditionError);
  const auto u = random_unitary_element(rng, a);
  EXPECT_LE((u.adjoint() * u).distance(AlgebraElement::identity(a)), 1e-12);
}

TEST(Homomorphism, BlockProjectionAndConjugationVerify) {
  Rng rng(20);
  const FiniteCStarAlgebra a({2, 1, 3});
  const auto proj = StarHomomorphism::block_projection(a, {2, 0});
  HomomorphismCheckOptions opt;
  opt.check_surjective = true;
  EXPECT_TRUE(verify_star_homomorphism(proj, opt).passed());
  EXPECT_EQ(proj.target().block_sizes(), (std::vector<Index>{3, 2}));
  const auto ad = StarHomomorphism::conjugation(random_unitary_element(rng, a));
  EXPECT_TRUE(verify_star_homomorphism(ad, opt).passed());
  const auto comp = compose(proj, ad);
  const auto x = random_element(rng, a);
  EXPECT_LE(comp.apply(x).distance(proj.apply(ad.apply(x))), 1e-12);
}

TEST(Homomorphism, NonMultiplicativeMapFails) {
  const FiniteCStarAlgebra a = FiniteCStarAlgebra::full(2);
  const auto twice = StarHomomorphism(a, a, 2.0 * ComplexMatrix::Identity(4, 4));
  const auto rep = verify_star_homomorphism(twice);
  EXPECT_FALSE(rep.passed());
  EXPECT_TRUE(rep.report.witness.has_value());
}

TEST(Wedderburn, RecoversBlocksOfAConjugatedEmbedding) {
  Rng rng(21);
  // M2 (+) C (+) M2 placed in M5, conjugated by a random unitary, with M2 twice
  // as the same block: a (+) c (+) a has standard form M2 (+) C.
  const ComplexMatrix w = random_unitary_matrix(rng, 5);
  std::vector<ComplexMatrix> span;
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j) {
      ComplexMatrix m = ComplexMatrix::Zero(5, 5);
      m(i, j) = 1.0;
      m(3 + i, 3 + j) = 1.0;
      span.push_back(w * m * w.adjoint());
    }
  ComplexMatrix c = ComplexMatrix::Zero(5, 5);
  c(2, 2) = 1.0;
  span.push_back(w * c * w.adjoint());
  const auto res = wedderburn_decompose(span);
  ASSERT_TRUE(res.report.passed());
  std::vector<Index> sizes = res.standard_form.block_sizes();
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<Index>{1, 2}));
  HomomorphismCheckOptions opt;
  EXPECT_TRUE(verify_star_homomorphism(res.embedding, opt).passed());
  for (const auto& s : span) EXPECT_LE((res.from_standard(res.to_standard(s)) - s).norm(), 1e-10);
}

TEST(Wedderburn, FullMatrixAlgebraAndCommutativeCase) {
  std::vector<ComplexMatrix> full, diag;
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) full.push_back(matrix_unit(3, i, j));
  for (Index i = 0; i < 4; ++i) diag.push_back(matrix_unit(4, i, i));
  EXPECT_EQ(wedderburn_decompose(full).standard_form.block_sizes(), (std::vector<Index>{3}));
  EXPECT_EQ(wedderburn_decompose(diag).standard_form.block_sizes(), (std::vector<Index>{1, 1, 1, 1}));
  EXPECT_THROW(wedderburn_decompose({}), PreconditionError);
}
