#pragma once

#include <functional>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "prostar/algebra.hpp"
#include "prostar/group.hpp"
#include "prostar/hilbert_module.hpp"
#include "prostar/homomorphism.hpp"
#include "prostar/random.hpp"
#include "prostar/report.hpp"

namespace prostar {

struct CpCertification {
  bool hermitian_preserving = false;
  double hermitian_residual = 0.0;
  std::vector<double> choi_min_eigenvalues;  // one per source block
  std::vector<double> choi_norms;
  bool is_cp = false;
  double tolerance = kDefaultTolerance;

  double min_eigenvalue() const {
    double m = std::numeric_limits<double>::infinity();
    for (double x : choi_min_eigenvalues) m = std::min(m, x);
    return m;
  }
};

// Linear map A -> L_B(E), stored by its values on the matrix units of A.
// Representations (unital *-homomorphisms) use the same type.
class CompletelyPositiveMap {
 public:
  CompletelyPositiveMap() = default;

  CompletelyPositiveMap(FiniteCStarAlgebra source, HilbertModule target, std::vector<AdjointableOperator> values)
      : source_(std::move(source)), target_(std::move(target)), values_(std::move(values)) {
    if (static_cast<Index>(values_.size()) != source_.linear_dim())
      throw StructuralError("CompletelyPositiveMap: one value per basis element of the source required");
    for (const auto& v : values_)
      if (v.domain() != target_ || v.codomain() != target_)
        throw StructuralError("CompletelyPositiveMap: value is not an operator on the target module");
  }

  static CompletelyPositiveMap from_function(const FiniteCStarAlgebra& a, const HilbertModule& e,
                                             const std::function<AdjointableOperator(const AlgebraElement&)>& f) {
    std::vector<AdjointableOperator> vals;
    for (Index i = 0; i < a.linear_dim(); ++i) vals.push_back(f(AlgebraElement::basis(a, i)));
    return CompletelyPositiveMap(a, e, std::move(vals));
  }

  // a -> V*(a (x) 1_k (x) 1_B)V for V in M_{N_A k x n}(B), flattened.
  static CompletelyPositiveMap conjugation(const FiniteCStarAlgebra& a, const HilbertModule& e, const ComplexMatrix& v,
                                           Index multiplicity = 1) {
    const Index N = e.base().total_matrix_dim();
    if (v.cols() != e.flat_dim() || v.rows() != a.total_matrix_dim() * multiplicity * N)
      throw StructuralError("CompletelyPositiveMap::conjugation: V has wrong shape");
    const ComplexMatrix pad = ComplexMatrix::Identity(multiplicity * N, multiplicity * N);
    return from_function(a, e, [&](const AlgebraElement& x) {
      return AdjointableOperator(e, e, v.adjoint() * kron(x.block_diagonal(), pad) * v);
    });
  }

  // a -> (tr a / tr 1) id_E.
  static CompletelyPositiveMap trace_state(const FiniteCStarAlgebra& a, const HilbertModule& e) {
    const double norm = static_cast<double>(a.total_matrix_dim());
    return from_function(a, e, [&](const AlgebraElement& x) {
      return (trace_functional(x) / norm) * AdjointableOperator::identity(e);
    });
  }

  // The defining representation of A on C^{N_A} (B = C).
  static CompletelyPositiveMap identity_representation(const FiniteCStarAlgebra& a) {
    const HilbertModule e(FiniteCStarAlgebra::full(1), a.total_matrix_dim());
    return from_function(a, e, [&](const AlgebraElement& x) { return AdjointableOperator(e, e, x.block_diagonal()); });
  }

  // Unital *-homomorphism A -> L_B(E) given as a *-homomorphism into M_n(B).
  static CompletelyPositiveMap from_homomorphism(const StarHomomorphism& phi, const HilbertModule& e) {
    if (phi.target() != matrix_amplification(e.base(), e.rank()))
      throw StructuralError("CompletelyPositiveMap::from_homomorphism: target must be M_n(B)");
    return from_function(phi.source(), e, [&](const AlgebraElement& x) {
      return AdjointableOperator(e, e, flat_from_amplified(phi.apply(x), e.base(), e.rank()));
    });
  }

  const FiniteCStarAlgebra& source() const { return source_; }
  const HilbertModule& target() const { return target_; }
  const std::vector<AdjointableOperator>& basis_values() const { return values_; }
  const AdjointableOperator& basis_value(Index i) const { return values_.at(static_cast<std::size_t>(i)); }
  const std::optional<CpCertification>& certification() const { return cert_; }

  CompletelyPositiveMap with_certification(CpCertification c) const {
    CompletelyPositiveMap out = *this;
    out.cert_ = std::move(c);
    return out;
  }

  AdjointableOperator apply(const AlgebraElement& a) const {
    if (a.algebra() != source_) throw StructuralError("apply_cp: argument not in the source algebra");
    const ComplexVector c = a.coordinates();
    ComplexMatrix f = ComplexMatrix::Zero(target_.flat_dim(), target_.flat_dim());
    for (Index i = 0; i < c.size(); ++i)
      if (c(i) != Complex(0.0, 0.0)) f += c(i) * values_[static_cast<std::size_t>(i)].flat();
    return AdjointableOperator(target_, target_, std::move(f));
  }
  AdjointableOperator operator()(const AlgebraElement& a) const { return apply(a); }

 private:
  FiniteCStarAlgebra source_;
  HilbertModule target_;
  std::vector<AdjointableOperator> values_;
  std::optional<CpCertification> cert_;
};

inline AdjointableOperator apply_cp(const CompletelyPositiveMap& rho, const AlgebraElement& a) { return rho.apply(a); }

// E^n = B^{n r} with projection diag(P, ..., P).
inline HilbertModule module_power(const HilbertModule& e, Index n) {
  if (n == 1) return e;
  if (e.is_free()) return HilbertModule(e.base(), e.rank() * n);
  return HilbertModule(e.base(), e.rank() * n, kron(ComplexMatrix::Identity(n, n), e.projection()));
}

// n x n matrix over A -> element of M_n(A) in standard form.
inline AlgebraElement amplified_element(const FiniteCStarAlgebra& a, const std::vector<std::vector<AlgebraElement>>& grid) {
  const Index n = static_cast<Index>(grid.size());
  const Index N = a.total_matrix_dim();
  ComplexMatrix f(n * N, n * N);
  for (Index i = 0; i < n; ++i) {
    if (static_cast<Index>(grid[static_cast<std::size_t>(i)].size()) != n) throw StructuralError("amplified_element: grid is not square");
    for (Index j = 0; j < n; ++j) {
      const auto& x = grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (x.algebra() != a) throw StructuralError("amplified_element: entry not in A");
      f.block(i * N, j * N, N, N) = x.block_diagonal();
    }
  }
  return amplified_from_flat(f, a, n);
}

// rho^(n): M_n(A) -> L_B(E^n), [a_ij] -> [rho(a_ij)].
inline CompletelyPositiveMap amplify(const CompletelyPositiveMap& rho, Index n) {
  if (n < 1) throw PreconditionError("amplify: n must be positive");
  if (n == 1) return rho;
  const auto& a = rho.source();
  const Index NA = a.total_matrix_dim();
  const Index d = rho.target().flat_dim();
  const HilbertModule en = module_power(rho.target(), n);
  const FiniteCStarAlgebra mn = matrix_amplification(a, n);
  return CompletelyPositiveMap::from_function(mn, en, [&](const AlgebraElement& x) {
    const ComplexMatrix f = flat_from_amplified(x, a, n);
    ComplexMatrix out(n * d, n * d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        out.block(i * d, j * d, d, d) = rho.apply(AlgebraElement::from_block_diagonal(a, f.block(i * NA, j * NA, NA, NA))).flat();
    return AdjointableOperator(en, en, std::move(out));
  });
}

// C_k = sum_ij E_ij (x) rho(E^(k)_ij), one per block of A.
inline std::vector<ComplexMatrix> choi_matrices(const CompletelyPositiveMap& rho) {
  const auto& a = rho.source();
  const Index d = rho.target().flat_dim();
  std::vector<ComplexMatrix> out;
  for (Index k = 0; k < a.num_blocks(); ++k) {
    const Index n = a.block_size(k);
    ComplexMatrix c = ComplexMatrix::Zero(n * d, n * d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) c.block(i * d, j * d, d, d) = rho.basis_value(a.basis_position(k, i, j)).flat();
    out.push_back(std::move(c));
  }
  return out;
}

inline CpCertification verify_completely_positive(const CompletelyPositiveMap& rho, double tol = kDefaultTolerance) {
  CpCertification c;
  c.tolerance = tol;
  const auto& a = rho.source();
  double scale = 0.0;
  for (const auto& v : rho.basis_values()) scale = std::max(scale, v.flat().norm());
  for (Index i = 0; i < a.linear_dim(); ++i) {
    const auto bi = a.basis_index(i);
    const Index t = a.basis_position(bi.block, bi.col, bi.row);
    c.hermitian_residual = std::max(c.hermitian_residual, (rho.basis_value(t).flat() - rho.basis_value(i).flat().adjoint()).norm());
  }
  c.hermitian_preserving = c.hermitian_residual <= tol * (1.0 + scale);
  c.is_cp = c.hermitian_preserving;
  for (const auto& m : choi_matrices(rho)) {
    const double nm = matrix_operator_norm(m);
    const double mn = min_eigenvalue(hermitian_part(m));
    c.choi_min_eigenvalues.push_back(mn);
    c.choi_norms.push_back(nm);
    if (mn < -tol * (1.0 + nm)) c.is_cp = false;
  }
  return c;
}

inline CompletelyPositiveMap certify(const CompletelyPositiveMap& rho, double tol = kDefaultTolerance) {
  return rho.with_certification(verify_completely_positive(rho, tol));
}

inline VerificationReport certification_report(const CpCertification& c) {
  VerificationReport rep;
  rep.subject = "complete positivity";
  rep.require("hermitian preserving", c.hermitian_preserving);
  for (std::size_t k = 0; k < c.choi_min_eigenvalues.size(); ++k) {
    const double thr = c.tolerance * (1.0 + c.choi_norms[k]);
    rep.record("choi negativity", std::max(0.0, -c.choi_min_eigenvalues[k]), thr);
    if (c.choi_min_eigenvalues[k] < -thr) {
      std::ostringstream w;
      w << "Choi block " << k << " has eigenvalue " << c.choi_min_eigenvalues[k];
      rep.fail_with(w.str());
    }
  }
  rep.notes.push_back("choi min eigenvalue " + std::to_string(c.min_eigenvalue()));
  return rep;
}

// rho(1) = id_E, the finite-dimensional form of non-degeneracy.
inline VerificationReport verify_nondegenerate(const CompletelyPositiveMap& rho, double tol = kDefaultTolerance) {
  VerificationReport rep;
  rep.subject = "non-degeneracy";
  const double r = operator_distance(rho.apply(AlgebraElement::identity(rho.source())), AdjointableOperator::identity(rho.target()));
  rep.record("rho(1) = id", r, tol);
  if (r > tol) rep.fail_with("rho(1) differs from the identity operator");
  return rep;
}

// Unital *-homomorphism check on all basis pairs, with Frobenius residuals.
inline VerificationReport verify_representation(const CompletelyPositiveMap& phi, double tol = kDefaultTolerance) {
  VerificationReport rep;
  rep.subject = "representation";
  const auto& a = phi.source();
  double scale = 0.0;
  for (const auto& v : phi.basis_values()) scale = std::max(scale, v.flat().norm());
  const double thr = tol * (1.0 + scale * scale);
  const ComplexMatrix zero = ComplexMatrix::Zero(phi.target().flat_dim(), phi.target().flat_dim());
  double mult = 0.0;
  for (Index i = 0; i < a.linear_dim(); ++i) {
    const auto bi = a.basis_index(i);
    for (Index j = 0; j < a.linear_dim(); ++j) {
      const auto bj = a.basis_index(j);
      const ComplexMatrix prod = phi.basis_value(i).flat() * phi.basis_value(j).flat();
      const ComplexMatrix& lhs = (bi.block == bj.block && bi.col == bj.row)
                                     ? phi.basis_value(a.basis_position(bi.block, bi.row, bj.col)).flat()
                                     : zero;
      const double r = (lhs - prod).norm();
      if (r > mult) {
        mult = r;
        if (r > thr) {
          std::ostringstream w;
          w << "multiplicativity fails on basis pair (" << i << ", " << j << "), residual " << r;
          rep.fail_with(w.str());
        }
      }
    }
  }
  rep.record("multiplicative", mult, thr);
  double star = 0.0;
  for (Index i = 0; i < a.linear_dim(); ++i) {
    const auto bi = a.basis_index(i);
    star = std::max(star, (phi.basis_value(a.basis_position(bi.block, bi.col, bi.row)).flat() - phi.basis_value(i).flat().adjoint()).norm());
  }
  rep.record("star", star, tol * (1.0 + scale));
  if (star > tol * (1.0 + scale)) rep.fail_with("star-preservation fails");
  rep.absorb(verify_nondegenerate(phi, tol));
  return rep;
}

// Random unital CP map a -> V*(a (x) 1_k (x) 1_B)V with V an isometry.
inline CompletelyPositiveMap random_unital_cp(Rng& rng, const FiniteCStarAlgebra& a, const HilbertModule& e,
                                              Index multiplicity = 2) {
  const auto& b = e.base();
  const Index rows = a.total_matrix_dim() * multiplicity;
  ComplexMatrix v = restrict_to_pattern(b, random_complex_matrix(rng, rows * b.total_matrix_dim(), e.flat_dim()));
  v = v * e.projection();
  const ComplexMatrix g = hermitian_part(v.adjoint() * v);
  const ComplexMatrix inv_sqrt = hermitian_function(g, [](double x) { return x > 1e-12 ? 1.0 / std::sqrt(x) : 0.0; });
  v = restrict_to_pattern(b, v * inv_sqrt);
  return CompletelyPositiveMap::conjugation(a, e, v, multiplicity);
}

// rho(alpha_g(a)) = u_g rho(a) u_g* on every group element and basis element.
inline VerificationReport check_covariance(const CompletelyPositiveMap& rho, const GroupAction& alpha,
                                           const UnitaryRepresentation& u, double tol = kDefaultTolerance) {
  if (alpha.algebra() != rho.source()) throw StructuralError("check_covariance: action is not on the source algebra");
  if (u.module() != rho.target()) throw StructuralError("check_covariance: representation is not on the target module");
  if (alpha.group() != u.group()) throw StructuralError("check_covariance: action and representation use different groups");
  VerificationReport rep;
  rep.subject = "covariance";
  const auto& a = rho.source();
  double scale = 0.0;
  for (const auto& v : rho.basis_values()) scale = std::max(scale, matrix_operator_norm(v.flat()));
  const double thr = tol * (1.0 + scale);
  for (Index g = 0; g < alpha.group().order(); ++g) {
    const ComplexMatrix& ug = u.at(g).flat();
    for (Index i = 0; i < a.linear_dim(); ++i) {
      const ComplexMatrix lhs = rho.apply(alpha.apply(g, AlgebraElement::basis(a, i))).flat();
      const double r = matrix_operator_norm(lhs - ug * rho.basis_value(i).flat() * ug.adjoint());
      rep.record("covariance", r, thr);
      if (r > thr) {
        std::ostringstream w;
        w << "covariance fails at group element " << g << ", basis element " << i << ", residual " << r;
        rep.fail_with(w.str());
      }
    }
  }
  return rep;
}

// (1/|G|) sum_g u_g* sigma(alpha_g(a)) u_g.
inline CompletelyPositiveMap covariant_average(const CompletelyPositiveMap& sigma, const GroupAction& alpha,
                                               const UnitaryRepresentation& u) {
  if (alpha.algebra() != sigma.source() || u.module() != sigma.target() || alpha.group() != u.group())
    throw StructuralError("covariant_average: inconsistent shapes");
  const auto& a = sigma.source();
  const double w = 1.0 / static_cast<double>(alpha.group().order());
  return CompletelyPositiveMap::from_function(a, sigma.target(), [&](const AlgebraElement& x) {
    ComplexMatrix f = ComplexMatrix::Zero(sigma.target().flat_dim(), sigma.target().flat_dim());
    for (Index g = 0; g < alpha.group().order(); ++g) {
      const ComplexMatrix& ug = u.at(g).flat();
      f += ug.adjoint() * sigma.apply(alpha.apply(g, x)).flat() * ug;
    }
    return AdjointableOperator(sigma.target(), sigma.target(), w * f);
  });
}

}  // namespace prostar
