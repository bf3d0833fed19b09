#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "prostar/cp_map.hpp"
#include "prostar/group.hpp"
#include "prostar/hilbert_module.hpp"
#include "prostar/random.hpp"
#include "prostar/report.hpp"

namespace prostar {

struct KsgnsOptions {
  double tolerance = kDefaultTolerance;
  double null_relative = 1e-9;
  double null_floor = 1e-14;
  // When set, the spanning set uses a seeded random unitary change of the
  // basis of A, which gives a different (but equivalent) realization.
  std::optional<std::uint64_t> mixing_seed;
};

// Gram data of the spanning set {b_i (x) xi_t} of A (x) E, indexed i*dE + t.
struct GramData {
  Index algebra_dim = 0;
  Index module_dim = 0;
  ComplexBasis module_basis;
  ComplexMatrix mixing;   // b_i = sum_j mixing(j, i) a_j
  ComplexMatrix scalar;   // tr <b_i (x) xi_s, b_j (x) xi_t>
  ComplexMatrix bvalued;  // flattened; N_B-block (m, n) is the B-valued entry
  FiniteCStarAlgebra base;

  Index size() const { return algebra_dim * module_dim; }

  AlgebraElement bvalued_entry(Index m, Index n) const {
    const Index N = base.total_matrix_dim();
    return AlgebraElement::from_block_diagonal(base, bvalued.block(m * N, n * N, N, N));
  }
};

namespace detail {

// [rho(a_k* a_l)]_{kl} as a flattened dA x dA matrix over L_B(E).
inline ComplexMatrix kernel_matrix(const CompletelyPositiveMap& rho) {
  const auto& a = rho.source();
  const Index dA = a.linear_dim();
  const Index d = rho.target().flat_dim();
  ComplexMatrix r = ComplexMatrix::Zero(dA * d, dA * d);
  for (Index k = 0; k < dA; ++k) {
    const auto bk = a.basis_index(k);
    for (Index l = 0; l < dA; ++l) {
      const auto bl = a.basis_index(l);
      // E_{pq}* E_{p'q'} = delta_{pp'} E_{qq'}
      if (bk.block == bl.block && bk.row == bl.row)
        r.block(k * d, l * d, d, d) = rho.basis_value(a.basis_position(bk.block, bk.col, bl.col)).flat();
    }
  }
  return r;
}

inline ComplexMatrix mixing_unitary(const FiniteCStarAlgebra& a, const std::optional<std::uint64_t>& seed) {
  if (!seed) return ComplexMatrix::Identity(a.linear_dim(), a.linear_dim());
  Rng rng(*seed);
  return random_unitary_matrix(rng, a.linear_dim());
}

}  // namespace detail

inline GramData gram_operator(const CompletelyPositiveMap& rho, const KsgnsOptions& opt = {}) {
  const auto cert = rho.certification() ? *rho.certification() : verify_completely_positive(rho, opt.tolerance);
  if (!cert.is_cp) {
    std::ostringstream msg;
    msg << "gram_operator: map is not completely positive (Choi min eigenvalue " << cert.min_eigenvalue() << ")";
    throw PreconditionError(msg.str());
  }
  GramData g;
  g.base = rho.target().base();
  g.module_basis = complex_basis(rho.target());
  g.algebra_dim = rho.source().linear_dim();
  g.module_dim = g.module_basis.size();
  g.mixing = detail::mixing_unitary(rho.source(), opt.mixing_seed);
  const Index N = g.base.total_matrix_dim();
  const Index d = rho.target().flat_dim();
  const Index dA = g.algebra_dim, dE = g.module_dim;

  const ComplexMatrix om = kron(g.mixing, ComplexMatrix::Identity(d, d));
  const ComplexMatrix r = om.adjoint() * detail::kernel_matrix(rho) * om;
  ComplexMatrix xi(d, dE * N);
  for (Index t = 0; t < dE; ++t) xi.middleCols(t * N, N) = g.module_basis.flat(t);
  const ComplexMatrix big = kron(ComplexMatrix::Identity(dA, dA), xi);
  g.bvalued = restrict_to_pattern(g.base, big.adjoint() * r * big);
  const Index S = dA * dE;
  g.scalar.resize(S, S);
  for (Index m = 0; m < S; ++m)
    for (Index n = 0; n < S; ++n) g.scalar(m, n) = g.bvalued.block(m * N, n * N, N, N).trace();
  g.scalar = hermitian_part(g.scalar);
  return g;
}

struct QuotientData {
  RealVector eigenvalues;   // all, ascending
  ComplexMatrix retained;   // W_r, S x r
  RealVector retained_values;
  ComplexMatrix null_space; // S x (S - r)
  double threshold = 0.0;
  double lambda_max = 0.0;
  bool ill_conditioned = false;

  Index null_dimension() const { return null_space.cols(); }
  // Class of a spanning-coordinate vector in E_rho coordinates.
  ComplexMatrix to_coordinates() const {
    return retained_values.cwiseSqrt().asDiagonal() * retained.adjoint();
  }
  // A preimage, in spanning coordinates, of each E_rho coordinate vector.
  ComplexMatrix from_coordinates() const {
    return retained * retained_values.cwiseSqrt().cwiseInverse().asDiagonal();
  }
};

// The dilation triple (E_rho, Phi_rho, V_rho) of a unital CP map.
struct KsgnsCore {
  CompletelyPositiveMap rho;
  GramData gram;
  QuotientData quotient;
  HilbertModule module;           // E_rho = Q B^N, N = dim(A) * rank(E)
  ComplexBasis basis;             // orthonormal basis of E_rho, columns of the quotient coordinates
  CompletelyPositiveMap representation;  // Phi_rho
  AdjointableOperator connector;  // V_rho : E -> E_rho
  VerificationReport report;
};

// Left multiplication, group shuffles and the unit, expressed on the
// spanning coordinates and pushed to E_rho.
namespace detail {

inline ComplexMatrix descend(const KsgnsCore& c, const ComplexMatrix& spanning_map) {
  return c.quotient.to_coordinates() * spanning_map * c.quotient.from_coordinates();
}

// max over null vectors w of <Mw, Mw>_rho / lambda_max.
inline double null_leak(const GramData& g, const QuotientData& q, const ComplexMatrix& m) {
  if (q.null_space.cols() == 0 || q.lambda_max <= 0.0) return 0.0;
  const ComplexMatrix y = m * q.null_space;
  double r = 0.0;
  for (Index k = 0; k < y.cols(); ++k) r = std::max(r, std::abs((y.col(k).adjoint() * g.scalar * y.col(k))(0, 0)));
  return r / q.lambda_max;
}

}  // namespace detail

inline KsgnsCore ksgns_construct(const CompletelyPositiveMap& rho_in, const KsgnsOptions& opt = {}) {
  const auto cert = rho_in.certification() ? *rho_in.certification() : verify_completely_positive(rho_in, opt.tolerance);
  if (!cert.is_cp) {
    std::ostringstream msg;
    msg << "ksgns_construct: map is not completely positive (Choi min eigenvalue " << cert.min_eigenvalue() << ")";
    throw PreconditionError(msg.str());
  }
  const auto nd = verify_nondegenerate(rho_in, std::max(opt.tolerance, 1e-9));
  if (!nd.passed()) throw PreconditionError("ksgns_construct: map is not unital (rho(1) != id_E)");

  KsgnsCore c;
  c.rho = rho_in.with_certification(cert);
  c.report.subject = "ksgns";
  c.gram = gram_operator(c.rho, opt);
  const auto& g = c.gram;
  const auto& b = g.base;
  const Index N = b.total_matrix_dim();
  const Index dA = g.algebra_dim, dE = g.module_dim, S = g.size();
  const Index d = c.rho.target().flat_dim();
  const Index rank = dA * c.rho.target().rank();

  // Null space of the scalar Gram.
  const auto eig = hermitian_eigendecomposition(g.scalar);
  auto& q = c.quotient;
  q.eigenvalues = eig.values;
  q.lambda_max = std::max(0.0, eig.values(S - 1));
  q.threshold = std::max(opt.null_relative * q.lambda_max, opt.null_floor);
  std::vector<Index> keep, drop;
  for (Index i = 0; i < S; ++i) {
    const double l = eig.values(i);
    (l > q.threshold ? keep : drop).push_back(i);
    if (l > q.threshold / 10.0 && l < q.threshold * 10.0) q.ill_conditioned = true;
  }
  if (keep.empty()) throw NumericalError("ksgns_construct: Gram form vanishes");
  q.retained.resize(S, static_cast<Index>(keep.size()));
  q.retained_values.resize(static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    q.retained.col(static_cast<Index>(k)) = eig.vectors.col(keep[k]);
    q.retained_values(static_cast<Index>(k)) = eig.values(keep[k]);
  }
  q.null_space.resize(S, static_cast<Index>(drop.size()));
  for (std::size_t k = 0; k < drop.size(); ++k) q.null_space.col(static_cast<Index>(k)) = eig.vectors.col(drop[k]);
  if (q.ill_conditioned) c.report.notes.push_back("warning: Gram eigenvalue within a factor 10 of the null-space threshold");

  // Spanning vector b_i (x) xi_t sits in B^{rank} as e_i (x) xi_t.
  const HilbertModule ambient(b, rank);
  ComplexMatrix emb = ComplexMatrix::Zero(rank * N * N, S);
  for (Index i = 0; i < dA; ++i)
    for (Index t = 0; t < dE; ++t) {
      ComplexMatrix f = ComplexMatrix::Zero(rank * N, N);
      f.middleRows(i * d, d) = g.module_basis.flat(t);
      emb.col(i * dE + t) = vec(f);
    }
  const ComplexMatrix z = emb * q.retained;
  ComplexMatrix qflat(rank * N, rank * N);
  for (Index j = 0; j < rank; ++j) {
    ComplexMatrix u = ComplexMatrix::Zero(rank * N, N);
    u.middleRows(j * N, N) = ComplexMatrix::Identity(N, N);
    qflat.middleCols(j * N, N) = unvec(z * (z.adjoint() * vec(u)), rank * N, N);
  }
  qflat = hermitian_part(restrict_to_pattern(b, qflat));
  c.module = HilbertModule(b, rank, qflat);
  if (complex_dimension(c.module) != static_cast<Index>(keep.size())) {
    std::ostringstream msg;
    msg << "ksgns_construct: retained span (dimension " << keep.size() << ") is not a submodule (module dimension "
        << complex_dimension(c.module) << ")";
    throw NumericalError(msg.str());
  }
  c.basis = ComplexBasis{c.module, z};

  const auto& a = c.rho.source();
  const ComplexMatrix om = g.mixing;
  const ComplexMatrix id_e = ComplexMatrix::Identity(dE, dE);
  std::vector<AdjointableOperator> phi;
  double leak = 0.0;
  for (Index m = 0; m < dA; ++m) {
    const ComplexMatrix l = kron(om.adjoint() * left_multiplication_matrix(AlgebraElement::basis(a, m)) * om, id_e);
    leak = std::max(leak, detail::null_leak(g, q, l));
    phi.push_back(operator_from_coordinates(c.basis, c.basis, detail::descend(c, l)));
  }
  c.representation = CompletelyPositiveMap(a, c.module, std::move(phi));
  c.report.record("well-defined (left multiplication)", leak, 1e-9);

  const ComplexMatrix unit = kron(ComplexMatrix(om.adjoint() * unit_coordinates(a)), id_e);
  c.connector = operator_from_coordinates(g.module_basis, c.basis, q.to_coordinates() * unit);
  c.report.notes.push_back("spanning set " + std::to_string(S) + ", null space " + std::to_string(q.null_dimension()) +
                           ", dilation dimension " + std::to_string(keep.size()));
  return c;
}

struct CovariantDilation {
  KsgnsCore core;
  GroupAction alpha;
  UnitaryRepresentation u;
  UnitaryRepresentation v;  // v^rho on E_rho
  VerificationReport report;

  const CompletelyPositiveMap& rho() const { return core.rho; }
  const HilbertModule& module() const { return core.module; }
  const CompletelyPositiveMap& representation() const { return core.representation; }
  const AdjointableOperator& connector() const { return core.connector; }
  Index dimension() const { return core.basis.size(); }
};

inline VerificationReport verify_dilation(const CovariantDilation& d, double tol = kDefaultTolerance);

inline CovariantDilation covariant_extend(const KsgnsCore& core, const GroupAction& alpha, const UnitaryRepresentation& u,
                                          double tol = kDefaultTolerance) {
  const auto cov = check_covariance(core.rho, alpha, u, tol);
  if (!cov.passed())
    throw PreconditionError("covariant_extend: covariance precondition fails" + (cov.witness ? ": " + *cov.witness : std::string()));
  CovariantDilation d;
  d.core = core;
  d.alpha = alpha;
  d.u = u;
  const auto& g = core.gram;
  std::vector<AdjointableOperator> vs;
  double leak = 0.0;
  for (Index x = 0; x < alpha.group().order(); ++x) {
    const ComplexMatrix ug = operator_coordinates(u.at(x), g.module_basis, g.module_basis);
    const ComplexMatrix mg = g.mixing.adjoint() * alpha.automorphism(x).action_matrix() * g.mixing;
    const ComplexMatrix shuffle = kron(mg, ug);
    leak = std::max(leak, detail::null_leak(g, core.quotient, shuffle));
    vs.push_back(operator_from_coordinates(core.basis, core.basis, detail::descend(core, shuffle)));
  }
  d.v = UnitaryRepresentation(alpha.group(), core.module, std::move(vs));
  d.report = verify_dilation(d, tol);
  d.report.record("well-defined (group shuffle)", leak, 1e-9);
  return d;
}

// Convenience: construct and extend in one step.
inline CovariantDilation covariant_dilation(const CompletelyPositiveMap& rho, const GroupAction& alpha,
                                            const UnitaryRepresentation& u, const KsgnsOptions& opt = {}) {
  return covariant_extend(ksgns_construct(rho, opt), alpha, u, opt.tolerance);
}

namespace detail {

inline std::vector<AlgebraElement> basis_and_unit(const FiniteCStarAlgebra& a) {
  std::vector<AlgebraElement> xs;
  xs.push_back(AlgebraElement::identity(a));
  for (Index i = 0; i < a.linear_dim(); ++i) xs.push_back(AlgebraElement::basis(a, i));
  return xs;
}

// Rank of span{Phi(a_i) W xi_s} against the complex dimension of the module.
inline std::pair<Index, Index> span_rank(const CompletelyPositiveMap& phi, const AdjointableOperator& w, const ComplexBasis& eb) {
  const Index N = phi.target().base().total_matrix_dim();
  const Index a_dim = phi.source().linear_dim();
  ComplexMatrix cols(phi.target().flat_dim() * N, a_dim * eb.size());
  for (Index i = 0; i < a_dim; ++i) {
    const ComplexMatrix pw = phi.basis_value(i).flat() * w.flat();
    for (Index s = 0; s < eb.size(); ++s) cols.col(i * eb.size() + s) = vec(pw * eb.flat(s));
  }
  return {column_rank(cols, 1e-9), complex_dimension(phi.target())};
}

}  // namespace detail

inline VerificationReport verify_dilation(const CovariantDilation& d, double tol) {
  VerificationReport rep;
  rep.subject = "covariant dilation";
  const auto& rho = d.core.rho;
  const auto& phi = d.core.representation;
  const auto& vr = d.core.connector;
  const auto& a = rho.source();

  for (const auto& x : detail::basis_and_unit(a)) {
    const ComplexMatrix r = rho.apply(x).flat();
    const double res = matrix_operator_norm(r - vr.flat().adjoint() * phi.apply(x).flat() * vr.flat());
    const double thr = tol * (1.0 + matrix_operator_norm(r));
    rep.record("dilation identity", res, thr);
    if (res > thr) {
      std::ostringstream w;
      w << "dilation identity rho(a) = V* Phi(a) V fails, residual " << res;
      rep.fail_with(w.str());
    }
  }

  const auto& alpha = d.alpha;
  for (Index g = 0; g < alpha.group().order(); ++g) {
    const ComplexMatrix& vg = d.v.at(g).flat();
    for (Index i = 0; i < a.linear_dim(); ++i) {
      const ComplexMatrix lhs = phi.apply(alpha.apply(g, AlgebraElement::basis(a, i))).flat();
      const ComplexMatrix& pi = phi.basis_value(i).flat();
      const double res = matrix_operator_norm(lhs - vg * pi * vg.adjoint());
      const double thr = tol * (1.0 + matrix_operator_norm(pi));
      rep.record("covariance", res, thr);
      if (res > thr) rep.fail_with("covariance Phi(alpha_g(a)) = v_g Phi(a) v_g* fails at g = " + std::to_string(g));
    }
    const double res = matrix_operator_norm(vg * vr.flat() - vr.flat() * d.u.at(g).flat());
    const double thr = tol * (1.0 + matrix_operator_norm(vr.flat()));
    rep.record("intertwining", res, thr);
    if (res > thr) rep.fail_with("intertwining v_g V = V u_g fails at g = " + std::to_string(g));
  }

  const auto [rank, dim] = detail::span_rank(phi, vr, d.core.gram.module_basis);
  rep.require("minimality", rank == dim);
  if (rank != dim) {
    std::ostringstream w;
    w << "minimality fails: span of Phi(a)V xi has dimension " << rank << " but the module has dimension " << dim;
    rep.fail_with(w.str());
  }

  rep.absorb(verify_representation(phi, tol), "representation");
  rep.absorb(verify_unitary_representation(d.v, tol), "v");
  return rep;
}

// Another dilation (F, Phi, v, W) of the same covariant map.
struct DilationTriple {
  CompletelyPositiveMap representation;
  UnitaryRepresentation unitaries;
  AdjointableOperator connector;

  const HilbertModule& module() const { return representation.target(); }
};

inline DilationTriple as_triple(const CovariantDilation& d) { return {d.core.representation, d.v, d.core.connector}; }

struct UniquenessResult {
  AdjointableOperator unitary;
  VerificationReport report;
};

// U(Phi_rho(a) V_rho xi) = Phi(a) W xi, solved in complex coordinates.
inline UniquenessResult uniqueness_unitary(const CovariantDilation& d, const DilationTriple& other,
                                           double tol = kDefaultTolerance) {
  const auto& rho = d.core.rho;
  const auto& a = rho.source();
  const auto& w = other.connector;
  const auto& phi = other.representation;
  if (phi.source() != a || w.domain() != rho.target() || w.codomain() != phi.target() ||
      other.unitaries.module() != phi.target() || other.unitaries.group() != d.alpha.group())
    throw StructuralError("uniqueness_unitary: other triple has inconsistent shapes");

  for (const auto& x : detail::basis_and_unit(a)) {
    const ComplexMatrix r = rho.apply(x).flat();
    const double res = matrix_operator_norm(r - w.flat().adjoint() * phi.apply(x).flat() * w.flat());
    if (res > tol * (1.0 + matrix_operator_norm(r))) {
      std::ostringstream msg;
      msg << "uniqueness_unitary: other triple fails the dilation identity W* Phi(a) W = rho(a) (residual " << res << ")";
      throw PreconditionError(msg.str());
    }
  }
  const auto eb = d.core.gram.module_basis;
  const auto [rank, dim] = detail::span_rank(phi, w, eb);
  if (rank != dim) {
    std::ostringstream msg;
    msg << "uniqueness_unitary: other triple fails the span condition (rank " << rank << " < dimension " << dim << ")";
    throw PreconditionError(msg.str());
  }
  for (Index g = 0; g < d.alpha.group().order(); ++g) {
    const double res = matrix_operator_norm(other.unitaries.at(g).flat() * w.flat() - w.flat() * d.u.at(g).flat());
    if (res > tol * (1.0 + matrix_operator_norm(w.flat()))) {
      std::ostringstream msg;
      msg << "uniqueness_unitary: other triple fails the intertwining v_g W = W u_g at g = " << g << " (residual " << res << ")";
      throw PreconditionError(msg.str());
    }
  }

  const auto fb = complex_basis(phi.target());
  const auto& rb = d.core.basis;
  const Index S = a.linear_dim() * eb.size();
  ComplexMatrix x(rb.size(), S), y(fb.size(), S);
  for (Index i = 0; i < a.linear_dim(); ++i) {
    const ComplexMatrix pv = d.core.representation.basis_value(i).flat() * d.core.connector.flat();
    const ComplexMatrix pw = phi.basis_value(i).flat() * w.flat();
    for (Index s = 0; s < eb.size(); ++s) {
      x.col(i * eb.size() + s) = rb.coordinates(pv * eb.flat(s));
      y.col(i * eb.size() + s) = fb.coordinates(pw * eb.flat(s));
    }
  }
  // x has full row rank by minimality: x^+ = x* (x x*)^{-1}.
  const ComplexMatrix xx = hermitian_part(x * x.adjoint());
  const ComplexMatrix xx_inv = hermitian_function(xx, [](double l) { return l > 1e-300 ? 1.0 / l : 0.0; });
  const ComplexMatrix uc = y * x.adjoint() * xx_inv;

  UniquenessResult out{operator_from_coordinates(rb, fb, uc), {}};
  auto& rep = out.report;
  rep.subject = "uniqueness unitary";
  const auto& U = out.unitary.flat();
  const auto uni = is_unitary(out.unitary, tol);
  rep.record("unitary", std::max(uni.isometry_residual, uni.coisometry_residual), tol);
  for (Index i = 0; i < a.linear_dim(); ++i) {
    const double res = matrix_operator_norm(phi.basis_value(i).flat() * U - U * d.core.representation.basis_value(i).flat());
    rep.record("intertwines representations", res, tol);
  }
  for (Index g = 0; g < d.alpha.group().order(); ++g) {
    const double res = matrix_operator_norm(other.unitaries.at(g).flat() * U - U * d.v.at(g).flat());
    rep.record("intertwines group unitaries", res, tol);
  }
  const double res = matrix_operator_norm(w.flat() - U * d.core.connector.flat());
  rep.record("maps connector", res, tol * (1.0 + matrix_operator_norm(w.flat())));
  if (!rep.passed()) rep.fail_with("the constructed operator does not implement a unitary equivalence");
  return out;
}

// Relabels the ambient coordinates of E_rho = Q B^N by a permutation.
inline DilationTriple permuted_triple(const CovariantDilation& d, const std::vector<Index>& perm) {
  const auto& b = d.module().base();
  const Index n = d.module().rank();
  if (static_cast<Index>(perm.size()) != n) throw StructuralError("permuted_triple: permutation has wrong size");
  ComplexMatrix p = ComplexMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) p(perm[static_cast<std::size_t>(i)], i) = 1.0;
  const ComplexMatrix pf = kron(p, ComplexMatrix::Identity(b.total_matrix_dim(), b.total_matrix_dim()));
  const HilbertModule f(b, n, pf * d.module().projection() * pf.adjoint());
  auto move = [&](const AdjointableOperator& t) { return AdjointableOperator(f, f, pf * t.flat() * pf.adjoint()); };
  std::vector<AdjointableOperator> phi, vs;
  for (const auto& t : d.representation().basis_values()) phi.push_back(move(t));
  for (const auto& t : d.v.unitaries()) vs.push_back(move(t));
  return {CompletelyPositiveMap(d.rho().source(), f, std::move(phi)), UnitaryRepresentation(d.alpha.group(), f, std::move(vs)),
          AdjointableOperator(d.rho().target(), f, pf * d.connector().flat())};
}

// Negative control: V_rho replaced by s V_rho.
inline CovariantDilation with_scaled_connector(const CovariantDilation& d, double s) {
  CovariantDilation out = d;
  out.core.connector = s * d.core.connector;
  return out;
}

// Negative control: E_rho (+) B with Phi (+) 0, v (+) 1 and V (+) 0.
inline CovariantDilation with_padded_module(const CovariantDilation& d) {
  CovariantDilation out = d;
  const auto& b = d.module().base();
  const Index N = b.total_matrix_dim();
  const Index n = d.module().rank();
  const Index fd = (n + 1) * N;
  ComplexMatrix q = ComplexMatrix::Zero(fd, fd);
  q.topLeftCorner(n * N, n * N) = d.module().projection();
  q.bottomRightCorner(N, N) = ComplexMatrix::Identity(N, N);
  const HilbertModule padded(b, n + 1, q);
  auto grow = [&](const ComplexMatrix& t, bool unit) {
    ComplexMatrix f = ComplexMatrix::Zero(fd, fd);
    f.topLeftCorner(n * N, n * N) = t;
    if (unit) f.bottomRightCorner(N, N) = ComplexMatrix::Identity(N, N);
    return AdjointableOperator(padded, padded, f);
  };
  std::vector<AdjointableOperator> phi, vs;
  for (const auto& t : d.representation().basis_values()) phi.push_back(grow(t.flat(), false));
  for (const auto& t : d.v.unitaries()) vs.push_back(grow(t.flat(), true));
  out.core.module = padded;
  out.core.representation = CompletelyPositiveMap(d.rho().source(), padded, std::move(phi));
  out.v = UnitaryRepresentation(d.alpha.group(), padded, std::move(vs));
  ComplexMatrix vf = ComplexMatrix::Zero(fd, d.connector().flat().cols());
  vf.topRows(n * N) = d.connector().flat();
  out.core.connector = AdjointableOperator(d.rho().target(), padded, vf);
  ComplexMatrix basis = ComplexMatrix::Zero(fd * N, d.core.basis.size());
  for (Index k = 0; k < d.core.basis.size(); ++k) {
    ComplexMatrix f = ComplexMatrix::Zero(fd, N);
    f.topRows(n * N) = d.core.basis.flat(k);
    basis.col(k) = vec(f);
  }
  out.core.basis = ComplexBasis{padded, basis};
  return out;
}

// Scalarization check on the Gram data: a spanning-coordinate vector has zero
// B-valued self inner product iff its scalar Gram value is below threshold.
struct ScalarizationCheck {
  double null_bvalued = 0.0;     // max ||<w, w>_B|| / lambda_max over null vectors
  double retained_bvalued = 0.0; // min ||<w, w>_B|| / lambda_max over retained vectors
  bool consistent = false;
};

inline ScalarizationCheck scalarization_check(const GramData& g, const QuotientData& q) {
  const Index N = g.base.total_matrix_dim();
  auto bform = [&](const ComplexVector& w) {
    ComplexMatrix m = ComplexMatrix::Zero(N, N);
    for (Index i = 0; i < w.size(); ++i)
      for (Index j = 0; j < w.size(); ++j)
        if (w(i) != Complex(0.0, 0.0) && w(j) != Complex(0.0, 0.0))
          m += std::conj(w(i)) * w(j) * g.bvalued.block(i * N, j * N, N, N);
    return matrix_operator_norm(hermitian_part(m));
  };
  ScalarizationCheck c;
  const double lm = std::max(q.lambda_max, 1e-300);
  for (Index k = 0; k < q.null_space.cols(); ++k) c.null_bvalued = std::max(c.null_bvalued, bform(q.null_space.col(k)) / lm);
  c.retained_bvalued = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < q.retained.cols(); ++k) c.retained_bvalued = std::min(c.retained_bvalued, bform(q.retained.col(k)) / lm);
  c.consistent = c.null_bvalued <= 1e-9 && c.retained_bvalued > q.threshold / lm / static_cast<double>(N);
  return c;
}

}  // namespace prostar
