#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "prostar/algebra.hpp"
#include "prostar/homomorphism.hpp"
#include "prostar/random.hpp"

namespace prostar {

struct WedderburnOptions {
  std::uint64_t seed = 0;
  int retries = 5;
  double gap = 1e-6;             // minimal relative separation of distinct eigenvalues
  double tolerance = kDefaultTolerance;
};

// Standard form of a concrete *-subalgebra of M_N.
//
// `embedding` maps the standard form onto the span (as a unital, injective
// *-homomorphism into M_N); `coordinate_map` is its left inverse on the span.
struct WedderburnResult {
  FiniteCStarAlgebra standard_form;
  StarHomomorphism embedding;
  ComplexMatrix coordinate_map;           // linear_dim(standard_form) x N^2, acts on M_N coordinates
  std::vector<Index> multiplicities;      // per block: rank of the block's matrix units
  std::vector<ComplexMatrix> span_basis;  // Frobenius-orthonormal basis of the span
  Index ambient_dim = 0;
  int attempts = 0;
  VerificationReport report;

  AlgebraElement to_standard(const ComplexMatrix& x) const {
    const FiniteCStarAlgebra amb = FiniteCStarAlgebra::full(ambient_dim);
    return AlgebraElement::from_coordinates(standard_form,
                                            coordinate_map * AlgebraElement(amb, {x}).coordinates());
  }

  ComplexMatrix from_standard(const AlgebraElement& a) const { return embedding.apply(a).block(0); }
};

namespace detail {

struct Cluster {
  Index begin;
  Index end;
};

// Splits ascending eigenvalues into clusters; reports the smallest gap between clusters.
inline std::vector<Cluster> cluster_spectrum(const RealVector& values, double split, double* min_gap) {
  std::vector<Cluster> out;
  *min_gap = std::numeric_limits<double>::infinity();
  Index start = 0;
  for (Index i = 1; i <= values.size(); ++i) {
    if (i == values.size() || values(i) - values(i - 1) > split) {
      out.push_back({start, i});
      if (i < values.size()) *min_gap = std::min(*min_gap, values(i) - values(i - 1));
      start = i;
    }
  }
  return out;
}

inline ComplexMatrix project_onto(const ComplexMatrix& basis_cols, const ComplexVector& v) {
  return basis_cols * (basis_cols.adjoint() * v);
}

struct SimpleBlock {
  Index size = 0;
  Index multiplicity = 0;
  ComplexMatrix central;                 // minimal central projection, N x N
  std::vector<ComplexMatrix> units;      // E_rs, row-major, N x N
};

inline bool block_less(const SimpleBlock& a, const SimpleBlock& b) {
  auto lead = [](const ComplexMatrix& z) {
    for (Index i = 0; i < z.rows(); ++i)
      if (z(i, i).real() > 1e-8) return i;
    return z.rows();
  };
  const Index la = lead(a.central), lb = lead(b.central);
  if (la != lb) return la < lb;
  if (a.size != b.size) return a.size < b.size;
  for (Index j = 0; j < a.central.cols(); ++j)
    for (Index i = 0; i < a.central.rows(); ++i) {
      const double x = a.central(i, j).real(), y = b.central(i, j).real();
      if (std::abs(x - y) > 1e-9) return x > y;
    }
  for (Index j = 0; j < a.central.cols(); ++j)
    for (Index i = 0; i < a.central.rows(); ++i) {
      const double x = a.central(i, j).imag(), y = b.central(i, j).imag();
      if (std::abs(x - y) > 1e-9) return x > y;
    }
  return false;
}

}  // namespace detail

// Standardizes a *-closed unital subalgebra of M_N (given by a spanning set)
// into a direct sum of full matrix blocks.
//
// Orthonormalize the span, compute its center, split the identity with the
// spectral projections of a random self-adjoint central element, then build
// matrix units inside each simple summand from a random self-adjoint element
// (diagonal units) and a random element (off-diagonal units).
inline WedderburnResult wedderburn_decompose(const std::vector<ComplexMatrix>& spanning_set,
                                             const WedderburnOptions& opt = {}) {
  if (spanning_set.empty()) throw PreconditionError("wedderburn_decompose: empty spanning set");
  const Index N = spanning_set.front().rows();
  for (const auto& s : spanning_set) {
    if (s.rows() != N || s.cols() != N) throw PreconditionError("wedderburn_decompose: spanning matrices must be N x N");
    require_finite(s, "wedderburn_decompose");
  }
  const double tol = opt.tolerance;

  // Orthonormal basis of the span, as columns of vec() coordinates.
  ComplexMatrix S(N * N, static_cast<Index>(spanning_set.size()));
  for (std::size_t i = 0; i < spanning_set.size(); ++i) S.col(static_cast<Index>(i)) = vec(spanning_set[i]);
  ComplexMatrix Q;
  for (int pass = 0; pass < 2; ++pass) {
    const ComplexMatrix& src = pass == 0 ? S : Q;
    const auto eig = hermitian_eigendecomposition(hermitian_part(src.adjoint() * src));
    const double top = eig.values(eig.values.size() - 1);
    if (top <= 0.0) throw PreconditionError("wedderburn_decompose: spanning set is zero");
    std::vector<Index> keep;
    for (Index i = 0; i < eig.values.size(); ++i)
      if (eig.values(i) > 1e-10 * top) keep.push_back(i);
    ComplexMatrix next(N * N, static_cast<Index>(keep.size()));
    for (std::size_t t = 0; t < keep.size(); ++t)
      next.col(static_cast<Index>(t)) = src * eig.vectors.col(keep[t]) / std::sqrt(eig.values(keep[t]));
    Q = std::move(next);
  }
  const Index D = Q.cols();
  std::vector<ComplexMatrix> basis;
  for (Index i = 0; i < D; ++i) basis.push_back(unvec(Q.col(i), N, N));

  WedderburnResult res{FiniteCStarAlgebra(), StarHomomorphism::identity(FiniteCStarAlgebra()), {}, {}, {}, N, 0, {}};
  res.report.subject = "wedderburn";

  // Unit, *-closure and product closure.
  {
    const ComplexVector id = vec(ComplexMatrix::Identity(N, N));
    const double r = (id - detail::project_onto(Q, id)).norm() / std::sqrt(static_cast<double>(N));
    res.report.record("unit in span", r, 1e-8);
    if (r > 1e-8) throw PreconditionError("wedderburn_decompose: span does not contain the identity");
    double star = 0.0, prod = 0.0;
    for (Index i = 0; i < D; ++i) {
      const ComplexVector v = vec(basis[static_cast<std::size_t>(i)].adjoint());
      star = std::max(star, (v - detail::project_onto(Q, v)).norm());
    }
    res.report.record("star closed", star, 1e-8);
    if (star > 1e-8) throw PreconditionError("wedderburn_decompose: span is not *-closed");
    double pscale = 0.0;
    for (Index i = 0; i < D; ++i)
      for (Index j = 0; j < D; ++j) {
        const ComplexVector v = vec(basis[static_cast<std::size_t>(i)] * basis[static_cast<std::size_t>(j)]);
        pscale = std::max(pscale, v.norm());
        prod = std::max(prod, (v - detail::project_onto(Q, v)).norm());
      }
    res.report.record("product closed", prod, 1e-8 * (1.0 + pscale));
    if (prod > 1e-8 * (1.0 + pscale)) throw PreconditionError("wedderburn_decompose: span is not closed under products");
  }

  // Center: null space of x -> ([x, b_j])_j.
  ComplexMatrix centre;
  {
    ComplexMatrix M = ComplexMatrix::Zero(D, D);
    for (Index j = 0; j < D; ++j) {
      ComplexMatrix X(N * N, D);
      const auto& bj = basis[static_cast<std::size_t>(j)];
      for (Index i = 0; i < D; ++i) {
        const auto& bi = basis[static_cast<std::size_t>(i)];
        X.col(i) = vec(bi * bj - bj * bi);
      }
      M.noalias() += X.adjoint() * X;
    }
    const auto eig = hermitian_eigendecomposition(hermitian_part(M));
    const double top = std::max(eig.values(eig.values.size() - 1), 0.0);
    std::vector<Index> nul;
    for (Index i = 0; i < D; ++i)
      if (eig.values(i) <= std::max(1e-9 * top, 1e-14)) nul.push_back(i);
    centre.resize(N * N, static_cast<Index>(nul.size()));
    for (std::size_t t = 0; t < nul.size(); ++t) centre.col(static_cast<Index>(t)) = Q * eig.vectors.col(nul[t]);
  }
  const Index centre_dim = centre.cols();
  res.report.notes.push_back("center dimension " + std::to_string(centre_dim));

  Rng rng(opt.seed);
  std::vector<detail::SimpleBlock> blocks;
  bool separated = false;
  for (int attempt = 0; attempt < opt.retries && !separated; ++attempt) {
    res.attempts = attempt + 1;
    blocks.clear();
    ComplexVector zc = ComplexVector::Zero(N * N);
    for (Index l = 0; l < centre_dim; ++l) {
      const double re = gaussian(rng), im = gaussian(rng);
      zc += Complex(re, im) * centre.col(l);
    }
    const ComplexMatrix z = hermitian_part(unvec(zc, N, N));
    const auto ez = hermitian_eigendecomposition(z);
    const double zscale = std::max(1e-300, ez.values.cwiseAbs().maxCoeff());
    double gap = 0.0;
    const auto clusters = detail::cluster_spectrum(ez.values, 1e-9 * zscale, &gap);
    if (static_cast<Index>(clusters.size()) != centre_dim || gap < opt.gap * zscale) continue;

    bool ok = true;
    for (const auto& c : clusters) {
      detail::SimpleBlock blk;
      const Index r = c.end - c.begin;
      const ComplexMatrix Y = ez.vectors.middleCols(c.begin, r);
      blk.central = Y * Y.adjoint();
      std::vector<ComplexMatrix> compressed;
      ComplexMatrix C(r * r, D);
      for (Index i = 0; i < D; ++i) {
        compressed.push_back(Y.adjoint() * basis[static_cast<std::size_t>(i)] * Y);
        C.col(i) = vec(compressed.back());
      }
      const Index d = column_rank(C, 1e-10);
      const Index m = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(d))));
      if (m * m != d || m == 0 || r % m != 0) {
        ok = false;
        break;
      }
      blk.size = m;
      blk.multiplicity = r / m;

      // Diagonal matrix units from a random self-adjoint element of the block.
      std::vector<ComplexMatrix> diag_vecs;  // r x mult each
      if (m == 1) {
        diag_vecs.push_back(ComplexMatrix::Identity(r, r));
      } else {
        ComplexMatrix h = ComplexMatrix::Zero(r, r);
        for (Index i = 0; i < D; ++i) h += gaussian(rng) * compressed[static_cast<std::size_t>(i)];
        h = hermitian_part(h);
        const auto eh = hermitian_eigendecomposition(h);
        const double hscale = std::max(1e-300, eh.values.cwiseAbs().maxCoeff());
        double hgap = 0.0;
        const auto hc = detail::cluster_spectrum(eh.values, 1e-9 * hscale, &hgap);
        if (static_cast<Index>(hc.size()) != m || hgap < opt.gap * hscale) {
          ok = false;
          break;
        }
        for (const auto& cc : hc) {
          if (cc.end - cc.begin != blk.multiplicity) {
            ok = false;
            break;
          }
          diag_vecs.push_back(eh.vectors.middleCols(cc.begin, cc.end - cc.begin));
        }
        if (!ok) break;
      }

      // Off-diagonal units e_{1j} from the compression of a random element.
      std::vector<ComplexMatrix> first_row(static_cast<std::size_t>(m));  // r x r
      first_row[0] = diag_vecs[0] * diag_vecs[0].adjoint();
      ComplexMatrix x = ComplexMatrix::Zero(r, r);
      for (Index i = 0; i < D; ++i) {
        const double re = gaussian(rng), im = gaussian(rng);
        x += Complex(re, im) * compressed[static_cast<std::size_t>(i)];
      }
      const double xscale = std::max(1e-300, x.norm());
      for (Index j = 1; j < m && ok; ++j) {
        const ComplexMatrix y = diag_vecs[0].adjoint() * x * diag_vecs[static_cast<std::size_t>(j)];
        const double ny = matrix_operator_norm(y);
        if (ny < opt.gap * xscale) {
          ok = false;
          break;
        }
        const ComplexMatrix u = y / ny;
        if ((u.adjoint() * u - ComplexMatrix::Identity(u.cols(), u.cols())).norm() > 1e-8) {
          ok = false;
          break;
        }
        first_row[static_cast<std::size_t>(j)] = diag_vecs[0] * u * diag_vecs[static_cast<std::size_t>(j)].adjoint();
      }
      if (!ok) break;
      for (Index a = 0; a < m; ++a)
        for (Index b = 0; b < m; ++b) {
          const ComplexMatrix e = first_row[static_cast<std::size_t>(a)].adjoint() * first_row[static_cast<std::size_t>(b)];
          blk.units.push_back(Y * e * Y.adjoint());
        }
      blocks.push_back(std::move(blk));
    }
    separated = ok;
  }
  if (!separated) {
    std::ostringstream msg;
    msg << "wedderburn_decompose: could not separate " << centre_dim << " simple summands after " << opt.retries
        << " attempts";
    throw NumericalError(msg.str());
  }

  std::stable_sort(blocks.begin(), blocks.end(), detail::block_less);
  std::vector<Index> sizes;
  Index total = 0;
  for (const auto& b : blocks) {
    sizes.push_back(b.size);
    res.multiplicities.push_back(b.multiplicity);
    total += b.size * b.size;
  }
  if (total != D) {
    std::ostringstream msg;
    msg << "wedderburn_decompose: block dimensions sum to " << total << " but the span has dimension " << D;
    throw NumericalError(msg.str());
  }

  const FiniteCStarAlgebra std_form(sizes);
  const FiniteCStarAlgebra amb = FiniteCStarAlgebra::full(N);
  ComplexMatrix action(N * N, std_form.linear_dim());
  ComplexMatrix coord(std_form.linear_dim(), N * N);
  double span_defect = 0.0;
  Index col = 0;
  for (const auto& b : blocks)
    for (const auto& e : b.units) {
      action.col(col) = AlgebraElement(amb, {e}).coordinates();
      coord.row(col) = action.col(col).adjoint() / static_cast<double>(b.multiplicity);
      const ComplexVector v = vec(e);
      span_defect = std::max(span_defect, (v - detail::project_onto(Q, v)).norm());
      ++col;
    }

  res.standard_form = std_form;
  res.coordinate_map = std::move(coord);
  res.span_basis = std::move(basis);
  res.report.record("units in span", span_defect, 1e-8);

  HomomorphismCheckOptions hopt;
  hopt.tolerance = tol;
  StarHomomorphism emb(std_form, amb, std::move(action));
  const auto hrep = verify_star_homomorphism(emb, hopt);
  res.report.absorb(hrep.report, "embedding");
  const Index rank = column_rank(emb.action_matrix());
  res.report.require("embedding injective", rank == std_form.linear_dim());
  res.embedding = emb.with_flags(hrep.flags);
  return res;
}

}  // namespace prostar
