#pragma once

#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "prostar/algebra.hpp"
#include "prostar/report.hpp"

namespace prostar {

enum class Check { unchecked, yes, no };

inline Check to_check(bool b) { return b ? Check::yes : Check::no; }

struct HomomorphismFlags {
  Check multiplicative = Check::unchecked;
  Check star = Check::unchecked;
  Check unital = Check::unchecked;
  Check surjective = Check::unchecked;
};

// Linear map between standard-form algebras, stored as a matrix acting on
// matrix-unit coordinates: shape linear_dim(target) x linear_dim(source).
class StarHomomorphism {
 public:
  StarHomomorphism() : StarHomomorphism(identity(FiniteCStarAlgebra())) {}

  StarHomomorphism(FiniteCStarAlgebra source, FiniteCStarAlgebra target, ComplexMatrix action)
      : source_(std::move(source)), target_(std::move(target)), action_(std::move(action)) {
    if (action_.rows() != target_.linear_dim() || action_.cols() != source_.linear_dim())
      throw StructuralError("StarHomomorphism: action matrix shape does not match source/target");
    require_finite(action_, "StarHomomorphism");
  }

  static StarHomomorphism identity(const FiniteCStarAlgebra& a) {
    return StarHomomorphism(a, a, ComplexMatrix::Identity(a.linear_dim(), a.linear_dim()));
  }

  // Builds the action matrix by evaluating f on every matrix unit.
  static StarHomomorphism from_function(const FiniteCStarAlgebra& source, const FiniteCStarAlgebra& target,
                                        const std::function<AlgebraElement(const AlgebraElement&)>& f) {
    ComplexMatrix m(target.linear_dim(), source.linear_dim());
    for (Index i = 0; i < source.linear_dim(); ++i) {
      AlgebraElement img = f(AlgebraElement::basis(source, i));
      if (img.algebra() != target) throw StructuralError("StarHomomorphism::from_function: image in wrong algebra");
      m.col(i) = img.coordinates();
    }
    return StarHomomorphism(source, target, std::move(m));
  }

  // Keeps the listed source blocks, in the given order: A -> (+)_{k in kept} M_{n_k}.
  static StarHomomorphism block_projection(const FiniteCStarAlgebra& source, const std::vector<Index>& kept) {
    std::vector<Index> sizes;
    for (Index k : kept) sizes.push_back(source.block_size(k));
    FiniteCStarAlgebra target(sizes);
    return from_function(source, target, [&](const AlgebraElement& a) {
      std::vector<ComplexMatrix> blocks;
      for (Index k : kept) blocks.push_back(a.block(k));
      return AlgebraElement(target, std::move(blocks));
    });
  }

  // Inner automorphism a -> u a u*.
  static StarHomomorphism conjugation(const AlgebraElement& u) {
    const auto& a = u.algebra();
    return from_function(a, a, [&](const AlgebraElement& x) { return u * x * u.adjoint(); });
  }

  const FiniteCStarAlgebra& source() const { return source_; }
  const FiniteCStarAlgebra& target() const { return target_; }
  const ComplexMatrix& action_matrix() const { return action_; }
  const HomomorphismFlags& flags() const { return flags_; }

  StarHomomorphism with_flags(HomomorphismFlags f) const {
    StarHomomorphism out = *this;
    out.flags_ = f;
    return out;
  }

  AlgebraElement apply(const AlgebraElement& a) const {
    if (a.algebra() != source_) throw StructuralError("StarHomomorphism::apply: argument not in source algebra");
    return AlgebraElement::from_coordinates(target_, action_ * a.coordinates());
  }

  AlgebraElement operator()(const AlgebraElement& a) const { return apply(a); }

  AlgebraElement image_of_basis(Index i) const { return AlgebraElement::from_coordinates(target_, action_.col(i)); }

 private:
  FiniteCStarAlgebra source_;
  FiniteCStarAlgebra target_;
  ComplexMatrix action_;
  HomomorphismFlags flags_;
};

// outer o inner.
inline StarHomomorphism compose(const StarHomomorphism& outer, const StarHomomorphism& inner) {
  if (inner.target() != outer.source()) throw StructuralError("compose: target/source mismatch");
  return StarHomomorphism(inner.source(), outer.target(), outer.action_matrix() * inner.action_matrix());
}

struct HomomorphismCheckOptions {
  double tolerance = kDefaultTolerance;
  bool check_surjective = false;
  bool check_unital = true;
};

struct HomomorphismReport {
  VerificationReport report;
  HomomorphismFlags flags;
  bool passed() const { return report.passed(); }
};

namespace detail {

inline double blockwise_frobenius(const AlgebraElement& a) {
  double s = 0.0;
  for (const auto& b : a.blocks()) s = std::max(s, b.norm());
  return s;
}

}  // namespace detail

// Checks multiplicativity on all basis pairs, *-preservation on all basis
// elements, unitality and (optionally) surjectivity by rank. Residuals are
// max blockwise Frobenius norms, which bound the C*-norm from above.
inline HomomorphismReport verify_star_homomorphism(const StarHomomorphism& phi,
                                                   const HomomorphismCheckOptions& opt = {}) {
  HomomorphismReport out;
  out.report.subject = "star-homomorphism " + phi.source().describe() + " -> " + phi.target().describe();
  const auto& src = phi.source();
  const double tol = opt.tolerance;

  std::vector<AlgebraElement> images;
  images.reserve(static_cast<std::size_t>(src.linear_dim()));
  double scale = 0.0;
  for (Index i = 0; i < src.linear_dim(); ++i) {
    images.push_back(phi.image_of_basis(i));
    scale = std::max(scale, detail::blockwise_frobenius(images.back()));
  }
  const double thr = tol * (1.0 + scale * scale);

  double mult = 0.0;
  for (Index i = 0; i < src.linear_dim(); ++i) {
    const auto bi = src.basis_index(i);
    for (Index j = 0; j < src.linear_dim(); ++j) {
      const auto bj = src.basis_index(j);
      AlgebraElement lhs = AlgebraElement::zero(phi.target());
      if (bi.block == bj.block && bi.col == bj.row) lhs = images[static_cast<std::size_t>(src.basis_position(bi.block, bi.row, bj.col))];
      const double r = detail::blockwise_frobenius(lhs - images[static_cast<std::size_t>(i)] * images[static_cast<std::size_t>(j)]);
      if (r > mult) {
        mult = r;
        if (r > thr) {
          std::ostringstream w;
          w << "multiplicativity fails on basis pair (" << i << ", " << j << "), residual " << r;
          out.report.fail_with(w.str());
        }
      }
    }
  }
  out.report.record("multiplicative", mult, thr);
  out.flags.multiplicative = to_check(mult <= thr);

  double star = 0.0;
  for (Index i = 0; i < src.linear_dim(); ++i) {
    const auto bi = src.basis_index(i);
    const Index ti = src.basis_position(bi.block, bi.col, bi.row);
    const double r = detail::blockwise_frobenius(images[static_cast<std::size_t>(ti)] - images[static_cast<std::size_t>(i)].adjoint());
    star = std::max(star, r);
  }
  out.report.record("star", star, tol * (1.0 + scale));
  out.flags.star = to_check(star <= tol * (1.0 + scale));
  if (star > tol * (1.0 + scale)) out.report.fail_with("star-preservation fails");

  if (opt.check_unital) {
    const double u = detail::blockwise_frobenius(phi.apply(AlgebraElement::identity(src)) -
                                                 AlgebraElement::identity(phi.target()));
    out.report.record("unital", u, tol * (1.0 + scale));
    out.flags.unital = to_check(u <= tol * (1.0 + scale));
    if (!(u <= tol * (1.0 + scale))) out.report.fail_with("unitality fails");
  }

  if (opt.check_surjective) {
    const Index rank = column_rank(phi.action_matrix());
    const bool ok = rank == phi.target().linear_dim();
    out.report.require("surjective", ok);
    out.flags.surjective = to_check(ok);
    if (!ok) {
      std::ostringstream w;
      w << "rank " << rank << " < target dimension " << phi.target().linear_dim();
      out.report.fail_with(w.str());
    }
  }
  return out;
}

}  // namespace prostar
