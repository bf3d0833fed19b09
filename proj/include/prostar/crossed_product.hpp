#pragma once

#include <memory>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/LU>

#include "prostar/cp_map.hpp"
#include "prostar/group.hpp"
#include "prostar/ksgns.hpp"
#include "prostar/wedderburn.hpp"

namespace prostar {

using SystemPtr = std::shared_ptr<const GroupAction>;

inline SystemPtr make_system(GroupAction alpha) { return std::make_shared<const GroupAction>(std::move(alpha)); }

namespace detail {

inline bool same_system(const GroupAction& a, const GroupAction& b) {
  if (&a == &b) return true;
  if (a.group() != b.group() || a.algebra() != b.algebra()) return false;
  for (Index g = 0; g < a.group().order(); ++g)
    if ((a.automorphism(g).action_matrix() - b.automorphism(g).action_matrix()).norm() > 1e-12) return false;
  return true;
}

}  // namespace detail

// f : G -> A for a system (G, A, alpha).
class ConvolutionElement {
 public:
  ConvolutionElement(SystemPtr system, std::vector<AlgebraElement> values)
      : system_(std::move(system)), values_(std::move(values)) {
    if (!system_) throw StructuralError("ConvolutionElement: null system");
    if (static_cast<Index>(values_.size()) != system_->group().order())
      throw StructuralError("ConvolutionElement: one value per group element required");
    for (const auto& v : values_)
      if (v.algebra() != system_->algebra()) throw StructuralError("ConvolutionElement: value not in the algebra");
  }

  static ConvolutionElement zero(const SystemPtr& s) {
    return ConvolutionElement(s, std::vector<AlgebraElement>(static_cast<std::size_t>(s->group().order()),
                                                             AlgebraElement::zero(s->algebra())));
  }

  // delta_g (x) a
  static ConvolutionElement delta(const SystemPtr& s, Index g, const AlgebraElement& a) {
    ConvolutionElement f = zero(s);
    f.values_.at(static_cast<std::size_t>(g)) = a;
    return f;
  }

  static ConvolutionElement unit(const SystemPtr& s) {
    return delta(s, s->group().identity(), AlgebraElement::identity(s->algebra()));
  }

  const SystemPtr& system() const { return system_; }
  const GroupAction& action() const { return *system_; }
  const std::vector<AlgebraElement>& values() const { return values_; }
  const AlgebraElement& value(Index g) const { return values_.at(static_cast<std::size_t>(g)); }

  // Coordinates indexed g * dim(A) + i.
  ComplexVector coordinates() const {
    const Index d = system_->algebra().linear_dim();
    ComplexVector c(d * static_cast<Index>(values_.size()));
    for (std::size_t g = 0; g < values_.size(); ++g) c.segment(static_cast<Index>(g) * d, d) = values_[g].coordinates();
    return c;
  }

  static ConvolutionElement from_coordinates(const SystemPtr& s, const ComplexVector& c) {
    const Index d = s->algebra().linear_dim();
    if (c.size() != d * s->group().order()) throw StructuralError("ConvolutionElement: wrong coordinate count");
    std::vector<AlgebraElement> vals;
    for (Index g = 0; g < s->group().order(); ++g) vals.push_back(AlgebraElement::from_coordinates(s->algebra(), c.segment(g * d, d)));
    return ConvolutionElement(s, std::move(vals));
  }

  void same_system(const ConvolutionElement& o) const {
    if (!detail::same_system(*system_, *o.system_)) throw StructuralError("ConvolutionElement: system mismatch");
  }

  friend ConvolutionElement operator+(const ConvolutionElement& f, const ConvolutionElement& h) {
    f.same_system(h);
    std::vector<AlgebraElement> v;
    for (std::size_t g = 0; g < f.values_.size(); ++g) v.push_back(f.values_[g] + h.values_[g]);
    return ConvolutionElement(f.system_, std::move(v));
  }
  friend ConvolutionElement operator-(const ConvolutionElement& f, const ConvolutionElement& h) {
    f.same_system(h);
    std::vector<AlgebraElement> v;
    for (std::size_t g = 0; g < f.values_.size(); ++g) v.push_back(f.values_[g] - h.values_[g]);
    return ConvolutionElement(f.system_, std::move(v));
  }
  friend ConvolutionElement operator*(Complex s, const ConvolutionElement& f) {
    std::vector<AlgebraElement> v;
    for (const auto& x : f.values_) v.push_back(s * x);
    return ConvolutionElement(f.system_, std::move(v));
  }

  double distance(const ConvolutionElement& o) const {
    same_system(o);
    double d = 0.0;
    for (std::size_t g = 0; g < values_.size(); ++g) d = std::max(d, values_[g].distance(o.values_[g]));
    return d;
  }

 private:
  SystemPtr system_;
  std::vector<AlgebraElement> values_;
};

inline ConvolutionElement random_convolution_element(Rng& rng, const SystemPtr& s) {
  std::vector<AlgebraElement> v;
  for (Index g = 0; g < s->group().order(); ++g) v.push_back(random_element(rng, s->algebra()));
  return ConvolutionElement(s, std::move(v));
}

// (f x h)(s) = sum_t f(t) alpha_t(h(t^-1 s)), counting measure on G.
inline ConvolutionElement convolve(const ConvolutionElement& f, const ConvolutionElement& h) {
  f.same_system(h);
  const auto& alpha = f.action();
  const auto& g = alpha.group();
  ConvolutionElement out = ConvolutionElement::zero(f.system());
  std::vector<AlgebraElement> v(out.values());
  for (Index t = 0; t < g.order(); ++t)
    for (Index s = 0; s < g.order(); ++s)
      v[static_cast<std::size_t>(s)] = v[static_cast<std::size_t>(s)] +
                                       f.value(t) * alpha.apply(t, h.value(g.mul(g.inverse(t), s)));
  return ConvolutionElement(f.system(), std::move(v));
}

// f#(t) = Delta(t)^-1 alpha_t(f(t^-1)*).
inline ConvolutionElement involution(const ConvolutionElement& f) {
  const auto& alpha = f.action();
  const auto& g = alpha.group();
  std::vector<AlgebraElement> v;
  for (Index t = 0; t < g.order(); ++t)
    v.push_back((1.0 / g.modular_function(t)) * alpha.apply(t, f.value(g.inverse(t)).adjoint()));
  return ConvolutionElement(f.system(), std::move(v));
}

// N(f) = sum_g ||f(g)||.
inline double l1_seminorm(const ConvolutionElement& f) {
  double s = 0.0;
  for (const auto& x : f.values()) s += operator_norm(x);
  return s;
}

// The same seminorm at a lower level: sum_g ||pi(f(g))||.
inline double l1_seminorm(const ConvolutionElement& f, const StarHomomorphism& pi) {
  double s = 0.0;
  for (const auto& x : f.values()) s += operator_norm(pi.apply(x));
  return s;
}

// A x| G realized by the regular representation on C^{N_A} (x) C^{|G|}:
// pi(a) acts on slot t by alpha_{t^-1}(a), lambda_g e_t = e_{gt}.
struct CrossedProductRealization {
  SystemPtr system;
  Index ambient_dim = 0;
  ComplexMatrix embedding;        // columns: vec of the image of delta_g (x) a_i, index g*dim(A) + i
  WedderburnResult wedderburn;
  ComplexMatrix conv_to_std;      // standard-form coordinates of convolution coordinates
  ComplexMatrix std_to_conv;
  VerificationReport report;

  const FiniteCStarAlgebra& standard_form() const { return wedderburn.standard_form; }
  Index dimension() const { return embedding.cols(); }

  ComplexMatrix embed(const ConvolutionElement& f) const {
    return unvec(embedding * f.coordinates(), ambient_dim, ambient_dim);
  }
  AlgebraElement to_standard(const ConvolutionElement& f) const {
    return AlgebraElement::from_coordinates(standard_form(), conv_to_std * f.coordinates());
  }
  ConvolutionElement from_standard(const AlgebraElement& x) const {
    return ConvolutionElement::from_coordinates(system, std_to_conv * x.coordinates());
  }
};

inline ComplexMatrix regular_pi(const GroupAction& alpha, const AlgebraElement& a) {
  const auto& g = alpha.group();
  const Index NA = alpha.algebra().total_matrix_dim();
  ComplexMatrix m = ComplexMatrix::Zero(NA * g.order(), NA * g.order());
  for (Index t = 0; t < g.order(); ++t) m.block(t * NA, t * NA, NA, NA) = alpha.apply(g.inverse(t), a).block_diagonal();
  return m;
}

inline ComplexMatrix regular_lambda(const GroupAction& alpha, Index x) {
  const auto& g = alpha.group();
  const Index NA = alpha.algebra().total_matrix_dim();
  ComplexMatrix p = ComplexMatrix::Zero(g.order(), g.order());
  for (Index t = 0; t < g.order(); ++t) p(g.mul(x, t), t) = 1.0;
  return kron(p, ComplexMatrix::Identity(NA, NA));
}

inline CrossedProductRealization build_crossed_product(const SystemPtr& system, double tol = kDefaultTolerance,
                                                       std::uint64_t seed = 0) {
  const auto act = verify_action(*system, tol);
  if (!act.passed()) throw PreconditionError("build_crossed_product: action does not verify" + (act.witness ? ": " + *act.witness : std::string()));
  const auto& alpha = *system;
  const auto& g = alpha.group();
  const auto& a = alpha.algebra();
  const Index dA = a.linear_dim();
  CrossedProductRealization xp;
  xp.system = system;
  xp.ambient_dim = a.total_matrix_dim() * g.order();
  xp.report.subject = "crossed product";
  const Index D = dA * g.order();
  xp.embedding.resize(xp.ambient_dim * xp.ambient_dim, D);
  std::vector<ComplexMatrix> images;
  for (Index x = 0; x < g.order(); ++x) {
    const ComplexMatrix lam = regular_lambda(alpha, x);
    for (Index i = 0; i < dA; ++i) {
      images.push_back(regular_pi(alpha, AlgebraElement::basis(a, i)) * lam);
      xp.embedding.col(x * dA + i) = vec(images.back());
    }
  }

  // Homomorphism laws of the embedding on the spanning set.
  double mult = 0.0, star = 0.0;
  for (Index x = 0; x < g.order(); ++x)
    for (Index i = 0; i < dA; ++i) {
      const auto f = ConvolutionElement::delta(system, x, AlgebraElement::basis(a, i));
      const ComplexMatrix& ef = images[static_cast<std::size_t>(x * dA + i)];
      star = std::max(star, (xp.embed(involution(f)) - ef.adjoint()).norm());
      for (Index y = 0; y < g.order(); ++y)
        for (Index j = 0; j < dA; ++j) {
          const auto h = ConvolutionElement::delta(system, y, AlgebraElement::basis(a, j));
          mult = std::max(mult, (xp.embed(convolve(f, h)) - ef * images[static_cast<std::size_t>(y * dA + j)]).norm());
        }
    }
  xp.report.record("embedding multiplicative", mult, tol);
  xp.report.record("embedding star", star, tol);
  const Index rank = column_rank(xp.embedding, 1e-10);
  xp.report.require("embedding injective", rank == D);
  if (rank != D) throw NumericalError("build_crossed_product: regular representation is not injective (rank " + std::to_string(rank) + ")");

  WedderburnOptions wopt;
  wopt.seed = seed;
  wopt.tolerance = tol;
  xp.wedderburn = wedderburn_decompose(images, wopt);
  xp.report.absorb(xp.wedderburn.report, "wedderburn");
  Index total = 0;
  for (Index m : xp.standard_form().block_sizes()) total += m * m;
  xp.report.require("dimension count", total == D);

  const FiniteCStarAlgebra amb = FiniteCStarAlgebra::full(xp.ambient_dim);
  ComplexMatrix amb_coords(amb.linear_dim(), D);
  for (Index k = 0; k < D; ++k) amb_coords.col(k) = AlgebraElement(amb, {images[static_cast<std::size_t>(k)]}).coordinates();
  xp.conv_to_std = xp.wedderburn.coordinate_map * amb_coords;
  if (xp.conv_to_std.rows() != D) throw NumericalError("build_crossed_product: standard form has the wrong dimension");
  Eigen::PartialPivLU<ComplexMatrix> lu(xp.conv_to_std);
  xp.std_to_conv = lu.inverse();
  const double round = (xp.conv_to_std * xp.std_to_conv - ComplexMatrix::Identity(D, D)).norm();
  xp.report.record("standardizer round trip", round, 1e-9);
  return xp;
}

// (Phi x v)(f) = sum_g Phi(f(g)) v_g, and its factorization through the standard form.
struct IntegratedForm {
  CompletelyPositiveMap representation;  // Phi
  UnitaryRepresentation unitaries;       // v
  CompletelyPositiveMap on_standard;     // standard form of A x| G -> L_B(F)
  VerificationReport report;

  AdjointableOperator apply(const ConvolutionElement& f) const {
    const auto& g = unitaries.group();
    const Index e = g.identity();
    // v_e is the identity operator.
    AdjointableOperator out = representation.apply(f.value(e));
    for (Index x = 0; x < g.order(); ++x)
      if (x != e && !f.value(x).coordinates().isZero(0.0)) out = out + representation.apply(f.value(x)) * unitaries.at(x);
    return out;
  }
};

inline IntegratedForm integrated_form(const CompletelyPositiveMap& phi, const UnitaryRepresentation& v,
                                      const CrossedProductRealization& xp, double tol = kDefaultTolerance) {
  const auto& alpha = *xp.system;
  const auto cov = check_covariance(phi, alpha, v, tol);
  if (!cov.passed())
    throw PreconditionError("integrated_form: (Phi, v) is not covariant" + (cov.witness ? ": " + *cov.witness : std::string()));
  IntegratedForm out{phi, v, {}, {}};
  out.report.subject = "integrated form";
  const auto& a = alpha.algebra();
  const auto& g = alpha.group();
  const Index dA = a.linear_dim();
  const HilbertModule& f_mod = phi.target();

  std::vector<AdjointableOperator> span;  // images of delta_g (x) a_i
  for (Index x = 0; x < g.order(); ++x)
    for (Index i = 0; i < dA; ++i) span.push_back(out.apply(ConvolutionElement::delta(xp.system, x, AlgebraElement::basis(a, i))));

  std::vector<AdjointableOperator> std_values;
  const auto& sf = xp.standard_form();
  for (Index j = 0; j < sf.linear_dim(); ++j) {
    ComplexMatrix m = ComplexMatrix::Zero(f_mod.flat_dim(), f_mod.flat_dim());
    for (Index k = 0; k < static_cast<Index>(span.size()); ++k) {
      const Complex c = xp.std_to_conv(k, j);
      if (std::abs(c) > 0.0) m += c * span[static_cast<std::size_t>(k)].flat();
    }
    std_values.emplace_back(f_mod, f_mod, std::move(m));
  }
  out.on_standard = CompletelyPositiveMap(sf, f_mod, std::move(std_values));

  double scale = 0.0;
  for (const auto& s : span) scale = std::max(scale, s.flat().norm());
  double mult = 0.0, star = 0.0;
  for (Index x = 0; x < g.order(); ++x)
    for (Index i = 0; i < dA; ++i) {
      const auto f = ConvolutionElement::delta(xp.system, x, AlgebraElement::basis(a, i));
      const auto& pf = span[static_cast<std::size_t>(x * dA + i)].flat();
      star = std::max(star, (out.apply(involution(f)).flat() - pf.adjoint()).norm());
      for (Index y = 0; y < g.order(); ++y)
        for (Index j = 0; j < dA; ++j) {
          const auto h = ConvolutionElement::delta(xp.system, y, AlgebraElement::basis(a, j));
          const ComplexMatrix lhs = out.apply(convolve(f, h)).flat();
          mult = std::max(mult, (lhs - pf * span[static_cast<std::size_t>(y * dA + j)].flat()).norm());
        }
    }
  out.report.record("convolution to composition", mult, tol * (1.0 + scale * scale));
  out.report.record("involution to adjoint", star, tol * (1.0 + scale));
  out.report.absorb(verify_representation(out.on_standard, tol), "standard form");
  return out;
}

// phi = V* (Phi_rho x v^rho) V on the standard form of A x| G.
struct ExtendedMap {
  CompletelyPositiveMap on_standard;
  IntegratedForm integrated;
  AdjointableOperator connector;
  CpCertification certification;
  VerificationReport report;

  AdjointableOperator apply(const ConvolutionElement& f) const {
    return connector.adjoint() * integrated.apply(f) * connector;
  }
};

// sum_g rho(f(g)) u_g.
inline AdjointableOperator direct_extension(const CompletelyPositiveMap& rho, const UnitaryRepresentation& u,
                                            const ConvolutionElement& f) {
  AdjointableOperator out = AdjointableOperator::zero(rho.target(), rho.target());
  for (Index x = 0; x < u.group().order(); ++x)
    if (!f.value(x).coordinates().isZero(0.0)) out = out + rho.apply(f.value(x)) * u.at(x);
  return out;
}

inline ExtendedMap extend_covariant_cp(const CovariantDilation& d, const CrossedProductRealization& xp,
                                       double tol = kDefaultTolerance) {
  if (!d.report.passed()) throw PreconditionError("extend_covariant_cp: dilation does not verify");
  if (!detail::same_system(d.alpha, *xp.system)) throw StructuralError("extend_covariant_cp: dilation and crossed product use different systems");
  ExtendedMap out{{}, integrated_form(d.representation(), d.v, xp, tol), d.connector(), {}, {}};
  const auto& vv = d.connector().flat();
  std::vector<AdjointableOperator> vals;
  for (const auto& t : out.integrated.on_standard.basis_values())
    vals.emplace_back(d.rho().target(), d.rho().target(), vv.adjoint() * t.flat() * vv);
  out.on_standard = CompletelyPositiveMap(xp.standard_form(), d.rho().target(), std::move(vals));
  auto& rep = out.report;
  rep.subject = "extended CP map";
  rep.absorb(out.integrated.report, "integrated");

  const auto& a = d.rho().source();
  const auto& g = d.alpha.group();
  for (Index x = 0; x < g.order(); ++x)
    for (Index i = 0; i < a.linear_dim(); ++i) {
      const auto f = ConvolutionElement::delta(xp.system, x, AlgebraElement::basis(a, i));
      const ComplexMatrix direct = d.rho().basis_value(i).flat() * d.u.at(x).flat();
      const double r = matrix_operator_norm(out.on_standard.apply(xp.to_standard(f)).flat() - direct);
      rep.record("agrees with sum rho(f(g)) u_g", r, tol * (1.0 + matrix_operator_norm(direct)));
    }
  rep.absorb(verify_nondegenerate(out.on_standard, tol), "extension");
  out.certification = verify_completely_positive(out.on_standard, tol);
  out.on_standard = out.on_standard.with_certification(out.certification);
  rep.absorb(certification_report(out.certification), "extension");
  return out;
}

}  // namespace prostar
