#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <numeric>
#include <thread>

#include "prostar/cli/scenario.hpp"

namespace prostar::cli {

struct RunOptions {
  std::string scenario_name;
  std::optional<double> tolerance;     // overrides the scenario
  std::optional<std::uint64_t> seed;   // overrides the scenario
  unsigned jobs = 0;                   // 0: one worker per task
};

namespace detail {

struct TaskContext {
  const Scenario& scenario;
  const TaskSpec& spec;
  double tol;
  std::uint64_t seed;
  TaskReport& out;
};

inline std::uint64_t task_seed(const TaskContext& c) {
  if (c.spec.params.contains("seed") && c.spec.params["seed"].is_number_unsigned()) return c.spec.params["seed"].get<std::uint64_t>();
  return c.seed;
}

struct CovariantData {
  const CompletelyPositiveMap* rho;
  SystemPtr system;
  UnitaryRepresentation u;
};

inline CovariantData covariant_inputs(const TaskContext& c) {
  const auto& p = c.spec.params;
  const auto& s = c.scenario;
  CovariantData d{&resolve(s.cp_maps, p, "cp", c.spec.where, "CP map"), {}, {}};
  if (p.contains("action")) {
    d.system = resolve(s.actions, p, "action", c.spec.where, "action");
  } else {
    d.system = make_system(GroupAction::trivial(FiniteGroup::trivial(), d.rho->source()));
  }
  if (p.contains("representation")) d.u = resolve(s.representations, p, "representation", c.spec.where, "representation");
  else d.u = UnitaryRepresentation::trivial(d.system->group(), d.rho->target());
  return d;
}

// CP certification and covariance; false when either fails.
inline bool admit(TaskContext& c, const CovariantData& in, CpCertification* cert_out) {
  const auto cert = verify_completely_positive(*in.rho, c.tol);
  c.out.metrics.emplace_back("choi_min_eigenvalue", cert.min_eigenvalue());
  c.out.verification.absorb(certification_report(cert), "cp");
  if (!cert.is_cp) return false;
  const auto cov = check_covariance(*in.rho, *in.system, in.u, c.tol);
  c.out.verification.absorb(cov);
  if (cert_out) *cert_out = cert;
  return cov.passed();
}

inline std::optional<CovariantDilation> dilate(TaskContext& c, const CovariantData& in) {
  CpCertification cert;
  if (!admit(c, in, &cert)) return std::nullopt;
  KsgnsOptions o;
  o.tolerance = c.tol;
  if (c.spec.params.contains("mixing_seed")) o.mixing_seed = c.spec.params["mixing_seed"].get<std::uint64_t>();
  auto d = covariant_dilation(in.rho->with_certification(cert), *in.system, in.u, o);
  c.out.verification.absorb(d.report, "dilation");
  for (const auto& n : d.core.report.notes) c.out.verification.notes.push_back(n);
  c.out.dimensions.emplace_back("spanning_set", d.core.gram.size());
  c.out.dimensions.emplace_back("null_space", d.core.quotient.null_dimension());
  c.out.dimensions.emplace_back("dilation_dimension", d.dimension());
  c.out.dimensions.emplace_back("dilation_module_rank", d.module().rank());
  return d;
}

inline void run_dilate(TaskContext& c) {
  const auto in = covariant_inputs(c);
  auto d = dilate(c, in);
  if (!d) return;
  if (c.spec.params.value("uniqueness", false)) {
    KsgnsOptions o;
    o.tolerance = c.tol;
    o.mixing_seed = task_seed(c) + 1;
    const auto d2 = covariant_dilation(d->rho(), *in.system, in.u, o);
    std::vector<Index> perm(static_cast<std::size_t>(d2.module().rank()));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Index>((i + 1) % perm.size());
    const auto un = uniqueness_unitary(*d, permuted_triple(d2, perm), c.tol);
    c.out.verification.absorb(un.report, "uniqueness");
  }
}

inline void run_crossed_product(TaskContext& c) {
  const auto& p = c.spec.params;
  const auto sys = resolve(c.scenario.actions, p, "action", c.spec.where, "action");
  const auto xp = build_crossed_product(sys, c.tol, task_seed(c));
  c.out.verification.absorb(xp.report);
  std::vector<long long> sizes(xp.standard_form().block_sizes().begin(), xp.standard_form().block_sizes().end());
  c.out.lists.emplace_back("block_sizes", sizes);
  c.out.dimensions.emplace_back("dimension", xp.dimension());
  c.out.dimensions.emplace_back("ambient_dimension", xp.ambient_dim);
  if (p.contains("expect_blocks")) {
    const auto want = parse_index_list(p["expect_blocks"], child(c.spec.where, "expect_blocks"));
    const bool ok = std::equal(want.begin(), want.end(), sizes.begin(), sizes.end());
    c.out.verification.require("block sizes as expected", ok);
    if (!ok) c.out.verification.fail_with("standard form block sizes differ from expect_blocks");
  }
  Rng rng(task_seed(c));
  for (int k = 0; k < 3; ++k) {
    const auto f = random_convolution_element(rng, sys);
    const auto h = random_convolution_element(rng, sys);
    const auto g = random_convolution_element(rng, sys);
    const double scale = 1.0 + l1_seminorm(f) * l1_seminorm(h) * l1_seminorm(g);
    c.out.verification.record("convolution associative", convolve(convolve(f, h), g).distance(convolve(f, convolve(h, g))), c.tol * scale);
    c.out.verification.record("involution anti-multiplicative", involution(convolve(f, h)).distance(convolve(involution(h), involution(f))),
                              c.tol * scale);
    c.out.verification.record("involution involutive", involution(involution(f)).distance(f), c.tol * (1.0 + l1_seminorm(f)));
  }
}

inline void run_extend(TaskContext& c) {
  const auto in = covariant_inputs(c);
  auto d = dilate(c, in);
  if (!d) return;
  const auto xp = build_crossed_product(in.system, c.tol, task_seed(c));
  c.out.lists.emplace_back("block_sizes", std::vector<long long>(xp.standard_form().block_sizes().begin(), xp.standard_form().block_sizes().end()));
  const auto ext = extend_covariant_cp(*d, xp, c.tol);
  c.out.verification.absorb(ext.report, "extension");
  c.out.metrics.emplace_back("extension_choi_min_eigenvalue", ext.certification.min_eigenvalue());
  const auto& a = in.rho->source();
  double r = 0.0;
  for (Index i = 0; i < a.linear_dim(); ++i) {
    const auto f = ConvolutionElement::delta(in.system, in.system->group().identity(), AlgebraElement::basis(a, i));
    r = std::max(r, matrix_operator_norm(ext.on_standard.apply(xp.to_standard(f)).flat() - in.rho->basis_value(i).flat()));
  }
  c.out.verification.record("phi = rho on delta_e (x) A", r, c.tol);
}

inline void run_tower_check(TaskContext& c) {
  const auto& p = c.spec.params;
  const auto& s = c.scenario;
  const auto tw = resolve(s.towers, p, "tower", c.spec.where, "tower");
  const auto tr = verify_tower(*tw, c.tol);
  c.out.verification.absorb(tr, "tower");
  c.out.dimensions.emplace_back("levels", tw->size());
  if (!tr.passed()) return;

  // Coherent elements: seminorm monotonicity, directedness and algebra closure.
  if (tw->poset().top()) {
    Rng rng(task_seed(c));
    double mono = 0.0, dir = 0.0, closure = 0.0;
    for (int k = 0; k < 5; ++k) {
      const auto x = random_coherent_element(rng, *tw);
      const auto y = random_coherent_element(rng, *tw);
      closure = std::max({closure, (x + y).coherence_residual(), (x * y).coherence_residual(), x.adjoint().coherence_residual()});
      for (Index a = 0; a < tw->size(); ++a)
        for (Index b = 0; b < tw->size(); ++b) {
          if (tw->poset().geq(a, b)) mono = std::max(mono, seminorm_eval(x, b) - seminorm_eval(x, a));
          const Index r = *tw->poset().upper_bound(a, b);
          dir = std::max(dir, std::max(seminorm_eval(x, a), seminorm_eval(x, b)) - seminorm_eval(x, r));
        }
    }
    c.out.verification.record("seminorm monotone", std::max(mono, 0.0), c.tol);
    c.out.verification.record("seminorm directed", std::max(dir, 0.0), c.tol);
    c.out.verification.record("coherence closed under +, *, adjoint", closure, c.tol);
  }
  if (!p.contains("module")) return;
  const auto& e = resolve(s.modules, p, "module", c.spec.where, "module");
  const ModuleTower mt = ModuleTower::from_top(*tw, e);
  const auto mr = verify_tower(mt, c.tol);
  c.out.verification.absorb(mr, "module tower");
  if (!mr.passed() || !p.contains("cp")) return;
  const auto in = covariant_inputs(c);
  if (!admit(c, in, nullptr)) return;
  const double ctol = std::max(c.tol, 1e-9);
  const auto lw = levelwise_ksgns_coherence(*in.rho, *in.system, in.u, mt, ctol);
  c.out.verification.absorb(lw.report);
  std::vector<long long> dims;
  for (const auto& d : lw.levels) dims.push_back(d.dimension());
  c.out.lists.emplace_back("level_dilation_dimensions", dims);
  const auto& top = lw.levels[static_cast<std::size_t>(*tw->poset().top())];
  const ModuleTower ft = ModuleTower::from_top(*tw, top.module());
  const auto xp = build_crossed_product(in.system, c.tol, task_seed(c));
  c.out.verification.absorb(levelwise_integrated_coherence(top.representation(), top.v, ft, xp, ctol));
}

inline void run_verify_all(TaskContext& c) {
  const auto& s = c.scenario;
  auto& v = c.out.verification;
  for (const auto& [n, g] : s.groups) v.absorb(verify_group(g), "group " + n);
  for (const auto& [n, a] : s.actions) v.absorb(verify_action(*a, c.tol), "action " + n);
  for (const auto& [n, u] : s.representations) v.absorb(verify_unitary_representation(u, c.tol), "representation " + n);
  for (const auto& [n, rho] : s.cp_maps) {
    const auto cert = verify_completely_positive(rho, c.tol);
    c.out.metrics.emplace_back("choi_min_eigenvalue " + n, cert.min_eigenvalue());
    v.absorb(certification_report(cert), "cp " + n);
  }
  for (const auto& [n, t] : s.towers) v.absorb(verify_tower(*t, c.tol), "tower " + n);
}

inline TaskReport run_task(const Scenario& s, const TaskSpec& spec, double tol, std::uint64_t seed) {
  TaskReport out;
  out.name = spec.name;
  out.type = spec.type;
  out.verification.subject = spec.name;
  TaskContext c{s, spec, tol, seed, out};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (spec.type == "dilate") run_dilate(c);
    else if (spec.type == "crossed-product") run_crossed_product(c);
    else if (spec.type == "extend") run_extend(c);
    else if (spec.type == "tower-check") run_tower_check(c);
    else if (spec.type == "verify-all") run_verify_all(c);
    out.settle();
  } catch (const NumericalError& e) {
    out.status = Status::error;
    out.error_kind = "numerical";
    out.message = std::string("task ") + spec.name + ": " + e.what();
  } catch (const PreconditionError& e) {
    out.status = Status::fail;
    out.message = e.what();
    out.verification.require("preconditions", false);
    out.verification.fail_with(e.what());
  } catch (const std::exception& e) {
    out.status = Status::error;
    out.error_kind = "structural";
    out.message = e.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace detail

// Runs every task; independent tasks share the worker pool, results keep declaration order.
inline RunReport run_scenario(const Scenario& s, const RunOptions& opt = {}) {
  RunReport rep;
  rep.config.scenario = opt.scenario_name;
  rep.config.tolerance = opt.tolerance ? *opt.tolerance : s.tolerance.value_or(kDefaultTolerance);
  rep.config.seed = opt.seed ? *opt.seed : s.seed.value_or(0);
  const std::size_t n = s.tasks.size();
  unsigned jobs = opt.jobs ? opt.jobs : static_cast<unsigned>(std::max<std::size_t>(n, 1));
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(n, 1)));
  rep.config.jobs = jobs;
  rep.tasks.resize(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++)
      rep.tasks[i] = detail::run_task(s, s.tasks[i], rep.config.tolerance, rep.config.seed);
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rep;
}

}  // namespace prostar::cli
