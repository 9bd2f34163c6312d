#include "kineq/fixpoint.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kineq/diagnostics.hpp"
#include "kineq/errors.hpp"
#include "kineq/flat_metric.hpp"
#include "json.hpp"

namespace kineq {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::OneSided: return "one_sided";
  }
  return "?";
}

CertificateRecord make_certificate(std::string name, double measured,
                                   double bound, double slack,
                                   std::string context, bool one_sided) {
  CertificateRecord rec;
  rec.name = std::move(name);
  rec.measured = measured;
  rec.bound = bound;
  rec.slack = slack;
  rec.context = std::move(context);
  if (one_sided) {
    rec.verdict = Verdict::OneSided;
  } else {
    rec.verdict = measured <= bound * (1.0 + slack) + 1e-12 ? Verdict::Pass
                                                            : Verdict::Fail;
  }
  return rec;
}

bool all_pass(const std::vector<CertificateRecord>& certificates) {
  return std::all_of(certificates.begin(), certificates.end(),
                     [](const CertificateRecord& c) {
                       return c.verdict != Verdict::Fail;
                     });
}

std::string to_string(SolveStatus status) {
  return status == SolveStatus::Converged ? "CONVERGED" : "MAX_ITER";
}

namespace {

std::size_t grid_nodes(double horizon, double step) {
  if (!(horizon > 0.0) || !(step > 0.0)) {
    throw ValidationError("solver needs positive horizon and grid step");
  }
  const double n = horizon / step;
  if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n)) {
    throw ValidationError("grid step must divide the horizon");
  }
  return static_cast<std::size_t>(std::round(n)) + 1;
}

int default_cap(const std::string& solver, int requested) {
  if (requested > 0) return requested;
  if (solver == "adapted") return 50;
  if (solver == "anticipating" || solver == "mfg") return 500;
  return 200;
}

std::vector<double> ratios_from(const std::vector<double>& residuals) {
  std::vector<double> ratios;
  for (std::size_t i = 0; i + 1 < residuals.size(); ++i) {
    if (residuals[i] > 1e-14) ratios.push_back(residuals[i + 1] / residuals[i]);
  }
  return ratios;
}

/// Wrap coefficients so local time t maps to absolute time t + t0.
GeneratorSpec shift_generator(const GeneratorSpec& gen, double t0) {
  GeneratorSpec out = gen;
  if (gen.drift) {
    out.drift = [f = gen.drift, t0](double t, const Point& z, const PathView& v) {
      return f(t + t0, z, v);
    };
  }
  if (gen.diffusion) {
    out.diffusion = [f = gen.diffusion, t0](double t, const Point& z,
                                            const PathView& v) {
      return f(t + t0, z, v);
    };
  }
  for (auto& ch : out.jumps) {
    ch.rate = [f = ch.rate, t0](double t, const Point& z, const PathView& v) {
      return f(t + t0, z, v);
    };
  }
  if (out.stable.has_value()) {
    out.stable->intensity = [f = out.stable->intensity, t0](
                                double t, const Point& x, const Point& s) {
      return f(t + t0, x, s);
    };
    out.stable->stability = [f = out.stable->stability, t0](
                                double t, const Point& x, const Point& s) {
      return f(t + t0, x, s);
    };
  }
  return out;
}

DiscreteMeasure perturb_initial(const DiscreteMeasure& mu, double delta) {
  std::vector<Point> atoms = mu.atoms();
  std::vector<double> weights = mu.weights();
  for (double& w : weights) w *= 1.0 - delta;
  atoms.push_back(mu.atoms().front());
  weights.push_back(delta);
  return DiscreteMeasure(std::move(atoms), std::move(weights), mu.kind());
}

void fill_common(SolveReport& report, const std::string& solver,
                 const BackendConfig& backend, const SolveOptions& options,
                 const ContractionConstants& constants,
                 const detail::FixedPointOutcome& out,
                 const PropagationStats& stats) {
  report.solver = solver;
  report.status = out.converged ? SolveStatus::Converged : SolveStatus::MaxIter;
  report.iterations = out.iterations;
  report.residual_trace = out.residuals;
  report.contraction_ratios = ratios_from(out.residuals);
  report.beta_log = out.betas;
  report.constants = constants;
  report.seed = backend.seed;
  report.backend = to_string(backend.kind);
  report.h_in = backend.h_in;
  report.tolerance = options.tolerance;
  report.metrics["max_renormalization_defect"] = stats.max_renormalization_defect;
  report.metrics["min_weight"] = stats.min_weight;
  report.metrics["max_rate_step"] = stats.max_rate_step;
  report.metrics["bin_radius"] = stats.bin_radius;
  report.metrics["small_jump_sigma2"] = stats.small_jump_sigma2;
  report.metrics["thinning_cutoff"] = stats.thinning_cutoff;
  if (!out.iterate_moment_sup.empty()) {
    report.metrics["iterate_moment_sup_p2"] =
        *std::max_element(out.iterate_moment_sup.begin(),
                          out.iterate_moment_sup.end());
  }
}

double path_moment_sup(const MeasurePath& path, double p) {
  double sup = 0.0;
  for (std::size_t k = 0; k < path.nodes(); ++k) {
    sup = std::max(sup, moment(path.at(k), p));
  }
  return sup;
}

void add_time_lipschitz_certificate(SolveReport& report,
                                    const BackendConfig& backend,
                                    const GeneratorSpec& gen,
                                    const SolveOptions& options,
                                    double noise_hat) {
  const MeasurePath& sol = report.solution;
  const double h = sol.step();
  double measured = 0.0;
  for (std::size_t k = 0; k + 1 < sol.nodes(); ++k) {
    measured = std::max(measured, flat_distance(sol.at(k), sol.at(k + 1)) / h);
  }
  const double c1 = report.constants.c1;
  const double c2 = report.constants.c2;
  double slack_abs = 0.0;
  std::ostringstream ctx;
  ctx << "max_k flat(mu_k, mu_{k+1})/h vs c1*c2";
  if (backend.kind == BackendKind::Particle) {
    const auto n = static_cast<double>(backend.particles);
    slack_abs = std::sqrt(2.0 * noise_hat / (3.141592653589793 * h)) +
                8.0 * std::sqrt(std::max(noise_hat, 1.0) / (n * h));
    ctx << " + diffusion flat-rate sqrt(2*V/(pi*h)) + MC allowance";
  } else {
    slack_abs = 2.0 * c1 * c1 * h + 1e-12;
    ctx << " + scheme slack 2*c1^2*h";
  }
  ctx << "; seed=" << options.seed;
  report.certificates.push_back(make_certificate(
      "TIME_LIPSCHITZ", measured, c1 * c2 + slack_abs, 0.05, ctx.str()));
  (void)gen;
}

}  // namespace

ContractionConstants probe_constants(const GeneratorSpec& gen,
                                     const SolveOptions& options) {
  const Dictionary dict = build_dictionary(domain_class(gen), gen.dim,
                                           options.dictionary_size, options.seed);
  double lip = 0.0, bound = 0.0;
  const double times[3] = {0.0, 0.5 * options.horizon, options.horizon};
  for (double t : times) {
    lip = std::max(lip, lipschitz_probe(gen, t, options.probe_trials,
                                        options.seed, dict));
    bound = std::max(bound, boundedness_probe(gen, t, options.probe_trials,
                                              options.seed, dict));
  }
  ContractionConstants constants;
  constants.c1 = std::max(lip, bound);
  constants.c2 = 1.0;
  constants.c3 = 1.0;
  constants.mass_bound = 1.0;
  constants.horizon = options.horizon;
  constants.note =
      "c2=c3=1 assumed (positivity-preserving family, sup-norm contraction); "
      "c1 = max(Lipschitz probe " +
      std::to_string(lip) + ", boundedness probe " + std::to_string(bound) + ")";
  return constants;
}

namespace detail {

FixedPointOutcome damped_fixed_point(
    const std::function<MeasurePath(const MeasurePath&)>& phi,
    MeasurePath xi0, double tol, int cap, double beta0, bool adapt_beta,
    std::size_t bin_cap) {
  FixedPointOutcome out{std::move(xi0), {}, {}, {}, 0, false};
  MeasurePath xi = out.solution;
  double beta = beta0;
  for (int n = 1; n <= cap; ++n) {
    MeasurePath phixi = phi(xi);
    const double r = path_distance(phixi, xi);
    out.residuals.push_back(r);
    out.iterate_moment_sup.push_back(path_moment_sup(phixi, 2.0));
    if (r <= tol) {
      out.solution = std::move(phixi);
      out.iterations = n - 1;
      out.converged = true;
      return out;
    }
    if (adapt_beta && n >= 2 &&
        r > out.residuals[static_cast<std::size_t>(n) - 2] * (1.0 + 1e-9)) {
      beta = std::max(beta * 0.5, 1.0 / 64.0);
    }
    out.betas.push_back(beta);
    xi = beta >= 1.0 ? std::move(phixi) : blend_paths(xi, phixi, beta, bin_cap);
  }
  out.solution = std::move(xi);
  out.iterations = cap;
  out.converged = false;
  return out;
}

}  // namespace detail

SolveReport solve_local(const GeneratorSpec& gen, const DiscreteMeasure& mu,
                        const BackendConfig& backend, const SolveOptions& options) {
  if (gen.mode != DependenceMode::FullPath &&
      gen.mode != DependenceMode::Anticipating) {
    throw ValidationError(
        "solve_local expects a FULL_PATH or ANTICIPATING generator; '" +
        gen.label + "' is " + to_string(gen.mode));
  }
  const std::size_t nodes = grid_nodes(options.horizon, options.grid_step);
  validate_backend(backend, gen, options.grid_step);
  ContractionConstants constants = probe_constants(gen, options);
  if (constants.product() >= 1.0) {
    throw LocalityError(
        "locality constraint violated: c1*c2*c3*K*T = " +
            std::to_string(constants.product()) +
            " >= 1; use solve_global_pathindep (path-independent), "
            "solve_adapted (adapted) or solve_anticipating",
        constants.product());
  }

  PropagationStats stats;
  const auto phi = [&](const MeasurePath& xi) {
    return propagate_path(backend, gen, xi, mu, &stats);
  };
  const MeasurePath xi0 =
      MeasurePath::constant(options.horizon, nodes, mu.coarsened(backend.bin_cap));
  auto out = detail::damped_fixed_point(
      phi, xi0, options.tolerance, default_cap("local", options.max_iterations),
      1.0, false, backend.bin_cap);

  SolveReport report(out.solution);
  fill_common(report, "local", backend, options, constants, out, stats);
  if (!out.converged && out.residuals.size() >= 2 &&
      out.residuals.back() > out.residuals.front()) {
    report.diagnostic = "NO_CONTRACTION";
  }

  if (!report.contraction_ratios.empty()) {
    const double measured = *std::max_element(report.contraction_ratios.begin(),
                                              report.contraction_ratios.end());
    report.certificates.push_back(make_certificate(
        "CONTRACTION", measured, constants.product(), 0.05,
        "per-iteration residual ratios vs c1*c2*c3*K*T; trials=" +
            std::to_string(options.probe_trials)));
  }
  const double noise_hat = noise_intensity_probe(gen, options.probe_trials,
                                                 options.seed);
  report.metrics["noise_intensity"] = noise_hat;
  report.metrics["quadrature_truncation"] = gen.quadrature_truncation_bound;
  add_time_lipschitz_certificate(report, backend, gen, options, noise_hat);
  return report;
}

namespace {

struct GlobalChain {
  MeasurePath solution;
  detail::FixedPointOutcome merged;
  PropagationStats stats;
  std::size_t sub_count = 0;
  double max_sub_product = 0.0;
  double max_ratio_over_product = 0.0;
  std::vector<std::size_t> boundaries;                 // node indices
  std::vector<DiscreteMeasure> boundary_measures;      // full resolution
};

GlobalChain run_global_chain(const GeneratorSpec& gen, const DiscreteMeasure& mu,
                             const BackendConfig& backend,
                             const SolveOptions& options,
                             const ContractionConstants& constants,
                             double absolute_offset) {
  const std::size_t cells = grid_nodes(options.horizon, options.grid_step) - 1;
  const double rate = constants.c1 * constants.c2 * constants.c3 *
                      constants.mass_bound;
  double subs_needed = std::ceil(std::max(1.0, options.horizon * rate / 0.5));
  if (subs_needed > 1e6) {
    throw ValidationError(
        "DEGENERATE_CONSTANTS: global chaining needs more than 1e6 subintervals");
  }
  std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(subs_needed), cells);

  GlobalChain chain{
      MeasurePath::constant(options.horizon,
                            grid_nodes(options.horizon, options.grid_step),
                            mu.coarsened(backend.bin_cap)),
      {MeasurePath::constant(1.0, 2, mu.coarsened(backend.bin_cap)), {}, {}, {}, 0, true},
      {}, 0, 0.0, 0.0, {}, {}};

  std::vector<DiscreteMeasure> nodes_out;
  nodes_out.reserve(cells + 1);
  DiscreteMeasure current = mu;
  chain.sub_count = m;
  chain.boundaries.push_back(0);
  chain.boundary_measures.push_back(mu);

  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t lo =
        static_cast<std::size_t>(std::llround(static_cast<double>(j * cells) /
                                              static_cast<double>(m)));
    const std::size_t hi =
        static_cast<std::size_t>(std::llround(static_cast<double>((j + 1) * cells) /
                                              static_cast<double>(m)));
    if (hi <= lo) continue;
    const double t0 = absolute_offset + static_cast<double>(lo) * options.grid_step;
    const double len = static_cast<double>(hi - lo) * options.grid_step;
    const double sub_product = rate * len;
    if (sub_product >= 1.0) {
      throw NumericError("global chaining produced a non-contractive subinterval");
    }
    chain.max_sub_product = std::max(chain.max_sub_product, sub_product);

    const GeneratorSpec sub_gen = shift_generator(gen, t0);
    DiscreteMeasure terminal = current;
    const auto phi = [&](const MeasurePath& xi) {
      return propagate_path(backend, sub_gen, xi, current, &chain.stats, t0,
                            &terminal);
    };
    const MeasurePath xi0 = MeasurePath::constant(
        len, hi - lo + 1, current.coarsened(backend.bin_cap));
    auto out = detail::damped_fixed_point(
        phi, xi0, options.tolerance,
        default_cap("global", options.max_iterations), 1.0, false,
        backend.bin_cap);
    if (!out.converged) chain.merged.converged = false;
    chain.merged.iterations += out.iterations;
    for (double r : out.residuals) chain.merged.residuals.push_back(r);
    for (double s : out.iterate_moment_sup) {
      chain.merged.iterate_moment_sup.push_back(s);
    }
    const auto sub_ratios = ratios_from(out.residuals);
    for (double q : sub_ratios) {
      chain.max_ratio_over_product =
          std::max(chain.max_ratio_over_product, q / sub_product);
    }

    for (std::size_t k = (j == 0 ? 0 : 1); k < out.solution.nodes(); ++k) {
      nodes_out.push_back(out.solution.at(k));
    }
    current = terminal;
    chain.boundaries.push_back(hi);
    chain.boundary_measures.push_back(current);
  }
  chain.solution = MeasurePath(options.horizon, std::move(nodes_out));
  return chain;
}

}  // namespace

SolveReport solve_global_pathindep(const GeneratorSpec& gen,
                                   const DiscreteMeasure& mu,
                                   const BackendConfig& backend,
                                   const SolveOptions& options) {
  if (gen.mode != DependenceMode::PathIndependent) {
    throw ValidationError(
        "solve_global_pathindep expects a PATH_INDEPENDENT generator; '" +
        gen.label + "' is " + to_string(gen.mode));
  }
  validate_backend(backend, gen, options.grid_step);
  ContractionConstants constants = probe_constants(gen, options);
  GlobalChain chain = run_global_chain(gen, mu, backend, options, constants, 0.0);

  SolveReport report(chain.solution);
  fill_common(report, "global", backend, options, constants, chain.merged,
              chain.stats);
  report.metrics["subintervals"] = static_cast<double>(chain.sub_count);
  report.metrics["max_sub_product"] = chain.max_sub_product;
  if (chain.max_ratio_over_product > 0.0) {
    report.certificates.push_back(make_certificate(
        "CONTRACTION", chain.max_ratio_over_product, 1.0, 0.05,
        "max over subintervals of (residual ratio / c1*c2*c3*K*tau)"));
  }

  // Nonlinear-propagator check: re-solving from a mid boundary reproduces
  // the tail of the solution.
  if (chain.boundaries.size() >= 3) {
    const std::size_t mid = chain.boundaries.size() / 2;
    const std::size_t node0 = chain.boundaries[mid];
    const double s = static_cast<double>(node0) * options.grid_step;
    SolveOptions tail_options = options;
    tail_options.horizon = options.horizon - s;
    const ContractionConstants tail_constants = [&] {
      ContractionConstants c = constants;
      c.horizon = tail_options.horizon;
      return c;
    }();
    GlobalChain tail = run_global_chain(gen, chain.boundary_measures[mid],
                                        backend, tail_options, tail_constants, s);
    double measured = 0.0;
    for (std::size_t k = 0; k < tail.solution.nodes(); ++k) {
      measured = std::max(measured, flat_distance(tail.solution.at(k),
                                                  report.solution.at(node0 + k)));
    }
    const bool particle = backend.kind == BackendKind::Particle;
    const double noise_hat =
        noise_intensity_probe(gen, options.probe_trials, options.seed);
    const double mc_allowance =
        particle ? 8.0 * std::sqrt(std::max(noise_hat, 1.0) /
                                   static_cast<double>(backend.particles))
                 : 0.0;
    report.certificates.push_back(make_certificate(
        "NONLINEAR_PROPAGATOR", measured, 2.0 * options.tolerance + mc_allowance,
        0.0,
        "re-solve from (s, mu_s), s = " + std::to_string(s) +
            (particle ? "; particle stream reassignment allowance included" : ""),
        particle));
  }

  // Initial-data Lipschitz certificate in the Gronwall form of the adapted
  // proof (the theorem's c(T,K) is unspecified; substitution recorded).
  {
    const DiscreteMeasure eta = perturb_initial(mu, 0.1);
    GlobalChain other = run_global_chain(gen, eta, backend, options, constants, 0.0);
    const double denom = flat_distance(mu, eta);
    const double measured =
        denom > 0.0 ? path_distance(chain.solution, other.solution) / denom : 0.0;
    const double bound =
        constants.c2 * std::exp(std::min(constants.product(), 700.0));
    report.certificates.push_back(make_certificate(
        "INITIAL_LIPSCHITZ", measured, bound, 0.05,
        "c2*exp(c1*c2*c3*K*T) Gronwall form substituted for the unspecified "
        "c(T,K); perturbation delta=0.1"));
  }

  const double noise_hat =
      noise_intensity_probe(gen, options.probe_trials, options.seed);
  report.metrics["noise_intensity"] = noise_hat;
  report.metrics["quadrature_truncation"] = gen.quadrature_truncation_bound;
  add_time_lipschitz_certificate(report, backend, gen, options, noise_hat);
  return report;
}

SolveReport solve_adapted(const GeneratorSpec& gen, const DiscreteMeasure& mu,
                          const BackendConfig& backend,
                          const SolveOptions& options) {
  if (gen.mode != DependenceMode::Adapted) {
    throw ValidationError("solve_adapted expects an ADAPTED generator; '" +
                          gen.label + "' is " + to_string(gen.mode));
  }
  const std::size_t nodes = grid_nodes(options.horizon, options.grid_step);
  validate_backend(backend, gen, options.grid_step);
  ContractionConstants constants = probe_constants(gen, options);

  PropagationStats stats;
  const auto phi = [&](const MeasurePath& xi) {
    return propagate_path(backend, gen, xi, mu, &stats);
  };
  const MeasurePath xi0 =
      MeasurePath::constant(options.horizon, nodes, mu.coarsened(backend.bin_cap));
  auto out = detail::damped_fixed_point(
      phi, xi0, options.tolerance, default_cap("adapted", options.max_iterations),
      1.0, false, backend.bin_cap);

  SolveReport report(out.solution);
  fill_common(report, "adapted", backend, options, constants, out, stats);

  // Factorial Picard envelope: ||xi^n - xi^{n-1}|| <= 2 (c1 c2 c3 K T)^n / n!.
  {
    double measured = 0.0;
    double envelope = 1.0;
    const double product = constants.product();
    for (std::size_t n = 1; n <= out.residuals.size() && n <= 6; ++n) {
      envelope *= product / static_cast<double>(n);
      measured = std::max(measured, out.residuals[n - 1] / (2.0 * envelope));
    }
    report.certificates.push_back(make_certificate(
        "FACTORIAL", measured, 1.0, 0.0,
        "max_n residual_n * n! / (2 * (c1 c2 c3 K T)^n), n <= 6"));
  }

  // Gronwall initial-data sensitivity.
  {
    const DiscreteMeasure eta = perturb_initial(mu, 0.1);
    PropagationStats stats2;
    const auto phi2 = [&](const MeasurePath& xi) {
      return propagate_path(backend, gen, xi, eta, &stats2);
    };
    const MeasurePath eta0 = MeasurePath::constant(
        options.horizon, nodes, eta.coarsened(backend.bin_cap));
    auto out2 = detail::damped_fixed_point(
        phi2, eta0, options.tolerance,
        default_cap("adapted", options.max_iterations), 1.0, false,
        backend.bin_cap);
    const double denom = flat_distance(mu, eta);
    const double measured =
        denom > 0.0 ? path_distance(out.solution, out2.solution) / denom : 0.0;
    const double bound =
        constants.c2 * std::exp(std::min(constants.product(), 700.0));
    report.certificates.push_back(make_certificate(
        "GRONWALL", measured, bound, 0.05,
        "path_distance(Phi(mu), Phi(eta)) / flat(mu, eta) vs c2*e^{c1c2c3KT}; "
        "delta=0.1, common random numbers"));
  }
  return report;
}

SolveReport solve_anticipating(const GeneratorSpec& gen,
                               const DiscreteMeasure& mu,
                               const BackendConfig& backend,
                               const SolveOptions& options) {
  if (gen.mode != DependenceMode::Anticipating &&
      gen.mode != DependenceMode::FullPath) {
    throw ValidationError(
        "solve_anticipating expects an ANTICIPATING or FULL_PATH generator; '" +
        gen.label + "' is " + to_string(gen.mode));
  }
  if (!(options.beta > 0.0 && options.beta <= 1.0)) {
    throw ValidationError("damping beta must lie in (0, 1]");
  }
  const std::size_t nodes = grid_nodes(options.horizon, options.grid_step);
  validate_backend(backend, gen, options.grid_step);
  ContractionConstants constants = probe_constants(gen, options);

  PropagationStats stats;
  const auto phi = [&](const MeasurePath& xi) {
    return propagate_path(backend, gen, xi, mu, &stats);
  };
  const MeasurePath xi0 =
      MeasurePath::constant(options.horizon, nodes, mu.coarsened(backend.bin_cap));
  auto out = detail::damped_fixed_point(
      phi, xi0, options.tolerance,
      default_cap("anticipating", options.max_iterations), options.beta, true,
      backend.bin_cap);

  SolveReport report(out.solution);
  fill_common(report, "anticipating", backend, options, constants, out, stats);
  report.diagnostic = out.converged ? "EXISTENCE_ONLY" : "NON_CONVERGED";
  report.certificates.push_back(make_certificate(
      "EXISTENCE_ONLY", 0.0, 0.0, 0.0,
      "Schauder-type existence: converged solutions carry no uniqueness claim",
      true));

  // Weak residual of the returned path.
  const Dictionary dict = build_dictionary(domain_class(gen), gen.dim,
                                           options.dictionary_size, options.seed);
  const double residual = weak_residual(report.solution, gen, dict);
  const double noise_hat =
      noise_intensity_probe(gen, options.probe_trials, options.seed);
  report.metrics["noise_intensity"] = noise_hat;
  report.certificates.push_back(make_certificate(
      "WEAK_RESIDUAL", residual,
      weak_residual_bound(constants.c1, options.grid_step, backend, noise_hat,
                          gen.quadrature_truncation_bound),
      0.0, "centered-difference weak-form residual of the returned path"));

  // Compactness evidence: p-th moments stay bounded along the iterates.
  {
    const double p_mu = moment(mu.coarsened(backend.bin_cap), 2.0);
    const double p_hat = ebdd_probe(gen, options.probe_trials, options.seed, 2.0);
    const double bound =
        std::exp(std::min(8.0 * p_hat * options.horizon, 700.0)) * (1.0 + p_mu);
    const double measured =
        report.metrics.count("iterate_moment_sup_p2")
            ? report.metrics["iterate_moment_sup_p2"]
            : 0.0;
    report.metrics["ebdd_P"] = p_hat;
    report.certificates.push_back(make_certificate(
        "MOMENT_COMPACTNESS", measured, bound, 0.0,
        "sup over iterates of second moments vs e^{8*P*T}(1+p_mu)"));
  }
  return report;
}

std::string SolveReport::to_json() const {
  ordered_json j;
  j["solver"] = solver;
  j["status"] = kineq::to_string(status);
  j["diagnostic"] = diagnostic;
  j["iterations"] = iterations;
  j["tolerance"] = tolerance;
  j["seed"] = seed;
  j["backend"] = backend;
  j["h_in"] = h_in;
  j["residual_trace"] = residual_trace;
  j["contraction_ratios"] = contraction_ratios;
  j["beta_log"] = beta_log;
  j["constants"] = ordered_json{{"c1", constants.c1},
                                {"c2", constants.c2},
                                {"c3", constants.c3},
                                {"K", constants.mass_bound},
                                {"T", constants.horizon},
                                {"product", constants.product()},
                                {"note", constants.note}};
  auto certs = ordered_json::array();
  for (const auto& c : certificates) {
    certs.push_back(ordered_json{{"name", c.name},
                                 {"measured", c.measured},
                                 {"bound", c.bound},
                                 {"slack", c.slack},
                                 {"verdict", kineq::to_string(c.verdict)},
                                 {"context", c.context}});
  }
  j["certificates"] = std::move(certs);
  j["metrics"] = ordered_json(std::map<std::string, double>(metrics.begin(),
                                                            metrics.end()));
  if (!tables.empty()) {
    auto tj = ordered_json::object();
    for (const auto& [name, values] : tables) tj[name] = values;
    j["tables"] = std::move(tj);
  }
  if (!config_echo.empty()) j["config_echo"] = config_echo;
  j["solution"] = ordered_json::parse(solution.to_json());
  return j.dump(2);
}

}  // namespace kineq
