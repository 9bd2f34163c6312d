#include "kineq/propagators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "kineq/errors.hpp"
#include "kineq/flat_metric.hpp"
#include "kineq/rng.hpp"

namespace kineq {

namespace {

constexpr double kStateTol = 1e-9;
constexpr double kStepGuard = 0.1;

double norm2(const Point& x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return std::sqrt(s);
}

}  // namespace

std::string to_string(BackendKind kind) {
  return kind == BackendKind::FiniteState ? "finite_state" : "particle";
}

BackendKind backend_kind_from_string(const std::string& name) {
  if (name == "finite_state") return BackendKind::FiniteState;
  if (name == "particle") return BackendKind::Particle;
  throw ValidationError("unknown backend kind '" + name +
                        "' (expected finite_state|particle)");
}

void validate_backend(const BackendConfig& backend, const GeneratorSpec& gen,
                      double grid_step) {
  if (!(backend.h_in > 0.0)) throw ValidationError("backend h_in must be > 0");
  const double ratio = grid_step / backend.h_in;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw ValidationError("backend h_in must divide the grid step");
  }
  if (backend.kind == BackendKind::FiniteState) {
    if (backend.states.empty()) {
      throw StructuralError("finite-state backend needs a state list");
    }
    if (!gen.is_jump_only()) {
      throw CapabilityError(
          "finite-state backend supports pure jump families only (generator '" +
          gen.label + "' has diffusion, drift or a stable-like part)");
    }
  } else {
    if (backend.particles < 100) {
      throw ValidationError("particle backend needs N >= 100 particles");
    }
  }
}

std::vector<double> rate_matrix(const GeneratorSpec& gen, double t,
                                const PathView& view,
                                const std::vector<Point>& states) {
  const std::size_t m = states.size();
  std::vector<double> q(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& ch : gen.jumps) {
      const double rate = ch.rate(t, states[i], view);
      if (rate == 0.0) continue;
      if (rate < 0.0) throw ValidationError("negative jump rate in rate_matrix");
      Point target = states[i];
      for (std::size_t k = 0; k < target.size(); ++k) {
        target[k] += ch.displacement[k];
      }
      bool found = false;
      for (std::size_t j = 0; j < m; ++j) {
        if (euclidean_distance(states[j], target) <= kStateTol) {
          q[i * m + j] += rate;
          q[i * m + i] -= rate;
          found = true;
          break;
        }
      }
      if (!found) {
        throw StructuralError(
            "jump channel leaves the state list (off-state-list target)");
      }
    }
  }
  return q;
}

// ----------------------------------------------------------------------
// Finite-state backend: classical RK4 on w' = Q(t)^T w, renormalized.
// ----------------------------------------------------------------------

namespace {

struct FiniteStateRun {
  std::vector<double> weights;  // per state
  const std::vector<Point>* states;
};

std::vector<double> apply_qt(const std::vector<double>& q,
                             const std::vector<double>& w) {
  const std::size_t m = w.size();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double wi = w[i];
    if (wi == 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) out[j] += q[i * m + j] * wi;
  }
  return out;
}

FiniteStateRun finite_state_init(const BackendConfig& backend,
                                 const DiscreteMeasure& mu) {
  if (mu.kind() != MassKind::Probability) {
    throw ValidationError("finite-state backend expects a probability measure");
  }
  FiniteStateRun run;
  run.states = &backend.states;
  run.weights.assign(backend.states.size(), 0.0);
  for (std::size_t a = 0; a < mu.size(); ++a) {
    bool found = false;
    for (std::size_t j = 0; j < backend.states.size(); ++j) {
      if (euclidean_distance(mu.atoms()[a], backend.states[j]) <= kStateTol) {
        run.weights[j] += mu.weights()[a];
        found = true;
        break;
      }
    }
    if (!found) {
      throw StructuralError(
          "initial measure has an atom off the finite-state list");
    }
  }
  return run;
}

void finite_state_step(FiniteStateRun& run, const GeneratorSpec& gen,
                       const MeasurePath& frozen, double tau, double h,
                       PropagationStats* stats) {
  const auto view_at = [&](double s) {
    return PathView(frozen, gen.mode, std::min(s, frozen.horizon()));
  };
  const auto qa = rate_matrix(gen, tau, view_at(tau), *run.states);
  const auto qm = rate_matrix(gen, tau + 0.5 * h, view_at(tau + 0.5 * h), *run.states);
  const auto qb = rate_matrix(gen, tau + h, view_at(tau + h), *run.states);

  double max_rate = 0.0;
  for (std::size_t i = 0; i < run.weights.size(); ++i) {
    max_rate = std::max(max_rate, -qa[i * run.weights.size() + i]);
  }
  if (stats) stats->max_rate_step = std::max(stats->max_rate_step, h * max_rate);
  if (h * max_rate > kStepGuard) {
    throw ValidationError("finite-state step guard violated: h_in * max rate = " +
                          std::to_string(h * max_rate) + " > 0.1");
  }

  const std::size_t m = run.weights.size();
  std::vector<double> w1(m), w2(m), w3(m);
  const auto k1 = apply_qt(qa, run.weights);
  for (std::size_t j = 0; j < m; ++j) w1[j] = run.weights[j] + 0.5 * h * k1[j];
  const auto k2 = apply_qt(qm, w1);
  for (std::size_t j = 0; j < m; ++j) w2[j] = run.weights[j] + 0.5 * h * k2[j];
  const auto k3 = apply_qt(qm, w2);
  for (std::size_t j = 0; j < m; ++j) w3[j] = run.weights[j] + h * k3[j];
  const auto k4 = apply_qt(qb, w3);
  double sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    run.weights[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    sum += run.weights[j];
  }
  const double defect = std::abs(sum - 1.0);
  if (stats) {
    stats->max_renormalization_defect =
        std::max(stats->max_renormalization_defect, defect);
    stats->min_weight = std::min(
        stats->min_weight, *std::min_element(run.weights.begin(), run.weights.end()));
  }
  if (defect > 0.0 && sum != 0.0) {
    for (double& w : run.weights) w /= sum;
  }
}

DiscreteMeasure finite_state_measure(const FiniteStateRun& run) {
  return DiscreteMeasure::probability(*run.states, run.weights);
}

// ----------------------------------------------------------------------
// Particle backend: explicit first-order stochastic stepping with
// counter-based per-particle streams keyed by (seed, particle, global step).
// ----------------------------------------------------------------------

// Stable-like simulation plan: quadrature nodes below the thinning cutoff
// become a Gaussian proxy with matched covariance; nodes above it are
// sampled by thinning (at most one jump per step).
struct StablePlan {
  double total_rate = 0.0;
  std::vector<double> cumulative;     // cumulative rates of thinned nodes
  std::vector<const StableNode*> thinned;
  Point compensator;                  // sum over thinned nodes with r <= 1 of w * y
  std::vector<double> sigma2;         // d x d small-jump covariance rate
  double cutoff = 0.0;
};

StablePlan build_stable_plan(const GeneratorSpec& gen, double t, const Point& z,
                             const PathView& view, double h_in) {
  const auto& data = *gen.stable;
  const auto d = static_cast<std::size_t>(gen.dim);
  const auto& nodes = data.nodes();

  std::vector<double> rates(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& dir = data.directions[nodes[k].direction_index].first;
    const double a = data.intensity(t, z, dir);
    const double alpha = data.stability(t, z, dir);
    rates[k] = a * nodes[k].weight_factor /
               std::pow(nodes[k].radius, alpha + 1.0);
  }

  // Radii sorted ascending within each direction; choose the smallest cutoff
  // whose tail rate satisfies the thinning guard with headroom.
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return nodes[a].radius > nodes[b].radius;
  });
  const double budget = 0.5 * kStepGuard / h_in;
  StablePlan plan;
  plan.sigma2.assign(d * d, 0.0);
  plan.compensator.assign(d, 0.0);
  double tail = 0.0;
  std::size_t take = 0;
  while (take < order.size() && tail + rates[order[take]] <= budget) {
    tail += rates[order[take]];
    ++take;
  }
  plan.cutoff = take < order.size() ? nodes[order[take]].radius : 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& node = nodes[order[k]];
    const double rate = rates[order[k]];
    if (k < take) {
      plan.thinned.push_back(&node);
      plan.total_rate += rate;
      plan.cumulative.push_back(plan.total_rate);
      if (node.radius <= 1.0) {
        for (std::size_t c = 0; c < d; ++c) {
          plan.compensator[c] += rate * node.displacement[c];
        }
      }
    } else {
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) {
          plan.sigma2[a * d + b] +=
              rate * node.displacement[a] * node.displacement[b];
        }
      }
    }
  }
  return plan;
}

struct ParticleStepper {
  const GeneratorSpec* gen;
  const MeasurePath* frozen;
  double h_in;
  PropagationStats* stats;
  std::optional<StablePlan> shared_plan;  // homogeneous stable-like families

  void step(ParticleEnsemble& ens, double tau, std::uint64_t step_index) {
    const auto d = static_cast<std::size_t>(ens.dim);
    const PathView view(*frozen, gen->mode, std::min(tau, frozen->horizon()));
    const double sqrt_h = std::sqrt(h_in);
    const std::size_t n_ch = gen->jumps.size();
    const std::uint64_t u_stride = n_ch + 2;
    const std::uint64_t g_stride = 2 * d;

    Point z(d), dx(d);
    for (std::size_t i = 0; i < ens.count; ++i) {
      for (std::size_t k = 0; k < d; ++k) z[k] = ens.positions[i * d + k];
      std::fill(dx.begin(), dx.end(), 0.0);
      const std::uint64_t gauss_stream = (static_cast<std::uint64_t>(i) << 1);
      const std::uint64_t unif_stream = gauss_stream | 1;

      if (gen->has_drift()) {
        const Point b = gen->drift(tau, z, view);
        for (std::size_t k = 0; k < d; ++k) dx[k] += b[k] * h_in;
      }
      if (gen->has_diffusion()) {
        const auto g = gen->diffusion(tau, z, view);
        if (d == 1) {
          dx[0] += std::sqrt(std::max(g[0], 0.0)) * sqrt_h *
                   rng::gaussian(ens.base_seed, gauss_stream,
                                 step_index * g_stride);
        } else {
          Eigen::Map<const Eigen::MatrixXd> G(g.data(), ens.dim, ens.dim);
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
          const Eigen::MatrixXd L =
              es.eigenvectors() *
              es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
          Eigen::VectorXd xi(ens.dim);
          for (std::size_t k = 0; k < d; ++k) {
            xi[static_cast<int>(k)] = rng::gaussian(
                ens.base_seed, gauss_stream, step_index * g_stride + k);
          }
          const Eigen::VectorXd inc = L * xi;
          for (std::size_t k = 0; k < d; ++k) dx[k] += sqrt_h * inc[static_cast<int>(k)];
        }
      }

      double total_rate = 0.0;
      for (std::size_t c = 0; c < n_ch; ++c) {
        const auto& ch = gen->jumps[c];
        const double rate = ch.rate(tau, z, view);
        if (rate < 0.0) throw ValidationError("negative jump rate in particle step");
        total_rate += rate;
        if (ch.compensated && norm2(ch.displacement) <= 1.0) {
          for (std::size_t k = 0; k < d; ++k) {
            dx[k] -= rate * ch.displacement[k] * h_in;
          }
        }
        if (rate > 0.0) {
          const double u = rng::uniform(ens.base_seed, unif_stream,
                                        step_index * u_stride + c);
          if (u < rate * h_in) {
            for (std::size_t k = 0; k < d; ++k) dx[k] += ch.displacement[k];
          }
        }
      }

      if (gen->stable.has_value()) {
        const StablePlan local =
            shared_plan ? StablePlan{} : build_stable_plan(*gen, tau, z, view, h_in);
        const StablePlan& plan = shared_plan ? *shared_plan : local;
        total_rate += plan.total_rate;
        for (std::size_t k = 0; k < d; ++k) dx[k] -= plan.compensator[k] * h_in;
        if (d == 1) {
          dx[0] += std::sqrt(plan.sigma2[0]) * sqrt_h *
                   rng::gaussian(ens.base_seed, gauss_stream,
                                 step_index * g_stride + d);
        } else {
          Eigen::Map<const Eigen::MatrixXd> S(plan.sigma2.data(), ens.dim, ens.dim);
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
          const Eigen::MatrixXd L =
              es.eigenvectors() *
              es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
          Eigen::VectorXd xi(ens.dim);
          for (std::size_t k = 0; k < d; ++k) {
            xi[static_cast<int>(k)] = rng::gaussian(
                ens.base_seed, gauss_stream, step_index * g_stride + d + k);
          }
          const Eigen::VectorXd inc = L * xi;
          for (std::size_t k = 0; k < d; ++k) dx[k] += sqrt_h * inc[static_cast<int>(k)];
        }
        if (plan.total_rate > 0.0) {
          const double u = rng::uniform(ens.base_seed, unif_stream,
                                        step_index * u_stride + n_ch);
          if (u < plan.total_rate * h_in) {
            const double pick = plan.total_rate *
                                rng::uniform(ens.base_seed, unif_stream,
                                             step_index * u_stride + n_ch + 1);
            const auto it = std::lower_bound(plan.cumulative.begin(),
                                             plan.cumulative.end(), pick);
            const auto idx = static_cast<std::size_t>(
                std::min<std::ptrdiff_t>(it - plan.cumulative.begin(),
                                         static_cast<std::ptrdiff_t>(
                                             plan.thinned.size() - 1)));
            const auto& node = *plan.thinned[idx];
            for (std::size_t k = 0; k < d; ++k) dx[k] += node.displacement[k];
          }
        }
        if (stats) {
          double s2 = 0.0;
          for (std::size_t k = 0; k < d; ++k) s2 += plan.sigma2[k * d + k];
          stats->small_jump_sigma2 = std::max(stats->small_jump_sigma2, s2);
          stats->thinning_cutoff = std::max(stats->thinning_cutoff, plan.cutoff);
        }
      }

      if (stats) {
        stats->max_rate_step =
            std::max(stats->max_rate_step, total_rate * h_in);
      }
      if (total_rate * h_in > kStepGuard) {
        throw ValidationError(
            "particle thinning guard violated: h_in * total rate = " +
            std::to_string(total_rate * h_in) + " > 0.1");
      }
      for (std::size_t k = 0; k < d; ++k) ens.positions[i * d + k] = z[k] + dx[k];
    }
  }
};

}  // namespace

DiscreteMeasure ParticleEnsemble::empirical() const {
  const auto d = static_cast<std::size_t>(dim);
  std::vector<Point> atoms(count);
  for (std::size_t i = 0; i < count; ++i) {
    atoms[i].assign(positions.begin() + static_cast<std::ptrdiff_t>(i * d),
                    positions.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
  }
  return DiscreteMeasure::probability(
      std::move(atoms),
      std::vector<double>(count, 1.0 / static_cast<double>(count)));
}

ParticleEnsemble sample_ensemble(const DiscreteMeasure& mu, std::size_t count,
                                 std::uint64_t seed) {
  if (mu.kind() != MassKind::Probability) {
    throw ValidationError("particle backend expects a probability measure");
  }
  ParticleEnsemble ens;
  ens.dim = mu.dim();
  ens.count = count;
  ens.base_seed = seed;
  const auto d = static_cast<std::size_t>(mu.dim());
  ens.positions.resize(count * d);

  const bool uniform_exact =
      mu.size() == count &&
      std::all_of(mu.weights().begin(), mu.weights().end(), [&](double w) {
        return std::abs(w - 1.0 / static_cast<double>(count)) < 1e-12;
      });
  if (uniform_exact) {
    // Identity assignment: particle i takes atom i of the canonical order,
    // so re-initializing from an ensemble's own empirical measure replays.
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        ens.positions[i * d + k] = mu.atoms()[i][k];
      }
    }
    return ens;
  }

  std::vector<double> cum(mu.size());
  double acc = 0.0;
  for (std::size_t a = 0; a < mu.size(); ++a) {
    acc += mu.weights()[a];
    cum[a] = acc;
  }
  for (std::size_t i = 0; i < count; ++i) {
    const double u = acc * rng::uniform(seed, 0x1417, i);
    const auto it = std::lower_bound(cum.begin(), cum.end(), u);
    const auto a = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(it - cum.begin(),
                                 static_cast<std::ptrdiff_t>(mu.size() - 1)));
    for (std::size_t k = 0; k < d; ++k) ens.positions[i * d + k] = mu.atoms()[a][k];
  }
  return ens;
}

void step_ensemble(ParticleEnsemble& ens, const GeneratorSpec& gen,
                   const MeasurePath& frozen, double from, double to,
                   double h_in, PropagationStats* stats, double time_offset) {
  ParticleStepper stepper{&gen, &frozen, h_in, stats, std::nullopt};
  if (gen.stable.has_value() && gen.stable->homogeneous) {
    const PathView view(frozen, gen.mode, std::min(from, frozen.horizon()));
    Point origin(static_cast<std::size_t>(gen.dim), 0.0);
    stepper.shared_plan = build_stable_plan(gen, from, origin, view, h_in);
  }
  double tau = from;
  while (tau < to - 1e-12) {
    const double h = std::min(h_in, to - tau);
    const auto g = static_cast<std::uint64_t>(
        std::floor((time_offset + tau) / h_in + 1e-9));
    stepper.h_in = h;
    stepper.step(ens, tau, g);
    tau += h;
  }
}

DiscreteMeasure propagate(const BackendConfig& backend, const GeneratorSpec& gen,
                          const MeasurePath& frozen, const DiscreteMeasure& mu,
                          double s, double t, PropagationStats* stats) {
  if (!(0.0 <= s && s <= t && t <= frozen.horizon() + 1e-9)) {
    throw ValidationError("propagate needs 0 <= s <= t <= T");
  }
  validate_backend(backend, gen, frozen.step());
  if (backend.kind == BackendKind::FiniteState) {
    FiniteStateRun run = finite_state_init(backend, mu);
    double tau = s;
    while (tau < t - 1e-12) {
      const double h = std::min(backend.h_in, t - tau);
      finite_state_step(run, gen, frozen, tau, h, stats);
      tau += h;
    }
    return finite_state_measure(run);
  }
  ParticleEnsemble ens = sample_ensemble(mu, backend.particles, backend.seed);
  step_ensemble(ens, gen, frozen, s, t, backend.h_in, stats);
  return ens.empirical();
}

MeasurePath propagate_path(const BackendConfig& backend, const GeneratorSpec& gen,
                           const MeasurePath& frozen, const DiscreteMeasure& mu,
                           PropagationStats* stats, double time_offset,
                           DiscreteMeasure* terminal_full) {
  validate_backend(backend, gen, frozen.step());
  std::vector<DiscreteMeasure> out;
  out.reserve(frozen.nodes());

  if (backend.kind == BackendKind::FiniteState) {
    FiniteStateRun run = finite_state_init(backend, mu);
    out.push_back(finite_state_measure(run));
    for (std::size_t k = 1; k < frozen.nodes(); ++k) {
      double tau = frozen.time_at(k - 1);
      const double target = frozen.time_at(k);
      while (tau < target - 1e-12) {
        const double h = std::min(backend.h_in, target - tau);
        finite_state_step(run, gen, frozen, tau, h, stats);
        tau += h;
      }
      out.push_back(finite_state_measure(run));
    }
    if (terminal_full) *terminal_full = out.back();
    return MeasurePath(frozen.horizon(), std::move(out));
  }

  ParticleEnsemble ens = sample_ensemble(mu, backend.particles, backend.seed);
  const auto record = [&]() {
    double radius = 0.0;
    DiscreteMeasure m = ens.empirical().coarsened(backend.bin_cap, &radius);
    if (stats) stats->bin_radius = std::max(stats->bin_radius, radius);
    return m;
  };
  out.push_back(record());
  for (std::size_t k = 1; k < frozen.nodes(); ++k) {
    step_ensemble(ens, gen, frozen, frozen.time_at(k - 1), frozen.time_at(k),
                  backend.h_in, stats, time_offset);
    out.push_back(record());
  }
  if (terminal_full) *terminal_full = ens.empirical();
  return MeasurePath(frozen.horizon(), std::move(out));
}

double chain_defect(const BackendConfig& backend, const GeneratorSpec& gen,
                    const MeasurePath& frozen, const DiscreteMeasure& mu,
                    double r, double s, double t) {
  if (!(0.0 <= r && r <= s && s <= t && t <= frozen.horizon() + 1e-9)) {
    throw ValidationError("chain_defect needs 0 <= r <= s <= t <= T");
  }
  validate_backend(backend, gen, frozen.step());
  if (backend.kind == BackendKind::FiniteState) {
    const DiscreteMeasure direct = propagate(backend, gen, frozen, mu, r, t);
    const DiscreteMeasure mid = propagate(backend, gen, frozen, mu, r, s);
    const DiscreteMeasure composed = propagate(backend, gen, frozen, mid, s, t);
    return flat_distance(direct, composed);
  }
  // Particle legs continue the same ensemble so streams stay aligned.
  ParticleEnsemble one = sample_ensemble(mu, backend.particles, backend.seed);
  step_ensemble(one, gen, frozen, r, t, backend.h_in);
  ParticleEnsemble two = sample_ensemble(mu, backend.particles, backend.seed);
  step_ensemble(two, gen, frozen, r, s, backend.h_in);
  step_ensemble(two, gen, frozen, s, t, backend.h_in);
  return flat_distance(one.empirical(), two.empirical());
}

std::vector<MartingaleDefect> martingale_defect(
    const BackendConfig& backend, const GeneratorSpec& gen,
    const MeasurePath& frozen, const TestFunction& f,
    const std::vector<double>& checkpoints) {
  if (backend.kind != BackendKind::Particle) {
    throw CapabilityError("martingale_defect runs on the particle backend");
  }
  if (checkpoints.empty()) {
    throw ValidationError("martingale_defect needs checkpoints");
  }
  validate_backend(backend, gen, frozen.step());

  ParticleEnsemble ens =
      sample_ensemble(frozen.at(0), backend.particles, backend.seed);
  const auto d = static_cast<std::size_t>(ens.dim);
  const std::size_t n = ens.count;
  std::vector<double> integral(n, 0.0);
  std::vector<double> reference(n, 0.0);
  std::vector<MartingaleDefect> out;

  double tau = 0.0;
  Point z(d);
  bool have_reference = false;
  for (double ck : checkpoints) {
    if (ck < tau - 1e-12 || ck > frozen.horizon() + 1e-9) {
      throw ValidationError("martingale checkpoints must be increasing within [0, T]");
    }
    while (tau < ck - 1e-12) {
      const double h = std::min(backend.h_in, ck - tau);
      const PathView view(frozen, gen.mode, std::min(tau, frozen.horizon()));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) z[k] = ens.positions[i * d + k];
        integral[i] += h * apply(gen, tau, view, f, z);
      }
      step_ensemble(ens, gen, frozen, tau, tau + h, backend.h_in);
      tau += h;
    }
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) z[k] = ens.positions[i * d + k];
      m[i] = f(z) - integral[i];
    }
    if (!have_reference) {
      reference = m;
      have_reference = true;
    }
    double defect = 0.0, var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      defect += m[i] - reference[i];
    }
    defect /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = (m[i] - reference[i]) - defect;
      var += dev * dev;
    }
    var /= static_cast<double>(n - 1);
    out.push_back({ck, defect, std::sqrt(var / static_cast<double>(n))});
  }
  return out;
}

}  // namespace kineq
