#include "kineq/mfg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "kineq/errors.hpp"
#include "kineq/flat_metric.hpp"

namespace kineq {

namespace {

std::size_t state_index(const std::vector<Point>& states, const Point& z) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (euclidean_distance(states[i], z) <= 1e-9) return i;
  }
  return states.size();
}

void validate_problem(const MfgProblem& problem) {
  if (problem.states.size() < 2) {
    throw ValidationError("MFG problem needs at least 2 states");
  }
  if (problem.control_grid.empty()) {
    throw ValidationError("MFG problem needs a nonempty control grid");
  }
  if (!problem.running_reward || !problem.terminal_reward ||
      !problem.controlled_rate) {
    throw ValidationError("MFG problem needs reward and rate functions");
  }
}

}  // namespace

ControlTable backward_control_sweep(const MfgProblem& problem,
                                    const MeasurePath& anticipated) {
  validate_problem(problem);
  const std::size_t n = anticipated.nodes();
  const std::size_t m = problem.states.size();
  const double h = anticipated.step();

  ControlTable table;
  table.times.resize(n);
  table.controls.assign(n, std::vector<double>(m, problem.control_grid.front()));
  table.values.assign(n, std::vector<double>(m, 0.0));
  for (std::size_t k = 0; k < n; ++k) table.times[k] = anticipated.time_at(k);

  for (std::size_t i = 0; i < m; ++i) {
    const double v = problem.terminal_reward(i, anticipated.at(n - 1));
    if (!std::isfinite(v)) {
      throw ValidationError("MFG terminal reward is non-finite");
    }
    table.values[n - 1][i] = v;
  }

  for (std::size_t k = n - 1; k-- > 0;) {
    const double t = anticipated.time_at(k);
    const PathView view(anticipated, DependenceMode::Anticipating, t);
    for (std::size_t i = 0; i < m; ++i) {
      double best_value = -std::numeric_limits<double>::infinity();
      double best_u = problem.control_grid.front();
      for (double u : problem.control_grid) {
        double flow = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          if (j == i) continue;
          const double rate = problem.controlled_rate(t, i, j, u);
          if (rate < 0.0) throw ValidationError("negative controlled rate");
          flow += rate * (table.values[k + 1][j] - table.values[k + 1][i]);
        }
        const double reward = problem.running_reward(t, i, view, u);
        if (!std::isfinite(reward)) {
          throw ValidationError("MFG running reward is non-finite");
        }
        const double value = table.values[k + 1][i] + h * (reward + flow);
        if (value > best_value) {
          best_value = value;
          best_u = u;
        }
      }
      table.values[k][i] = best_value;
      table.controls[k][i] = best_u;
    }
  }
  // Terminal row carries the last interior controls; the forward equation
  // never reads it.
  if (n >= 2) table.controls[n - 1] = table.controls[n - 2];
  return table;
}

GeneratorSpec controlled_generator(const MfgProblem& problem,
                                   const ControlTable& controls,
                                   double grid_step) {
  GeneratorSpec gen;
  gen.family = Family::FiniteStateJump;
  gen.mode = DependenceMode::PathIndependent;
  gen.dim = static_cast<int>(problem.states.front().size());
  gen.label = "mfg_controlled";
  gen.states = problem.states;
  const std::size_t m = problem.states.size();
  const auto shared_states = std::make_shared<const std::vector<Point>>(problem.states);
  const auto shared_controls = std::make_shared<const ControlTable>(controls);
  const auto rate_fn = problem.controlled_rate;
  const std::size_t last = controls.controls.size() - 1;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      Point disp(problem.states[j].size());
      for (std::size_t c = 0; c < disp.size(); ++c) {
        disp[c] = problem.states[j][c] - problem.states[i][c];
      }
      gen.jumps.push_back(
          {[shared_states, shared_controls, rate_fn, i, j, grid_step, last](
               double t, const Point& z, const PathView&) {
             if (state_index(*shared_states, z) != i) return 0.0;
             const auto k = std::min(
                 static_cast<std::size_t>(std::floor(t / grid_step + 1e-9)), last);
             return rate_fn(t, i, j, shared_controls->controls[k][i]);
           },
           std::move(disp),
           false});
    }
  }
  return gen;
}

SolveReport solve_mfg(const MfgProblem& problem, const DiscreteMeasure& mu,
                      const BackendConfig& backend, const SolveOptions& options) {
  validate_problem(problem);
  if (backend.kind != BackendKind::FiniteState) {
    throw CapabilityError("solve_mfg runs on the finite-state backend");
  }
  if (backend.states.size() != problem.states.size()) {
    throw StructuralError("backend state list does not match the MFG problem");
  }
  if (!(options.beta > 0.0 && options.beta <= 1.0)) {
    throw ValidationError("damping beta must lie in (0, 1]");
  }
  const double n_cells = options.horizon / options.grid_step;
  if (std::abs(n_cells - std::round(n_cells)) > 1e-9 * std::max(1.0, n_cells)) {
    throw ValidationError("grid step must divide the horizon");
  }
  const auto nodes = static_cast<std::size_t>(std::round(n_cells)) + 1;

  PropagationStats stats;
  ControlTable final_controls;
  const auto phi = [&](const MeasurePath& anticipated) {
    final_controls = backward_control_sweep(problem, anticipated);
    const GeneratorSpec gen =
        controlled_generator(problem, final_controls, options.grid_step);
    return propagate_path(backend, gen, anticipated, mu, &stats);
  };
  const MeasurePath xi0 = MeasurePath::constant(options.horizon, nodes,
                                                mu.coarsened(backend.bin_cap));
  const int cap = options.max_iterations > 0 ? options.max_iterations : 500;
  auto out = detail::damped_fixed_point(phi, xi0, options.tolerance, cap,
                                        options.beta, true, backend.bin_cap);

  SolveReport report(out.solution);
  report.solver = "mfg";
  report.status = out.converged ? SolveStatus::Converged : SolveStatus::MaxIter;
  report.diagnostic = out.converged ? "" : "NON_CONVERGED";
  report.iterations = out.iterations;
  report.residual_trace = out.residuals;
  report.beta_log = out.betas;
  report.seed = backend.seed;
  report.backend = to_string(backend.kind);
  report.h_in = backend.h_in;
  report.tolerance = options.tolerance;
  report.constants.c1 = 0.0;
  report.constants.horizon = options.horizon;
  report.constants.note = "MFG outer loop; generator constants not probed";
  report.metrics["max_renormalization_defect"] = stats.max_renormalization_defect;
  report.metrics["min_weight"] = stats.min_weight;
  report.metrics["max_rate_step"] = stats.max_rate_step;
  for (std::size_t i = 0; i < problem.states.size(); ++i) {
    std::vector<double> per_node(final_controls.controls.size());
    std::vector<double> vals(final_controls.values.size());
    for (std::size_t k = 0; k < per_node.size(); ++k) {
      per_node[k] = final_controls.controls[k][i];
      vals[k] = final_controls.values[k][i];
    }
    report.tables["control_state" + std::to_string(i)] = std::move(per_node);
    report.tables["value_state" + std::to_string(i)] = std::move(vals);
  }

  double consistency = 0.0;
  if (!out.residuals.empty()) consistency = out.residuals.back();
  report.certificates.push_back(make_certificate(
      "MFG_CONSISTENCY", consistency, options.tolerance, 0.0,
      "final consistency residual path_distance(mu_hat, mu)"));
  return report;
}

MfgProblem make_crowd_mfg(const CrowdMfgParams& params) {
  if (params.gamma < 0.0) throw ValidationError("crowd mfg: gamma must be >= 0");
  if (params.control_cost <= 0.0) {
    throw ValidationError("crowd mfg: control_cost must be > 0");
  }
  if (params.u_max <= 0.0 || params.control_points < 2) {
    throw ValidationError("crowd mfg: need u_max > 0 and >= 2 control points");
  }
  if (params.base_rate < 0.0) {
    throw ValidationError("crowd mfg: base_rate must be >= 0");
  }
  if (params.coupling != "terminal" && params.coupling != "running") {
    throw ValidationError("crowd mfg: coupling must be terminal|running");
  }

  MfgProblem problem;
  problem.states = {{0.0}, {1.0}};
  problem.control_grid.resize(static_cast<std::size_t>(params.control_points));
  for (int k = 0; k < params.control_points; ++k) {
    problem.control_grid[static_cast<std::size_t>(k)] =
        params.u_max * static_cast<double>(k) /
        static_cast<double>(params.control_points - 1);
  }
  const double gamma = params.gamma;
  const double cost = params.control_cost;
  const bool running = params.coupling == "running";
  const auto states = problem.states;

  problem.running_reward = [cost, gamma, running, states](
                               double t, std::size_t i, const PathView& view,
                               double u) {
    double reward = -cost * u * u;
    if (running && gamma != 0.0) {
      reward -= gamma * view.occupancy(t, states[i]);
    }
    return reward;
  };
  problem.terminal_reward = [gamma, running, states](std::size_t i,
                                                     const DiscreteMeasure& mu) {
    if (running || gamma == 0.0) return 0.0;
    double occ = 0.0;
    for (std::size_t a = 0; a < mu.size(); ++a) {
      if (euclidean_distance(mu.atoms()[a], states[i]) <= 1e-9) {
        occ += mu.weights()[a];
      }
    }
    return -gamma * occ;
  };
  problem.controlled_rate = [base = params.base_rate](double, std::size_t,
                                                      std::size_t, double u) {
    return base + u;
  };
  return problem;
}

}  // namespace kineq
