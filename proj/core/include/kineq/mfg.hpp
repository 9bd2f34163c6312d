#pragma once

#include "kineq/fixpoint.hpp"

namespace kineq {

/// Feedback controls per grid node and state, with the value function of
/// the backward sweep kept for diagnostics.
struct ControlTable {
  std::vector<double> times;
  std::vector<std::vector<double>> controls;  // [node][state]
  std::vector<std::vector<double>> values;    // [node][state]
};

/// Finite-state mean-field game: controlled switching rates, running reward
/// J(t, i, anticipated path, u) and terminal reward V^T(i, mu_hat_T).
struct MfgProblem {
  std::vector<Point> states;
  std::vector<double> control_grid;
  std::function<double(double, std::size_t, const PathView&, double)> running_reward;
  std::function<double(std::size_t, const DiscreteMeasure&)> terminal_reward;
  std::function<double(double, std::size_t, std::size_t, double)> controlled_rate;
};

/// Explicit backward sweep of the value recursion on the anticipated path's
/// grid, maximizing over the control grid at each (node, state).
ControlTable backward_control_sweep(const MfgProblem& problem,
                                    const MeasurePath& anticipated);

/// Forward generator with the control table baked in (piecewise constant
/// per grid cell); measure-independent.
GeneratorSpec controlled_generator(const MfgProblem& problem,
                                   const ControlTable& controls,
                                   double grid_step);

/// Outer damped iteration on the anticipated path mu_hat until the forward
/// equation under the induced controls reproduces it. Residual trace is the
/// consistency residual path_distance(mu_hat, mu).
SolveReport solve_mfg(const MfgProblem& problem, const DiscreteMeasure& mu,
                      const BackendConfig& backend, const SolveOptions& options);

/// Two-state crowd-aversion toy: switching rate base_rate + u with quadratic
/// control cost; the crowd penalty -gamma * (own-state occupancy) enters the
/// terminal reward ("terminal" coupling, scalar-oracle checkable) or the
/// running reward ("running").
struct CrowdMfgParams {
  double gamma = 1.0;
  double control_cost = 0.5;
  double u_max = 4.0;
  int control_points = 41;
  double base_rate = 0.5;
  std::string coupling = "terminal";
};

MfgProblem make_crowd_mfg(const CrowdMfgParams& params);

}  // namespace kineq
