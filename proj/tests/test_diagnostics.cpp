#include <cmath>

#include "doctest.h"
#include "kineq/diagnostics.hpp"
#include "kineq/errors.hpp"
#include "kineq/fixpoint.hpp"
#include "kineq/flat_metric.hpp"
#include "oracles.hpp"

using namespace kineq;

TEST_SUITE_BEGIN("diagnostics");

namespace {

DiscreteMeasure two_state_measure(double p1) {
  return DiscreteMeasure::probability({{0.0}, {1.0}}, {1.0 - p1, p1});
}

GeneratorSpec two_state(double l0, double l1, double kappa,
                        const std::string& mode = "") {
  ExampleParams p;
  p.num["lambda0"] = l0;
  p.num["lambda1"] = l1;
  p.num["kappa"] = kappa;
  if (!mode.empty()) p.str["mode"] = mode;
  return make_example("pure_jump_2state", p);
}

BackendConfig finite_backend(const GeneratorSpec& gen, double h_in) {
  BackendConfig backend;
  backend.kind = BackendKind::FiniteState;
  backend.states = gen.states;
  backend.h_in = h_in;
  return backend;
}

MeasurePath two_state_oracle_path(double l0, double l1, double kappa, double p0,
                                  double horizon, std::size_t nodes,
                                  double h_fine) {
  const auto p1 = oracles::two_state_path(
      l0, l1, kappa, oracles::TwoStateCoupling::Instant, p0, horizon, nodes,
      h_fine);
  std::vector<DiscreteMeasure> ms;
  for (double q : p1) ms.push_back(two_state_measure(q));
  return MeasurePath(horizon, std::move(ms));
}

}  // namespace

TEST_CASE("weak residual of a constant path under the zero generator is 0") {
  GeneratorSpec zero;
  zero.dim = 1;
  zero.states = {{0.0}, {1.0}};
  const auto path = MeasurePath::constant(1.0, 11, two_state_measure(0.4));
  const auto dict = build_dictionary(FunctionClass::Sup, 1, 8, 7);
  CHECK(weak_residual(path, zero, dict) == 0.0);
}

TEST_CASE("weak residual of a fine two-state solve sits below 1e-5") {
  // Small rates keep the h^2 finite-difference term under the target; the
  // standard rates (1, 2) exceed 1e-5 at h = 1e-2 (see ledger note).
  const double l0 = 0.2, l1 = 0.3, kappa = 0.1;
  const auto gen = two_state(l0, l1, kappa);
  const auto path = two_state_oracle_path(l0, l1, kappa, 0.0, 1.0, 101, 1e-4);
  const auto dict = build_dictionary(FunctionClass::Sup, 1, 8, 7);
  const double residual = weak_residual(path, gen, dict);
  CHECK(residual <= 1e-5);
  CHECK(residual > 0.0);
}

TEST_CASE("weak residual detects a corrupted node at finite-difference scale") {
  const double l0 = 1.0, l1 = 2.0, kappa = 0.5;
  const auto gen = two_state(l0, l1, kappa);
  auto path = two_state_oracle_path(l0, l1, kappa, 0.0, 1.0, 101, 1e-4);
  const double h = path.step();

  const std::size_t node = 50;
  const double p_node = path.at(node).weights()[1];
  const double delta = 0.1;  // flat distance of the corruption
  path.set_node(node, two_state_measure(p_node + delta));

  const auto dict = build_dictionary(FunctionClass::Sup, 1, 8, 7);
  CHECK(weak_residual(path, gen, dict) >= delta / (2.0 * h));
}

TEST_CASE("holder estimate: constant paths, grid stability, particle paths") {
  const auto constant = MeasurePath::constant(1.0, 33, two_state_measure(0.3));
  CHECK(holder_estimate(constant) == 0.0);

  const double l0 = 1.0, l1 = 2.0, kappa = 0.5;
  std::vector<double> estimates;
  for (std::size_t nodes : {101, 201, 401}) {
    const auto path = two_state_oracle_path(l0, l1, kappa, 0.0, 1.0, nodes, 1e-4);
    estimates.push_back(holder_estimate(path));
  }
  const double lo = *std::min_element(estimates.begin(), estimates.end());
  const double hi = *std::max_element(estimates.begin(), estimates.end());
  CHECK(hi <= 3.0 * lo);
}

TEST_CASE("moment certificate on trivial, OU and stable-like paths") {
  const auto still = MeasurePath::constant(1.0, 5, DiscreteMeasure::dirac({0.0}));
  const auto cert = moment_certificate(still, 1.5, 1.0);
  CHECK(cert.verdict == Verdict::Pass);
  CHECK(cert.measured == 0.0);

  CHECK_THROWS_AS(moment_certificate(still, 2.5, 1.0), ValidationError);

  ExampleParams sp;
  sp.num["alpha"] = 1.5;
  const auto stable = make_example("stable_like_1d", sp);
  BackendConfig backend;
  backend.kind = BackendKind::Particle;
  backend.particles = 2000;
  backend.h_in = 1e-3;
  backend.seed = 7;
  const auto frozen = MeasurePath::constant(1.0, 21, DiscreteMeasure::dirac({0.0}));
  const auto path = propagate_path(backend, stable, frozen,
                                   DiscreteMeasure::dirac({0.0}));
  const double p_hat = ebdd_probe(stable, 8, 3, 1.0);
  const auto stable_cert = moment_certificate(path, 1.0, p_hat);
  CHECK(stable_cert.verdict == Verdict::Pass);
  CHECK(stable_cert.measured > 0.0);
  CHECK(std::isfinite(stable_cert.measured));
}

TEST_CASE("sensitivity certificate: identical data passes trivially, two-state ratio holds") {
  const auto gen = two_state(1.0, 2.0, 0.5);
  const auto backend = finite_backend(gen, 1e-3);
  SolveOptions options;
  options.horizon = 1.0;
  options.grid_step = 1e-2;
  options.tolerance = 1e-8;
  const SolverHandle handle = [&](const DiscreteMeasure& m0) {
    return solve_global_pathindep(gen, m0, backend, options);
  };

  const auto mu = two_state_measure(1.0);
  const auto same = sensitivity_certificate(handle, mu, mu, options.tolerance);
  CHECK(same.verdict == Verdict::Pass);
  CHECK(same.measured == 0.0);

  const auto eta = two_state_measure(0.9);
  const auto cert = sensitivity_certificate(handle, mu, eta, options.tolerance);
  CHECK(cert.verdict == Verdict::Pass);
  CHECK(cert.measured > 0.0);

  // Exhaustive grid of two-state initial pairs: contraction of the master
  // equation keeps every ratio at or below 1, far inside the Gronwall bound.
  for (double a : {0.0, 0.25, 0.5, 1.0}) {
    for (double b : {0.1, 0.75}) {
      const auto ca = sensitivity_certificate(handle, two_state_measure(a),
                                              two_state_measure(b),
                                              options.tolerance);
      CAPTURE(a);
      CAPTURE(b);
      CHECK(ca.verdict == Verdict::Pass);
      CHECK(ca.measured <= 1.0 + 1e-6);
    }
  }
}

TEST_CASE("sensitivity bound grows with the horizon") {
  const auto gen = two_state(1.0, 2.0, 0.5);
  const auto backend = finite_backend(gen, 1e-3);
  SolveOptions short_opt;
  short_opt.horizon = 0.5;
  short_opt.grid_step = 1e-2;
  SolveOptions long_opt = short_opt;
  long_opt.horizon = 1.0;
  const auto mu = two_state_measure(1.0);
  const auto eta = two_state_measure(0.9);
  const auto c_short = sensitivity_certificate(
      [&](const DiscreteMeasure& m0) {
        return solve_global_pathindep(gen, m0, backend, short_opt);
      },
      mu, eta, short_opt.tolerance);
  const auto c_long = sensitivity_certificate(
      [&](const DiscreteMeasure& m0) {
        return solve_global_pathindep(gen, m0, backend, long_opt);
      },
      mu, eta, long_opt.tolerance);
  CHECK(c_short.bound <= c_long.bound);
  CHECK(c_short.measured <= c_short.bound);
  CHECK(c_long.measured <= c_long.bound);
}

TEST_CASE("oracle comparators agree pairwise on the two-state family") {
  // exp(Q^T t) against a fine RK4 integration of w' = Q^T w.
  const std::vector<double> qt{-1.0, 2.0, 1.0, -2.0};
  const auto e = oracle::expm(qt, 2);
  const auto rhs = [&](double, const std::vector<double>& w) {
    return std::vector<double>{qt[0] * w[0] + qt[1] * w[1],
                               qt[2] * w[0] + qt[3] * w[1]};
  };
  const auto w10 = oracles::rk4(rhs, {1.0, 0.0}, 0.0, 1.0, 1e-4);
  const auto w01 = oracles::rk4(rhs, {0.0, 1.0}, 0.0, 1.0, 1e-4);
  CHECK(std::abs(e[0] - w10[0]) <= 1e-10);
  CHECK(std::abs(e[2] - w10[1]) <= 1e-10);
  CHECK(std::abs(e[1] - w01[0]) <= 1e-10);
  CHECK(std::abs(e[3] - w01[1]) <= 1e-10);

  // Core RK4 oracle against the test-side one.
  const auto core = oracle::rk4(rhs, {1.0, 0.0}, 0.0, 1.0, 1e-4);
  CHECK(std::abs(core[0] - w10[0]) <= 1e-12);
  CHECK(std::abs(core[1] - w10[1]) <= 1e-12);

  // Bisection against the closed-form stationary point of the two-state
  // anticipating map.
  const double q = oracle::bisect(
      [&](double x) {
        return oracles::two_state_terminal_frozen(1.0 + x, 2.0, 0.0, 1.0) - x;
      },
      0.0, 1.0, 1e-12);
  const double q_ref = oracles::anticipating_two_state_terminal(1.0, 1.0, 2.0,
                                                                0.0, 1.0, 1e-12);
  CHECK(q == doctest::Approx(q_ref).epsilon(1e-10));

  // OU closed forms against RK4 on the moment ODEs.
  const auto moment_rhs = [](double, const std::vector<double>& y) {
    return std::vector<double>{-(y[0] - 0.3), -2.0 * y[1] + 1.0};
  };
  const auto moments = oracles::rk4(moment_rhs, {1.0, 0.1}, 0.0, 0.7, 1e-5);
  CHECK(oracle::ou_mean(1.0, 0.3, 0.7) == doctest::Approx(moments[0]).epsilon(1e-10));
  CHECK(oracle::ou_variance(0.1, 1.0, 0.7) ==
        doctest::Approx(moments[1]).epsilon(1e-10));
}

TEST_CASE("weak residual bound scales with the scheme parameters") {
  BackendConfig fs;
  fs.kind = BackendKind::FiniteState;
  fs.h_in = 1e-3;
  const double base = weak_residual_bound(2.0, 1e-2, fs, 0.0, 0.0);
  CHECK(base > 0.0);
  CHECK(weak_residual_bound(2.0, 2e-2, fs, 0.0, 0.0) > base);

  BackendConfig pb;
  pb.kind = BackendKind::Particle;
  pb.particles = 1000;
  pb.h_in = 1e-3;
  const double noisy = weak_residual_bound(2.0, 1e-2, pb, 1.0, 0.0);
  CHECK(noisy > base);
}

TEST_SUITE_END();
