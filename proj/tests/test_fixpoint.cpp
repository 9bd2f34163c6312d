#include <cmath>

#include "doctest.h"
#include "kineq/errors.hpp"
#include "kineq/fixpoint.hpp"
#include "kineq/flat_metric.hpp"
#include "kineq/mfg.hpp"
#include "kineq/rng.hpp"
#include "oracles.hpp"

using namespace kineq;

TEST_SUITE_BEGIN("fixpoint");

namespace {

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

DiscreteMeasure two_state_measure(double p1) {
  return DiscreteMeasure::probability({{0.0}, {1.0}}, {1.0 - p1, p1});
}

const CertificateRecord& find_certificate(const SolveReport& report,
                                          const std::string& name) {
  for (const auto& c : report.certificates) {
    if (c.name == name) return c;
  }
  throw std::runtime_error("certificate " + name + " not found");
}

}  // namespace

TEST_CASE("local solve of a measure-independent generator needs one iteration") {
  const auto gen = two_state(1.0, 2.0, 0.0, "full_path");
  SolveOptions options;
  options.horizon = 0.2;
  options.grid_step = 1e-3;
  options.tolerance = 1e-9;
  const auto report = solve_local(gen, two_state_measure(0.0),
                                  finite_backend(gen, 1e-3), options);
  CHECK(report.status == SolveStatus::Converged);
  CHECK(report.iterations == 1);
  REQUIRE(report.residual_trace.size() == 2);
  CHECK(report.residual_trace[0] > options.tolerance);
  CHECK(report.residual_trace[1] <= options.tolerance);
}

TEST_CASE("local two-state solve matches the fine-step reference") {
  const auto gen = two_state(1.0, 2.0, 0.5, "full_path");
  SolveOptions options;
  options.horizon = 0.2;
  options.grid_step = 5e-5;
  options.tolerance = 1e-9;
  const auto backend = finite_backend(gen, 5e-5);
  const auto report = solve_local(gen, two_state_measure(0.0), backend, options);
  REQUIRE(report.status == SolveStatus::Converged);

  const std::size_t nodes = report.solution.nodes();
  const auto oracle = oracles::two_state_path(
      1.0, 2.0, 0.5, oracles::TwoStateCoupling::Instant, 0.0, 0.2, nodes, 1e-5);
  double sup = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    sup = std::max(sup,
                   flat_distance(report.solution.at(k), two_state_measure(oracle[k])));
  }
  CHECK(sup <= 1e-5);

  // Geometric decay with per-iteration ratios below the measured product.
  const auto& contraction = find_certificate(report, "CONTRACTION");
  CHECK(contraction.verdict == Verdict::Pass);
  for (double ratio : report.contraction_ratios) {
    CHECK(ratio <= report.constants.product() * 1.05);
  }
  CHECK(find_certificate(report, "TIME_LIPSCHITZ").verdict == Verdict::Pass);
}

TEST_CASE("local solver refuses wrong modes and locality violations") {
  const auto adapted = two_state(1.0, 2.0, 0.5, "adapted");
  SolveOptions options;
  options.horizon = 0.2;
  options.grid_step = 1e-3;
  CHECK_THROWS_AS(solve_local(adapted, two_state_measure(0.0),
                              finite_backend(adapted, 1e-3), options),
                  ValidationError);

  const auto gen = two_state(1.0, 2.0, 0.5, "full_path");
  SolveOptions late = options;
  late.horizon = 2.0;  // c1*T comfortably exceeds 1
  late.grid_step = 1e-3;
  CHECK_THROWS_AS(solve_local(gen, two_state_measure(0.0),
                              finite_backend(gen, 1e-3), late),
                  LocalityError);
}

TEST_CASE("global two-state solve tracks the reference over T = 5") {
  const auto gen = two_state(1.0, 2.0, 0.5);
  SolveOptions options;
  options.horizon = 5.0;
  options.grid_step = 2e-4;
  options.tolerance = 1e-9;
  const auto backend = finite_backend(gen, 2e-4);
  const auto report =
      solve_global_pathindep(gen, two_state_measure(0.0), backend, options);
  REQUIRE(report.status == SolveStatus::Converged);
  CHECK(report.metrics.at("subintervals") >= 2.0);

  const std::size_t nodes = report.solution.nodes();
  const auto oracle = oracles::two_state_path(
      1.0, 2.0, 0.5, oracles::TwoStateCoupling::Instant, 0.0, 5.0, nodes, 1e-5);
  double sup = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    sup = std::max(sup,
                   flat_distance(report.solution.at(k), two_state_measure(oracle[k])));
  }
  CHECK(sup <= 1e-4);

  CHECK(find_certificate(report, "NONLINEAR_PROPAGATOR").verdict == Verdict::Pass);
  CHECK(find_certificate(report, "INITIAL_LIPSCHITZ").verdict == Verdict::Pass);
  CHECK(find_certificate(report, "CONTRACTION").verdict == Verdict::Pass);
}

TEST_CASE("global solver requires a path-independent generator") {
  const auto gen = two_state(1.0, 2.0, 0.5, "full_path");
  SolveOptions options;
  options.horizon = 1.0;
  options.grid_step = 1e-3;
  CHECK_THROWS_AS(solve_global_pathindep(gen, two_state_measure(0.0),
                                         finite_backend(gen, 1e-3), options),
                  ValidationError);
}

TEST_CASE("global OU particle solve conserves the mean and matches the variance") {
  ExampleParams p;
  p.num["sigma"] = 1.0;
  const auto gen = make_example("mckean_vlasov_ou", p);
  BackendConfig backend;
  backend.kind = BackendKind::Particle;
  backend.particles = 2000;
  backend.h_in = 5e-3;
  backend.seed = 41;

  const std::size_t n = backend.particles;
  std::vector<Point> atoms;
  const double v0 = 0.04;
  for (std::size_t i = 0; i < n; ++i) {
    atoms.push_back({0.5 + std::sqrt(v0) * rng::gaussian(97, 0, i)});
  }
  const auto mu = DiscreteMeasure::probability(
      atoms, std::vector<double>(n, 1.0 / static_cast<double>(n)));
  const double m_hat = mu.mean()[0];
  double v_hat = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v_hat += (atoms[i][0] - m_hat) * (atoms[i][0] - m_hat) / static_cast<double>(n);
  }

  SolveOptions options;
  options.horizon = 2.0;
  options.grid_step = 0.05;
  options.tolerance = 5e-3;
  const auto report = solve_global_pathindep(gen, mu, backend, options);
  REQUIRE(report.status == SolveStatus::Converged);

  for (double t : {0.5, 1.0, 2.0}) {
    const auto& node = report.solution.at(report.solution.floor_index(t));
    const double se_mean = std::sqrt(t / static_cast<double>(n));
    CAPTURE(t);
    CHECK(std::abs(node.mean()[0] - m_hat) <= 3.0 * se_mean + 5e-3);

    double var = 0.0;
    const double m = node.mean()[0];
    for (std::size_t i = 0; i < node.size(); ++i) {
      var += node.weights()[i] * (node.atoms()[i][0] - m) * (node.atoms()[i][0] - m);
    }
    const double want = 0.5 + (v_hat - 0.5) * std::exp(-2.0 * t);
    const double se_var = want * std::sqrt(2.0 / static_cast<double>(n));
    CHECK(std::abs(var - want) <= 3.0 * se_var + 5e-3);
  }
}

TEST_CASE("adapted Picard solve: trivial generator stabilizes after one step") {
  const auto gen = two_state(1.0, 2.0, 0.0, "adapted");
  SolveOptions options;
  options.horizon = 1.0;
  options.grid_step = 1e-3;
  options.tolerance = 1e-12;
  const auto report = solve_adapted(gen, two_state_measure(0.0),
                                    finite_backend(gen, 1e-3), options);
  CHECK(report.status == SolveStatus::Converged);
  CHECK(report.iterations == 1);
  REQUIRE(report.residual_trace.size() == 2);
  CHECK(report.residual_trace[1] == 0.0);  // xi^2 equals xi^1 exactly
}

TEST_CASE("adapted running-average coupling matches the integro-ODE reference") {
  ExampleParams p;
  p.num["lambda0"] = 1.0;
  p.num["lambda1"] = 2.0;
  p.num["kappa"] = 0.8;
  p.str["coupling"] = "running_avg";
  const auto adapted = make_example("pure_jump_2state", p);
  REQUIRE(adapted.mode == DependenceMode::Adapted);

  SolveOptions options;
  options.horizon = 1.0;
  options.grid_step = 5e-4;
  options.tolerance = 1e-10;
  const auto backend = finite_backend(adapted, 5e-4);
  const auto report =
      solve_adapted(adapted, two_state_measure(0.0), backend, options);
  REQUIRE(report.status == SolveStatus::Converged);

  const std::size_t nodes = report.solution.nodes();
  const auto oracle = oracles::two_state_path(
      1.0, 2.0, 0.8, oracles::TwoStateCoupling::RunningAverage, 0.0, 1.0, nodes,
      1e-5);
  double sup = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    sup = std::max(sup,
                   flat_distance(report.solution.at(k), two_state_measure(oracle[k])));
  }
  CHECK(sup <= 1e-4);

  const auto& factorial = find_certificate(report, "FACTORIAL");
  CHECK(factorial.verdict == Verdict::Pass);
  CHECK(find_certificate(report, "GRONWALL").verdict == Verdict::Pass);
}

TEST_CASE("adapted OU with running-average drift keeps its initial mean") {
  ExampleParams p;
  p.num["sigma"] = 1.0;
  const auto gen = make_example("adapted_avg_ou", p);
  REQUIRE(gen.mode == DependenceMode::Adapted);

  BackendConfig backend;
  backend.kind = BackendKind::Particle;
  backend.particles = 2000;
  backend.h_in = 5e-3;
  backend.seed = 43;

  const std::size_t n = backend.particles;
  std::vector<Point> atoms;
  for (std::size_t i = 0; i < n; ++i) {
    atoms.push_back({1.5 + 0.2 * rng::gaussian(101, 0, i)});
  }
  const auto mu = DiscreteMeasure::probability(
      atoms, std::vector<double>(n, 1.0 / static_cast<double>(n)));
  const double m_hat = mu.mean()[0];

  SolveOptions options;
  options.horizon = 1.0;
  options.grid_step = 0.05;
  options.tolerance = 5e-3;
  const auto report = solve_adapted(gen, mu, backend, options);
  REQUIRE(report.status == SolveStatus::Converged);
  for (std::size_t k = 0; k < report.solution.nodes(); ++k) {
    const double t = report.solution.time_at(k);
    const double se = std::sqrt((t + 0.01) / static_cast<double>(n));
    CAPTURE(t);
    CHECK(std::abs(report.solution.at(k).mean()[0] - m_hat) <= 3.0 * se + 5e-3);
  }
}

TEST_CASE("anticipating two-state terminal value matches the bisection oracle") {
  ExampleParams p;  // rate01 = 1 + p1(T), rate10 = 2
  const auto gen = make_example("anticipating_2state", p);
  SolveOptions options;
  options.horizon = 1.0;
  options.grid_step = 1e-2;
  options.tolerance = 1e-9;
  options.beta = 0.5;
  const auto backend = finite_backend(gen, 1e-3);
  const auto report = solve_anticipating(gen, two_state_measure(0.0), backend,
                                         options);
  REQUIRE(report.status == SolveStatus::Converged);
  CHECK(report.diagnostic == "EXISTENCE_ONLY");
  CHECK(report.final_residual() <= 1e-6);

  const double got =
      report.solution.at(report.solution.nodes() - 1).weights()[1];
  const double want = oracles::anticipating_two_state_terminal(1.0, 1.0, 2.0,
                                                               0.0, 1.0, 1e-12);
  CHECK(got == doctest::Approx(want).epsilon(1e-6));

  CHECK(find_certificate(report, "WEAK_RESIDUAL").verdict == Verdict::Pass);
  CHECK(find_certificate(report, "MOMENT_COMPACTNESS").verdict == Verdict::Pass);
  CHECK(find_certificate(report, "EXISTENCE_ONLY").verdict == Verdict::OneSided);
}

TEST_CASE("anticipating solve of a constant map converges in one iteration") {
  const auto gen = two_state(1.0, 2.0, 0.0, "anticipating");
  SolveOptions options;
  options.horizon = 1.0;
  options.grid_step = 1e-2;
  options.tolerance = 1e-9;
  options.beta = 1.0;
  const auto report = solve_anticipating(gen, two_state_measure(0.0),
                                         finite_backend(gen, 1e-3), options);
  CHECK(report.status == SolveStatus::Converged);
  CHECK(report.iterations == 1);
}

TEST_CASE("terminal-anchored OU keeps the unique consistent mean path") {
  ExampleParams p;
  p.num["sigma"] = 0.0;
  p.str["anchor"] = "terminal";
  const auto gen = make_example("mckean_vlasov_ou", p);
  REQUIRE(gen.mode == DependenceMode::Anticipating);

  const std::size_t n = 256;
  std::vector<Point> atoms;
  const double m0 = 0.75;
  for (std::size_t i = 0; i < n; ++i) {
    const double off = (i < n / 2 ? -1.0 : 1.0) + 1e-7 * static_cast<double>(i);
    atoms.push_back({m0 + off});
  }
  const auto mu = DiscreteMeasure::probability(
      atoms, std::vector<double>(n, 1.0 / static_cast<double>(n)));
  const double m_hat = mu.mean()[0];

  BackendConfig backend;
  backend.kind = BackendKind::Particle;
  backend.particles = n;
  backend.h_in = 1e-2;
  backend.seed = 59;

  SolveOptions options;
  options.horizon = 1.0;
  options.grid_step = 1e-2;
  options.tolerance = 1e-7;
  options.beta = 1.0;
  const auto report = solve_anticipating(gen, mu, backend, options);
  REQUIRE(report.status == SolveStatus::Converged);
  CHECK(report.final_residual() <= 1e-6);
  for (std::size_t k = 0; k < report.solution.nodes(); ++k) {
    CHECK(std::abs(report.solution.at(k).mean()[0] - m_hat) <= 1e-6);
  }
}

TEST_CASE("factorial envelope holds on the adapted two-state family") {
  ExampleParams p;
  p.num["lambda0"] = 1.0;
  p.num["lambda1"] = 2.0;
  p.num["kappa"] = 0.8;
  p.str["coupling"] = "running_avg";
  const auto gen = make_example("pure_jump_2state", p);
  SolveOptions options;
  options.horizon = 1.0;
  options.grid_step = 1e-2;
  options.tolerance = 1e-12;
  options.max_iterations = 30;
  const auto report = solve_adapted(gen, two_state_measure(0.0),
                                    finite_backend(gen, 1e-3), options);
  const double product = report.constants.product();
  double envelope = 1.0;
  for (std::size_t nn = 1; nn <= std::min<std::size_t>(6, report.residual_trace.size());
       ++nn) {
    envelope *= product / static_cast<double>(nn);
    CAPTURE(nn);
    CHECK(report.residual_trace[nn - 1] <= 2.0 * envelope);
  }
}

TEST_CASE("reports serialize deterministically on the finite-state backend") {
  const auto gen = two_state(1.0, 2.0, 0.5, "full_path");
  SolveOptions options;
  options.horizon = 0.2;
  options.grid_step = 1e-3;
  options.tolerance = 1e-8;
  const auto a = solve_local(gen, two_state_measure(0.0),
                             finite_backend(gen, 1e-3), options);
  const auto b = solve_local(gen, two_state_measure(0.0),
                             finite_backend(gen, 1e-3), options);
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("mfg: zero coupling closes in exactly one outer iteration") {
  CrowdMfgParams params;
  params.gamma = 0.0;
  const auto problem = make_crowd_mfg(params);
  BackendConfig backend;
  backend.kind = BackendKind::FiniteState;
  backend.states = problem.states;
  backend.h_in = 1e-3;

  SolveOptions options;
  options.horizon = 1.0;
  options.grid_step = 1e-2;
  options.tolerance = 1e-9;
  options.beta = 1.0;
  const auto report = solve_mfg(problem, two_state_measure(0.3), backend, options);
  CHECK(report.status == SolveStatus::Converged);
  CHECK(report.iterations == 1);
}

TEST_CASE("mfg: crowd-aversion toy matches the scalar consistency oracle") {
  CrowdMfgParams params;
  params.gamma = 0.8;
  params.control_cost = 0.5;
  params.u_max = 4.0;
  params.control_points = 41;
  params.base_rate = 0.5;
  const auto problem = make_crowd_mfg(params);
  BackendConfig backend;
  backend.kind = BackendKind::FiniteState;
  backend.states = problem.states;
  backend.h_in = 1e-3;

  SolveOptions options;
  options.horizon = 1.0;
  options.grid_step = 1e-2;
  options.tolerance = 1e-6;
  options.beta = 0.5;
  const auto report = solve_mfg(problem, two_state_measure(0.9), backend, options);
  REQUIRE(report.status == SolveStatus::Converged);

  for (std::size_t k = 0; k + 1 < report.residual_trace.size(); ++k) {
    CHECK(report.residual_trace[k + 1] < report.residual_trace[k]);
  }
  CHECK(report.final_residual() <= 1e-4);

  const double got =
      report.solution.at(report.solution.nodes() - 1).weights()[1];
  const double want = oracles::crowd_mfg_terminal(0.8, 0.5, 4.0, 41, 0.5, 0.9,
                                                  1.0, 1e-2, 1e-9);
  CHECK(got == doctest::Approx(want).epsilon(1e-4));
}

TEST_CASE("mfg: symmetric game from a symmetric start stays at one half") {
  CrowdMfgParams params;
  params.gamma = 1.0;
  params.coupling = "running";
  const auto problem = make_crowd_mfg(params);
  BackendConfig backend;
  backend.kind = BackendKind::FiniteState;
  backend.states = problem.states;
  backend.h_in = 1e-3;

  SolveOptions options;
  options.horizon = 1.0;
  options.grid_step = 1e-2;
  options.tolerance = 1e-8;
  options.beta = 0.5;
  const auto report = solve_mfg(problem, two_state_measure(0.5), backend, options);
  REQUIRE(report.status == SolveStatus::Converged);
  for (std::size_t k = 0; k < report.solution.nodes(); ++k) {
    CHECK(report.solution.at(k).weights()[1] == doctest::Approx(0.5).epsilon(1e-8));
  }
}

TEST_SUITE_END();
