#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kineq/certificates.hpp"
#include "kineq/propagators.hpp"

namespace kineq {

/// Constants of the contraction estimate c1*c2*c3*K*T. c2 and c3 are taken
/// as 1 for positivity-preserving families (dual Markov propagators contract
/// the sup norm); the assumption is recorded in `note`.
struct ContractionConstants {
  double c1 = 0.0;
  double c2 = 1.0;
  double c3 = 1.0;
  double mass_bound = 1.0;  // K
  double horizon = 0.0;     // T
  std::string note;

  double product() const { return c1 * c2 * c3 * mass_bound * horizon; }
};

enum class SolveStatus { Converged, MaxIter };

std::string to_string(SolveStatus status);

struct SolveOptions {
  double horizon = 1.0;
  double grid_step = 0.01;
  double tolerance = 1e-6;
  /// <= 0 picks the solver default (local/global 200, adapted 50,
  /// anticipating and MFG 500).
  int max_iterations = 0;
  double beta = 0.5;
  std::uint64_t seed = 1;
  int probe_trials = 16;
  int dictionary_size = 16;
};

struct SolveReport {
  explicit SolveReport(MeasurePath sol) : solution(std::move(sol)) {}

  MeasurePath solution;
  SolveStatus status = SolveStatus::Converged;
  std::string solver;
  std::string diagnostic;  // NO_CONTRACTION, NON_CONVERGED, EXISTENCE_ONLY...
  int iterations = 0;
  std::vector<double> residual_trace;
  std::vector<double> contraction_ratios;
  std::vector<double> beta_log;
  ContractionConstants constants;
  std::vector<CertificateRecord> certificates;
  std::uint64_t seed = 0;
  std::string backend;
  double h_in = 0.0;
  double tolerance = 0.0;
  std::map<std::string, double> metrics;
  std::map<std::string, std::vector<double>> tables;
  std::string config_echo;  // set by the scenario runner

  bool all_certificates_pass() const { return all_pass(certificates); }
  double final_residual() const {
    return residual_trace.empty() ? 0.0 : residual_trace.back();
  }
  std::string to_json() const;
};

/// Measured constants for a generator: c1 = max(Lipschitz probe,
/// boundedness probe) over a few probe times, c2 = c3 = 1, K = 1.
ContractionConstants probe_constants(const GeneratorSpec& gen,
                                     const SolveOptions& options);

/// Banach iteration of xi -> {U^{t,0}[xi] mu} under the locality constraint
/// c1*c2*c3*K*T < 1 (LocalityError otherwise). Generator must be declared
/// FULL_PATH or ANTICIPATING.
SolveReport solve_local(const GeneratorSpec& gen, const DiscreteMeasure& mu,
                        const BackendConfig& backend, const SolveOptions& options);

/// Global solve for PATH_INDEPENDENT generators: chains local solves over
/// subintervals sized with safety factor 1/2 against the measured constants.
SolveReport solve_global_pathindep(const GeneratorSpec& gen,
                                   const DiscreteMeasure& mu,
                                   const BackendConfig& backend,
                                   const SolveOptions& options);

/// Picard iteration for ADAPTED generators; certifies the factorial
/// increment envelope and Gronwall initial-data sensitivity.
SolveReport solve_adapted(const GeneratorSpec& gen, const DiscreteMeasure& mu,
                          const BackendConfig& backend,
                          const SolveOptions& options);

/// Damped iteration xi <- (1-beta) xi + beta Phi(xi) for ANTICIPATING or
/// FULL_PATH generators; existence-only semantics, beta halves on residual
/// increase.
SolveReport solve_anticipating(const GeneratorSpec& gen,
                               const DiscreteMeasure& mu,
                               const BackendConfig& backend,
                               const SolveOptions& options);

namespace detail {

struct FixedPointOutcome {
  MeasurePath solution;
  std::vector<double> residuals;
  std::vector<double> betas;
  std::vector<double> iterate_moment_sup;  // p = 2, compactness evidence
  int iterations = 0;
  bool converged = false;
};

/// Shared engine. residual_n = dist(Phi(xi_{n-1}), xi_{n-1}); stops at the
/// first residual <= tol and returns Phi of the accepted iterate, so a
/// constant map converges with iterations = 1.
FixedPointOutcome damped_fixed_point(
    const std::function<MeasurePath(const MeasurePath&)>& phi,
    MeasurePath xi0, double tol, int cap, double beta0, bool adapt_beta,
    std::size_t bin_cap);

}  // namespace detail

}  // namespace kineq
