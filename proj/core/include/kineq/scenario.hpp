#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kineq/diagnostics.hpp"
#include "kineq/fixpoint.hpp"
#include "kineq/mfg.hpp"
#include "kineq/toml_lite.hpp"

namespace kineq {

/// Parsed and cross-validated scenario file. Unknown keys and
/// solver/dependence-mode mismatches are rejected at load time.
struct ScenarioConfig {
  std::string name;
  std::string solver;  // local | global | adapted | anticipating | mfg

  std::string generator_example;
  ExampleParams generator_params;

  struct Initial {
    std::string kind;  // dirac | two_state | atoms | gaussian_sample
    Point point{0.0};
    double p1 = 0.0;
    std::vector<double> atoms;    // 1-d explicit support
    std::vector<double> weights;
    double mean = 0.0;
    double stddev = 1.0;
    std::size_t samples = 10000;
    std::uint64_t seed = 5;
  } initial;

  BackendConfig backend;
  SolveOptions options;

  std::vector<std::string> certificates;  // weak_residual | holder | moment | sensitivity
  FunctionClass dictionary_class = FunctionClass::Sup;
  int dictionary_size = 16;
  std::uint64_t dictionary_seed = 7;
  double moment_p = 2.0;

  std::optional<CrowdMfgParams> mfg;

  std::string report_path;        // default <name>.report.json
  std::string solution_csv;       // default <name>.solution.csv
  std::string certificates_csv;   // default <name>.certificates.csv

  std::string canonical_echo;  // serialized parsed config
};

ScenarioConfig parse_scenario(const toml_lite::Document& doc,
                              const std::string& fallback_name);
ScenarioConfig load_scenario(const std::string& path);

DiscreteMeasure build_initial_measure(const ScenarioConfig& config,
                                      const GeneratorSpec& gen);

struct ScenarioResult {
  int exit_code = 0;  // 0 ok, 2 solver NON_CONVERGED, 3 certificate failure
  SolveReport report;
};

/// Solve + diagnostics + artifact emission. Throws ValidationError (exit 1
/// at the CLI) on config problems; returns exit 2 on MAX_ITER and 3 when a
/// requested certificate fails.
ScenarioResult run_scenario(const ScenarioConfig& config,
                            const std::string& out_dir);

/// One row per scenario with the requested field. Reads an existing report
/// in out_dir when present, otherwise runs the scenario.
std::string table_csv(const std::vector<std::string>& config_paths,
                      const std::string& field, const std::string& out_dir);

std::vector<std::string> table_fields();

}  // namespace kineq
