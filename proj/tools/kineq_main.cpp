#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kineq/errors.hpp"
#include "kineq/scenario.hpp"

namespace {

std::string default_out_dir() {
  if (const char* env = std::getenv("KINEQ_OUT_DIR")) return env;
  return ".";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kineq — solvers and certificates for path-dependent kinetic "
               "equations in measure space"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = default_out_dir();
  std::int64_t seed_override = -1;
  auto* run = app.add_subcommand("run", "run one scenario config");
  run->add_option("config", config_path, "scenario TOML file")->required();
  run->add_option("--out", out_dir, "output directory (default $KINEQ_OUT_DIR or .)");
  run->add_option("--seed", seed_override, "override backend and probe seeds");

  std::vector<std::string> table_configs;
  std::string field;
  std::string table_out = default_out_dir();
  auto* table = app.add_subcommand("table", "one CSV row per scenario");
  table->add_option("configs", table_configs, "scenario TOML files")->required();
  table->add_option("--field", field, "report field to tabulate")->required();
  table->add_option("--out", table_out, "report directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      kineq::ScenarioConfig config = kineq::load_scenario(config_path);
      if (seed_override >= 0) {
        config.backend.seed = static_cast<std::uint64_t>(seed_override);
        config.options.seed = static_cast<std::uint64_t>(seed_override);
      }
      const auto result = kineq::run_scenario(config, out_dir);
      for (const auto& c : result.report.certificates) {
        std::cout << c.name << ": " << kineq::to_string(c.verdict)
                  << " (measured=" << c.measured << ", bound=" << c.bound << ")\n";
      }
      std::cout << config.name << ": " << kineq::to_string(result.report.status)
                << " after " << result.report.iterations << " iterations, residual "
                << result.report.final_residual() << "\n";
      return result.exit_code;
    }
    std::cout << kineq::table_csv(table_configs, field, table_out);
    return 0;
  } catch (const kineq::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const kineq::LocalityError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const kineq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
