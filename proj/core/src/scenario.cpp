#include "kineq/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "kineq/errors.hpp"
#include "kineq/flat_metric.hpp"
#include "kineq/rng.hpp"
#include "json.hpp"

namespace kineq {

namespace {

namespace fs = std::filesystem;

void check_keys(const toml_lite::Table& table, const std::string& section,
                const std::set<std::string>& allowed) {
  for (const auto& [key, value] : table) {
    if (!allowed.count(key)) {
      throw ValidationError("unknown key '" + key + "' in [" + section + "]");
    }
  }
}

const toml_lite::Table& need_section(const toml_lite::Document& doc,
                                     const std::string& name) {
  auto it = doc.find(name);
  if (it == doc.end()) {
    throw ValidationError("missing [" + name + "] section");
  }
  return it->second;
}

double get_num(const toml_lite::Table& t, const std::string& key, double fb) {
  auto it = t.find(key);
  return it == t.end() ? fb : it->second.as_double();
}

std::string get_str(const toml_lite::Table& t, const std::string& key,
                    const std::string& fb) {
  auto it = t.find(key);
  return it == t.end() ? fb : it->second.as_string();
}

std::vector<double> get_array(const toml_lite::Table& t, const std::string& key) {
  std::vector<double> out;
  auto it = t.find(key);
  if (it == t.end()) return out;
  for (const auto& v : it->second.as_array()) out.push_back(v.as_double());
  return out;
}

const std::set<std::string> kGeneratorKeys = {
    "example", "lambda0", "lambda1", "kappa", "coupling", "mode",
    "lambda_base", "lambda_slope", "sigma", "dim", "anchor", "alpha",
    "a", "k_trunc", "omega_total", "panels", "mean_revert", "gamma",
    "jump_size", "rate_up", "rate_down", "beta", "jump_rate"};

}  // namespace

ScenarioConfig parse_scenario(const toml_lite::Document& doc,
                              const std::string& fallback_name) {
  for (const auto& [section, table] : doc) {
    static const std::set<std::string> sections = {
        "scenario", "generator", "initial", "backend",
        "solver",   "diagnostics", "mfg",   "output"};
    if (!section.empty() && !sections.count(section)) {
      throw ValidationError("unknown section [" + section + "]");
    }
    if (section.empty() && !table.empty()) {
      throw ValidationError("top-level keys are not allowed; use sections");
    }
  }

  ScenarioConfig config;
  const auto& scenario = need_section(doc, "scenario");
  check_keys(scenario, "scenario", {"name", "solver"});
  config.name = get_str(scenario, "name", fallback_name);
  config.solver = get_str(scenario, "solver", "");
  static const std::set<std::string> solvers = {"local", "global", "adapted",
                                                "anticipating", "mfg"};
  if (!solvers.count(config.solver)) {
    throw ValidationError(
        "scenario.solver must be local|global|adapted|anticipating|mfg, got '" +
        config.solver + "'");
  }

  if (config.solver != "mfg") {
    const auto& gen = need_section(doc, "generator");
    check_keys(gen, "generator", kGeneratorKeys);
    config.generator_example = get_str(gen, "example", "");
    if (config.generator_example.empty()) {
      throw ValidationError("generator.example is required");
    }
    for (const auto& [key, value] : gen) {
      if (key == "example") continue;
      if (value.is_string()) {
        config.generator_params.str[key] = value.as_string();
      } else {
        config.generator_params.num[key] = value.as_double();
      }
    }
  } else {
    const auto& m = need_section(doc, "mfg");
    check_keys(m, "mfg",
               {"gamma", "control_cost", "u_max", "control_points",
                "base_rate", "coupling"});
    CrowdMfgParams params;
    params.gamma = get_num(m, "gamma", params.gamma);
    params.control_cost = get_num(m, "control_cost", params.control_cost);
    params.u_max = get_num(m, "u_max", params.u_max);
    params.control_points =
        static_cast<int>(get_num(m, "control_points", params.control_points));
    params.base_rate = get_num(m, "base_rate", params.base_rate);
    params.coupling = get_str(m, "coupling", params.coupling);
    config.mfg = params;
  }

  const auto& initial = need_section(doc, "initial");
  check_keys(initial, "initial",
             {"kind", "point", "p1", "atoms", "weights", "mean", "std",
              "samples", "seed"});
  config.initial.kind = get_str(initial, "kind", "dirac");
  static const std::set<std::string> kinds = {"dirac", "two_state", "atoms",
                                              "gaussian_sample"};
  if (!kinds.count(config.initial.kind)) {
    throw ValidationError(
        "initial.kind must be dirac|two_state|atoms|gaussian_sample");
  }
  if (auto pt = get_array(initial, "point"); !pt.empty()) {
    config.initial.point = pt;
  }
  config.initial.p1 = get_num(initial, "p1", 0.0);
  config.initial.atoms = get_array(initial, "atoms");
  config.initial.weights = get_array(initial, "weights");
  config.initial.mean = get_num(initial, "mean", 0.0);
  config.initial.stddev = get_num(initial, "std", 1.0);
  config.initial.samples =
      static_cast<std::size_t>(get_num(initial, "samples", 10000));
  config.initial.seed = static_cast<std::uint64_t>(get_num(initial, "seed", 5));

  const auto& backend = need_section(doc, "backend");
  check_keys(backend, "backend",
             {"kind", "h_in", "particles", "seed", "bin_cap"});
  config.backend.kind =
      backend_kind_from_string(get_str(backend, "kind", "finite_state"));
  config.backend.h_in = get_num(backend, "h_in", 1e-3);
  config.backend.particles =
      static_cast<std::size_t>(get_num(backend, "particles", 0));
  config.backend.seed = static_cast<std::uint64_t>(get_num(backend, "seed", 1));
  config.backend.bin_cap =
      static_cast<std::size_t>(get_num(backend, "bin_cap", 512));

  const auto& solver = need_section(doc, "solver");
  check_keys(solver, "solver",
             {"T", "h", "tol", "beta", "max_iterations", "seed",
              "probe_trials", "dictionary_size"});
  config.options.horizon = get_num(solver, "T", 1.0);
  config.options.grid_step = get_num(solver, "h", 0.01);
  config.options.tolerance = get_num(solver, "tol", 1e-6);
  config.options.beta = get_num(solver, "beta", 0.5);
  config.options.max_iterations =
      static_cast<int>(get_num(solver, "max_iterations", 0));
  config.options.seed = static_cast<std::uint64_t>(get_num(solver, "seed", 1));
  config.options.probe_trials =
      static_cast<int>(get_num(solver, "probe_trials", 16));
  config.options.dictionary_size =
      static_cast<int>(get_num(solver, "dictionary_size", 16));

  if (auto it = doc.find("diagnostics"); it != doc.end()) {
    check_keys(it->second, "diagnostics",
               {"certificates", "dictionary_class", "dictionary_size",
                "dictionary_seed", "moment_p"});
    if (auto c = it->second.find("certificates"); c != it->second.end()) {
      for (const auto& v : c->second.as_array()) {
        config.certificates.push_back(v.as_string());
      }
    }
    static const std::set<std::string> certs = {"weak_residual", "holder",
                                                "moment", "sensitivity"};
    for (const auto& c : config.certificates) {
      if (!certs.count(c)) {
        throw ValidationError(
            "diagnostics.certificates entries must be "
            "weak_residual|holder|moment|sensitivity, got '" + c + "'");
      }
    }
    config.dictionary_class = function_class_from_string(
        get_str(it->second, "dictionary_class", "sup"));
    config.dictionary_size =
        static_cast<int>(get_num(it->second, "dictionary_size", 16));
    config.dictionary_seed =
        static_cast<std::uint64_t>(get_num(it->second, "dictionary_seed", 7));
    config.moment_p = get_num(it->second, "moment_p", 2.0);
  }

  if (auto it = doc.find("output"); it != doc.end()) {
    check_keys(it->second, "output",
               {"report", "solution_csv", "certificates_csv"});
    config.report_path = get_str(it->second, "report", "");
    config.solution_csv = get_str(it->second, "solution_csv", "");
    config.certificates_csv = get_str(it->second, "certificates_csv", "");
  }
  if (config.report_path.empty()) config.report_path = config.name + ".report.json";
  if (config.solution_csv.empty()) config.solution_csv = config.name + ".solution.csv";
  if (config.certificates_csv.empty()) {
    config.certificates_csv = config.name + ".certificates.csv";
  }
  config.canonical_echo = toml_lite::serialize(doc);
  return config;
}

ScenarioConfig load_scenario(const std::string& path) {
  const auto doc = toml_lite::parse_file(path);
  return parse_scenario(doc, fs::path(path).stem().string());
}

DiscreteMeasure build_initial_measure(const ScenarioConfig& config,
                                      const GeneratorSpec& gen) {
  const auto& init = config.initial;
  if (init.kind == "dirac") {
    if (static_cast<int>(init.point.size()) != gen.dim) {
      throw ValidationError("initial.point dimension does not match the generator");
    }
    return DiscreteMeasure::dirac(init.point);
  }
  if (init.kind == "two_state") {
    if (gen.states.size() != 2) {
      throw ValidationError("initial.kind=two_state needs a two-state generator");
    }
    if (init.p1 < 0.0 || init.p1 > 1.0) {
      throw ValidationError("initial.p1 must lie in [0, 1]");
    }
    return DiscreteMeasure::probability(gen.states, {1.0 - init.p1, init.p1});
  }
  if (init.kind == "atoms") {
    if (gen.dim != 1) {
      throw ValidationError("initial.kind=atoms supports d=1");
    }
    if (init.atoms.empty() || init.atoms.size() != init.weights.size()) {
      throw ValidationError("initial.atoms and initial.weights must match");
    }
    std::vector<Point> atoms;
    for (double a : init.atoms) atoms.push_back({a});
    return DiscreteMeasure::probability(atoms, init.weights);
  }
  // gaussian_sample
  if (gen.dim != 1) {
    throw ValidationError("initial.kind=gaussian_sample supports d=1");
  }
  if (init.samples < 2) throw ValidationError("initial.samples must be >= 2");
  std::vector<Point> atoms;
  std::vector<double> weights(init.samples, 1.0 / static_cast<double>(init.samples));
  atoms.reserve(init.samples);
  for (std::size_t i = 0; i < init.samples; ++i) {
    atoms.push_back({init.mean + init.stddev * rng::gaussian(init.seed, 0x6a55, i)});
  }
  return DiscreteMeasure::probability(std::move(atoms), std::move(weights));
}

namespace {

void cross_validate(const ScenarioConfig& config, const GeneratorSpec* gen) {
  if (config.solver == "mfg") {
    if (config.backend.kind != BackendKind::FiniteState) {
      throw ValidationError("solver=mfg requires backend.kind=finite_state");
    }
    return;
  }
  const DependenceMode mode = gen->mode;
  const auto bad = [&](const std::string& expected) {
    throw ValidationError("solver=" + config.solver + " requires a " + expected +
                          " generator, but '" + gen->label + "' declares mode " +
                          to_string(mode));
  };
  if (config.solver == "local" && mode != DependenceMode::FullPath &&
      mode != DependenceMode::Anticipating) {
    bad("full_path or anticipating");
  }
  if (config.solver == "global" && mode != DependenceMode::PathIndependent) {
    bad("path_independent");
  }
  if (config.solver == "adapted" && mode != DependenceMode::Adapted) {
    bad("adapted");
  }
  if (config.solver == "anticipating" && mode != DependenceMode::Anticipating &&
      mode != DependenceMode::FullPath) {
    bad("anticipating or full_path");
  }
  if (config.backend.kind == BackendKind::FiniteState && !gen->is_jump_only()) {
    throw ValidationError(
        "backend.kind=finite_state requires a pure jump family; '" +
        gen->label + "' has diffusion, drift or a stable-like part");
  }
  if (config.backend.kind == BackendKind::FiniteState && gen->states.empty()) {
    throw ValidationError(
        "backend.kind=finite_state needs a generator with an embedded state list");
  }
}

void append_diagnostics(SolveReport& report, const ScenarioConfig& config,
                        const GeneratorSpec* gen, const DiscreteMeasure& mu,
                        const BackendConfig& backend) {
  const auto want = [&](const std::string& name) {
    return std::find(config.certificates.begin(), config.certificates.end(),
                     name) != config.certificates.end();
  };
  if (config.certificates.empty() || config.solver == "mfg") return;

  const Dictionary dict =
      build_dictionary(config.dictionary_class, gen->dim, config.dictionary_size,
                       config.dictionary_seed);
  const double noise_hat =
      noise_intensity_probe(*gen, config.options.probe_trials, config.options.seed);
  const double p_hat = ebdd_probe(*gen, config.options.probe_trials,
                                  config.options.seed, config.moment_p);
  report.metrics["ebdd_P"] = p_hat;

  if (want("weak_residual")) {
    const double measured = weak_residual(report.solution, *gen, dict);
    const double bound = weak_residual_bound(
        report.constants.c1, config.options.grid_step, backend, noise_hat,
        gen->quadrature_truncation_bound, report.metrics["bin_radius"]);
    report.certificates.push_back(make_certificate(
        "WEAK_RESIDUAL", measured, bound, 0.0,
        "dictionary class " + to_string(config.dictionary_class) + ", size " +
            std::to_string(config.dictionary_size)));
  }
  if (want("holder")) {
    const double measured = holder_estimate(report.solution);
    const double bound = std::sqrt(8.0 * std::max(p_hat, 1e-12)) *
                         std::exp(std::min(4.0 * p_hat * config.options.horizon, 350.0));
    report.metrics["holder_estimate"] = measured;
    report.certificates.push_back(make_certificate(
        "HOLDER", measured, bound, 0.0,
        "dyadic-quotient estimate; confirms boundedness only", true));
  }
  if (want("moment")) {
    report.certificates.push_back(
        moment_certificate(report.solution, config.moment_p, p_hat));
  }
  if (want("sensitivity")) {
    const SolverHandle handle = [&](const DiscreteMeasure& m0) {
      if (config.solver == "local") return solve_local(*gen, m0, backend, config.options);
      if (config.solver == "global") {
        return solve_global_pathindep(*gen, m0, backend, config.options);
      }
      if (config.solver == "adapted") return solve_adapted(*gen, m0, backend, config.options);
      return solve_anticipating(*gen, m0, backend, config.options);
    };
    std::vector<Point> atoms = mu.atoms();
    std::vector<double> weights = mu.weights();
    for (double& w : weights) w *= 0.9;
    atoms.push_back(mu.atoms().front());
    weights.push_back(0.1);
    const DiscreteMeasure eta(std::move(atoms), std::move(weights), mu.kind());
    report.certificates.push_back(
        sensitivity_certificate(handle, mu, eta, config.options.tolerance));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".")
                                                    : path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

std::string certificates_csv_text(const SolveReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "name,measured,bound,slack,verdict,context\n";
  for (const auto& c : report.certificates) {
    std::string ctx = c.context;
    std::replace(ctx.begin(), ctx.end(), ',', ';');
    os << c.name << "," << c.measured << "," << c.bound << "," << c.slack << ","
       << to_string(c.verdict) << "," << ctx << "\n";
  }
  return os.str();
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config,
                            const std::string& out_dir) {
  std::optional<GeneratorSpec> gen;
  if (config.solver != "mfg") {
    gen = make_example(config.generator_example, config.generator_params);
    validate_spec(*gen, config.options.seed);
  }
  cross_validate(config, gen ? &*gen : nullptr);

  BackendConfig backend = config.backend;
  if (backend.kind == BackendKind::FiniteState && backend.states.empty()) {
    backend.states = config.solver == "mfg"
                         ? make_crowd_mfg(*config.mfg).states
                         : gen->states;
  }

  SolveReport report = [&] {
    if (config.solver == "mfg") {
      const MfgProblem problem = make_crowd_mfg(*config.mfg);
      const DiscreteMeasure mu = [&] {
        ScenarioConfig tmp = config;
        GeneratorSpec pseudo;
        pseudo.dim = 1;
        pseudo.states = problem.states;
        return build_initial_measure(tmp, pseudo);
      }();
      return solve_mfg(problem, mu, backend, config.options);
    }
    const DiscreteMeasure mu = build_initial_measure(config, *gen);
    if (config.solver == "local") return solve_local(*gen, mu, backend, config.options);
    if (config.solver == "global") {
      return solve_global_pathindep(*gen, mu, backend, config.options);
    }
    if (config.solver == "adapted") return solve_adapted(*gen, mu, backend, config.options);
    return solve_anticipating(*gen, mu, backend, config.options);
  }();

  if (config.solver != "mfg") {
    const DiscreteMeasure mu = build_initial_measure(config, *gen);
    append_diagnostics(report, config, &*gen, mu, backend);
  }
  report.config_echo = config.canonical_echo;

  const fs::path base(out_dir);
  write_text(base / config.report_path, report.to_json());
  write_text(base / config.solution_csv, report.solution.to_csv());
  write_text(base / config.certificates_csv, certificates_csv_text(report));

  ScenarioResult result{0, report};
  if (report.status == SolveStatus::MaxIter) {
    result.exit_code = 2;
  } else if (!report.all_certificates_pass()) {
    result.exit_code = 3;
  }
  return result;
}

std::vector<std::string> table_fields() {
  return {"iterations", "final_residual", "contraction_ratio", "c1",
          "product",    "holder_estimate", "status",           "certificates"};
}

namespace {

std::string extract_field(const nlohmann::json& j, const std::string& field) {
  std::ostringstream os;
  os.precision(17);
  if (field == "iterations") {
    os << j.at("iterations").get<int>();
  } else if (field == "final_residual") {
    const auto& trace = j.at("residual_trace");
    os << (trace.empty() ? 0.0 : trace.back().get<double>());
  } else if (field == "contraction_ratio") {
    double best = 0.0;
    for (const auto& r : j.at("contraction_ratios")) {
      best = std::max(best, r.get<double>());
    }
    os << best;
  } else if (field == "c1") {
    os << j.at("constants").at("c1").get<double>();
  } else if (field == "product") {
    os << j.at("constants").at("product").get<double>();
  } else if (field == "holder_estimate") {
    const auto& metrics = j.at("metrics");
    if (!metrics.contains("holder_estimate")) {
      throw ValidationError("report has no holder_estimate metric");
    }
    os << metrics.at("holder_estimate").get<double>();
  } else if (field == "status") {
    os << j.at("status").get<std::string>();
  } else if (field == "certificates") {
    std::size_t pass = 0, total = 0;
    for (const auto& c : j.at("certificates")) {
      ++total;
      if (c.at("verdict").get<std::string>() != "fail") ++pass;
    }
    os << pass << "/" << total;
  } else {
    std::string names;
    for (const auto& f : table_fields()) names += " " + f;
    throw ValidationError("unknown table field '" + field + "'; available:" + names);
  }
  return os.str();
}

}  // namespace

std::string table_csv(const std::vector<std::string>& config_paths,
                      const std::string& field, const std::string& out_dir) {
  if (config_paths.empty()) {
    throw ValidationError("table needs at least one scenario config");
  }
  // Validate the field name before any expensive work.
  {
    const auto fields = table_fields();
    if (std::find(fields.begin(), fields.end(), field) == fields.end()) {
      std::string names;
      for (const auto& f : fields) names += " " + f;
      throw ValidationError("unknown table field '" + field + "'; available:" + names);
    }
  }
  std::ostringstream os;
  os << "scenario," << field << "\n";
  for (const auto& path : config_paths) {
    const ScenarioConfig config = load_scenario(path);
    const fs::path report_path = fs::path(out_dir) / config.report_path;
    nlohmann::json j;
    if (fs::exists(report_path)) {
      std::ifstream in(report_path);
      in >> j;
    } else {
      const ScenarioResult result = run_scenario(config, out_dir);
      j = nlohmann::json::parse(result.report.to_json());
    }
    os << config.name << "," << extract_field(j, field) << "\n";
  }
  return os.str();
}

}  // namespace kineq
