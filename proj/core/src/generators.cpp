#include "kineq/generators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "kineq/errors.hpp"
#include "kineq/flat_metric.hpp"
#include "kineq/rng.hpp"

namespace kineq {

namespace {

constexpr double kStateTolerance = 1e-9;

// 4-point Gauss-Legendre on [-1, 1].
constexpr double kGlNodes[4] = {-0.8611363115940526, -0.3399810435848563,
                                0.3399810435848563, 0.8611363115940526};
constexpr double kGlWeights[4] = {0.3478548451374538, 0.6521451548625461,
                                  0.6521451548625461, 0.3478548451374538};

bool near_point(const Point& a, const Point& b) {
  return euclidean_distance(a, b) <= kStateTolerance;
}

double norm2(const Point& x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return std::sqrt(s);
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::NonlinearLevy: return "nonlinear_levy";
    case Family::McKeanVlasov: return "mckean_vlasov";
    case Family::StableLike: return "stable_like";
    case Family::OrderAtMostOne: return "order_at_most_one";
    case Family::PureJump: return "pure_jump";
    case Family::FiniteStateJump: return "finite_state_jump";
  }
  return "?";
}

std::string to_string(DependenceMode mode) {
  switch (mode) {
    case DependenceMode::PathIndependent: return "path_independent";
    case DependenceMode::Adapted: return "adapted";
    case DependenceMode::Anticipating: return "anticipating";
    case DependenceMode::FullPath: return "full_path";
  }
  return "?";
}

Family family_from_string(const std::string& name) {
  if (name == "nonlinear_levy") return Family::NonlinearLevy;
  if (name == "mckean_vlasov") return Family::McKeanVlasov;
  if (name == "stable_like") return Family::StableLike;
  if (name == "order_at_most_one") return Family::OrderAtMostOne;
  if (name == "pure_jump") return Family::PureJump;
  if (name == "finite_state_jump") return Family::FiniteStateJump;
  throw ValidationError("unknown generator family '" + name + "'");
}

DependenceMode mode_from_string(const std::string& name) {
  if (name == "path_independent") return DependenceMode::PathIndependent;
  if (name == "adapted") return DependenceMode::Adapted;
  if (name == "anticipating") return DependenceMode::Anticipating;
  if (name == "full_path") return DependenceMode::FullPath;
  throw ValidationError("unknown dependence mode '" + name + "'");
}

PathView::PathView(const MeasurePath& path, DependenceMode mode, double now)
    : path_(&path), mode_(mode), now_(now),
      slack_(1e-9 * std::max(1.0, path.horizon())) {}

void PathView::check_visible(double s) const {
  switch (mode_) {
    case DependenceMode::FullPath:
      return;
    case DependenceMode::PathIndependent:
      if (std::abs(s - now_) <= slack_ + path_->step() * 1e-9) return;
      // A path-independent coefficient may only read mu_t.
      if (path_->floor_index(s) == path_->floor_index(now_)) return;
      break;
    case DependenceMode::Adapted:
      if (s <= now_ + slack_) return;
      break;
    case DependenceMode::Anticipating:
      if (s >= now_ - slack_) return;
      break;
  }
  std::ostringstream os;
  os << "visibility violation: " << to_string(mode_) << " coefficient at t="
     << now_ << " read the path at s=" << s;
  throw VisibilityError(os.str());
}

const DiscreteMeasure& PathView::measure_at(double s) const {
  check_visible(s);
  return path_->at(path_->floor_index(s));
}

double PathView::mean1(double s) const { return measure_at(s).mean()[0]; }

double PathView::occupancy(double s, const Point& state) const {
  const DiscreteMeasure& m = measure_at(s);
  double w = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (near_point(m.atoms()[i], state)) w += m.weights()[i];
  }
  return w;
}

double PathView::running_avg_mean1(double tau) const {
  if (tau <= slack_) return mean1(0.0);
  check_visible(0.0);
  check_visible(tau);
  return path_->mean1_integral(tau) / tau;
}

double PathView::running_avg_occupancy(double tau, const Point& state) const {
  if (tau <= slack_) return occupancy(0.0, state);
  check_visible(0.0);
  check_visible(tau);
  const double h = path_->step();
  const auto occ = [&](double s) {
    const DiscreteMeasure& m = path_->at(path_->floor_index(s));
    double w = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (near_point(m.atoms()[i], state)) w += m.weights()[i];
    }
    return w;
  };
  double integral = 0.0;
  double s = 0.0;
  while (s + h <= tau + MeasurePath::kGridTolerance) {
    integral += h * occ(s);
    s += h;
  }
  if (tau > s) integral += (tau - s) * occ(s);
  return integral / tau;
}

const std::vector<StableNode>& StableLikeData::nodes() const {
  if (!cache_) {
    cache_ = std::make_shared<const std::vector<StableNode>>(
        stable_quadrature_nodes(*this));
  }
  return *cache_;
}

std::vector<StableNode> stable_quadrature_nodes(const StableLikeData& data) {
  if (data.panels < 1) throw ValidationError("stable-like panels must be >= 1");
  const double eps = data.cutoff_fraction * data.truncation_radius;
  const double ratio = std::pow(data.truncation_radius / eps,
                                1.0 / static_cast<double>(data.panels));
  std::vector<StableNode> nodes;
  nodes.reserve(static_cast<std::size_t>(data.panels) * 4 * data.directions.size());
  for (std::size_t di = 0; di < data.directions.size(); ++di) {
    const auto& [dir, omega] = data.directions[di];
    double lo = eps;
    for (int p = 0; p < data.panels; ++p) {
      const double hi = (p + 1 == data.panels) ? data.truncation_radius : lo * ratio;
      const double mid = 0.5 * (lo + hi);
      const double half = 0.5 * (hi - lo);
      for (int q = 0; q < 4; ++q) {
        const double r = mid + half * kGlNodes[q];
        Point disp(dir.size());
        for (std::size_t k = 0; k < dir.size(); ++k) disp[k] = r * dir[k];
        nodes.push_back({std::move(disp), r, omega * half * kGlWeights[q], di});
      }
      lo = hi;
    }
  }
  return nodes;
}

FunctionClass domain_class(const GeneratorSpec& gen) {
  if (gen.has_diffusion() || gen.stable.has_value()) return FunctionClass::C2;
  if (gen.has_drift()) return FunctionClass::C1;
  for (const auto& ch : gen.jumps) {
    if (ch.compensated) return FunctionClass::C1;
  }
  return FunctionClass::Sup;
}

double apply(const GeneratorSpec& gen, double t, const PathView& view,
             const TestFunction& f, const Point& z) {
  if (static_cast<int>(z.size()) != gen.dim) {
    throw StructuralError("apply: point dimension mismatch");
  }
  const bool needs_grad = gen.has_drift() || gen.stable.has_value() ||
                          std::any_of(gen.jumps.begin(), gen.jumps.end(),
                                      [](const JumpChannel& c) { return c.compensated; });
  if (needs_grad && !f.has_gradient()) {
    throw CapabilityError("apply: generator needs a gradient of '" + f.label() + "'");
  }
  if (gen.has_diffusion() && !f.has_hessian()) {
    throw CapabilityError("apply: diffusion part needs a hessian of '" + f.label() + "'");
  }

  const auto d = static_cast<std::size_t>(gen.dim);
  double value = 0.0;
  Point grad;
  if (needs_grad) grad = f.gradient(z);

  if (gen.has_diffusion()) {
    const auto g = gen.diffusion(t, z, view);
    const auto hess = f.hessian(z);
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) acc += g[i * d + j] * hess[i * d + j];
    }
    value += 0.5 * acc;
  }
  if (gen.has_drift()) {
    const Point b = gen.drift(t, z, view);
    for (std::size_t k = 0; k < d; ++k) value += b[k] * grad[k];
  }
  const double fz = f(z);
  for (const auto& ch : gen.jumps) {
    const double rate = ch.rate(t, z, view);
    if (rate == 0.0) continue;
    Point target = z;
    for (std::size_t k = 0; k < d; ++k) target[k] += ch.displacement[k];
    double term = f(target) - fz;
    if (ch.compensated && norm2(ch.displacement) <= 1.0) {
      for (std::size_t k = 0; k < d; ++k) term -= grad[k] * ch.displacement[k];
    }
    value += rate * term;
  }
  if (gen.stable.has_value()) {
    const auto& data = *gen.stable;
    for (const auto& node : data.nodes()) {
      const auto& dir = data.directions[node.direction_index].first;
      const double a = data.intensity(t, z, dir);
      const double alpha = data.stability(t, z, dir);
      const double w = a * node.weight_factor / std::pow(node.radius, alpha + 1.0);
      Point target = z;
      for (std::size_t k = 0; k < d; ++k) target[k] += node.displacement[k];
      double term = f(target) - fz;
      if (node.radius <= 1.0) {
        for (std::size_t k = 0; k < d; ++k) term -= grad[k] * node.displacement[k];
      }
      value += w * term;
    }
  }
  if (!std::isfinite(value)) {
    throw NumericError("apply: non-finite generator value for '" + f.label() + "'");
  }
  return value;
}

double ExampleParams::get(const std::string& key, double fallback) const {
  auto it = num.find(key);
  return it == num.end() ? fallback : it->second;
}

std::string ExampleParams::get_str(const std::string& key,
                                   const std::string& fallback) const {
  auto it = str.find(key);
  return it == str.end() ? fallback : it->second;
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

GeneratorSpec make_two_state(const ExampleParams& p, bool anticipating) {
  GeneratorSpec gen;
  gen.dim = 1;
  gen.states = {{0.0}, {1.0}};
  const Point state0{0.0}, state1{1.0};

  if (anticipating) {
    const double base = p.get("lambda_base", 1.0);
    const double slope = p.get("lambda_slope", 1.0);
    const double lambda1 = p.get("lambda1", 2.0);
    require(base >= 0.0, "anticipating_2state: lambda_base must be >= 0, got " +
                             std::to_string(base));
    require(base + std::min(slope, 0.0) >= 0.0,
            "anticipating_2state: lambda_base + min(lambda_slope,0) must be >= 0");
    require(lambda1 >= 0.0, "anticipating_2state: lambda1 must be >= 0, got " +
                                std::to_string(lambda1));
    gen.family = Family::FiniteStateJump;
    gen.mode = DependenceMode::Anticipating;
    gen.label = "anticipating_2state";
    gen.jumps.push_back({[base, slope, state0, state1](double, const Point& z,
                                                       const PathView& view) {
                           if (!near_point(z, state0)) return 0.0;
                           return base + slope * view.occupancy(view.horizon(),
                                                                state1);
                         },
                         {1.0},
                         false});
    gen.jumps.push_back({[lambda1, state1](double, const Point& z,
                                           const PathView&) {
                           return near_point(z, state1) ? lambda1 : 0.0;
                         },
                         {-1.0},
                         false});
    return gen;
  }

  const double lambda0 = p.get("lambda0", 1.0);
  const double lambda1 = p.get("lambda1", 2.0);
  const double kappa = p.get("kappa", 0.0);
  const std::string coupling = p.get_str("coupling", "instant");
  require(lambda0 >= 0.0, "pure_jump_2state: lambda0 must be >= 0, got " +
                              std::to_string(lambda0));
  require(lambda1 >= 0.0, "pure_jump_2state: lambda1 must be >= 0, got " +
                              std::to_string(lambda1));
  require(lambda0 + std::min(kappa, 0.0) >= 0.0,
          "pure_jump_2state: lambda0 + min(kappa,0) must be >= 0");
  require(coupling == "instant" || coupling == "running_avg",
          "pure_jump_2state: coupling must be instant|running_avg, got '" +
              coupling + "'");

  gen.family = Family::PureJump;
  gen.label = "pure_jump_2state";
  const bool running = coupling == "running_avg";
  gen.mode = running ? DependenceMode::Adapted : DependenceMode::PathIndependent;
  const std::string mode_override = p.get_str("mode", "");
  if (!mode_override.empty()) gen.mode = mode_from_string(mode_override);

  gen.jumps.push_back(
      {[lambda0, kappa, running, state0, state1](double t, const Point& z,
                                                 const PathView& view) {
         if (!near_point(z, state0)) return 0.0;
         if (kappa == 0.0) return lambda0;
         const double occ = running ? view.running_avg_occupancy(t, state1)
                                    : view.occupancy(view.now(), state1);
         return lambda0 + kappa * occ;
       },
       {1.0},
       false});
  gen.jumps.push_back({[lambda1, state1](double, const Point& z,
                                         const PathView&) {
                         return near_point(z, state1) ? lambda1 : 0.0;
                       },
                       {-1.0},
                       false});
  return gen;
}

GeneratorSpec make_ou(const ExampleParams& p, bool adapted_avg) {
  GeneratorSpec gen;
  const int dim = static_cast<int>(p.get("dim", 1.0));
  require(dim >= 1, "mckean_vlasov_ou: dim must be >= 1");
  require(!adapted_avg || dim == 1, "adapted_avg_ou supports d=1 only");
  const double sigma = p.get("sigma", 1.0);
  require(sigma >= 0.0, "ou: sigma must be >= 0, got " + std::to_string(sigma));
  const std::string anchor = p.get_str("anchor", "instant");
  require(anchor == "instant" || anchor == "terminal",
          "mckean_vlasov_ou: anchor must be instant|terminal, got '" + anchor + "'");

  gen.family = Family::McKeanVlasov;
  gen.dim = dim;
  const auto d = static_cast<std::size_t>(dim);
  if (adapted_avg) {
    gen.mode = DependenceMode::Adapted;
    gen.label = "adapted_avg_ou";
    gen.drift = [](double t, const Point& z, const PathView& view) {
      return Point{-(z[0] - view.running_avg_mean1(t))};
    };
  } else if (anchor == "terminal") {
    gen.mode = DependenceMode::Anticipating;
    gen.label = "mckean_vlasov_ou(terminal)";
    gen.drift = [d](double, const Point& z, const PathView& view) {
      const Point m = view.terminal().mean();
      Point b(d);
      for (std::size_t k = 0; k < d; ++k) b[k] = -(z[k] - m[k]);
      return b;
    };
  } else {
    gen.mode = DependenceMode::PathIndependent;
    gen.label = "mckean_vlasov_ou";
    gen.drift = [d](double, const Point& z, const PathView& view) {
      const Point m = view.current().mean();
      Point b(d);
      for (std::size_t k = 0; k < d; ++k) b[k] = -(z[k] - m[k]);
      return b;
    };
  }
  if (sigma > 0.0) {
    const double g = sigma * sigma;
    gen.diffusion = [g, d](double, const Point&, const PathView&) {
      std::vector<double> m(d * d, 0.0);
      for (std::size_t k = 0; k < d; ++k) m[k * d + k] = g;
      return m;
    };
  }
  const std::string mode_override = p.get_str("mode", "");
  if (!mode_override.empty()) gen.mode = mode_from_string(mode_override);
  return gen;
}

GeneratorSpec make_stable(const ExampleParams& p) {
  const double alpha = p.get("alpha", 1.5);
  const double a = p.get("a", 1.0);
  const double k_trunc = p.get("k_trunc", 1.0);
  const double omega_total = p.get("omega_total", 1.0);
  const int panels = static_cast<int>(p.get("panels", 64.0));
  require(alpha > 0.0 && alpha < 2.0,
          "stable_like_1d: alpha must lie in (0,2), got " + std::to_string(alpha));
  require(a > 0.0, "stable_like_1d: a must be > 0, got " + std::to_string(a));
  require(k_trunc > 0.0, "stable_like_1d: k_trunc must be > 0, got " +
                             std::to_string(k_trunc));
  require(omega_total > 0.0, "stable_like_1d: omega_total must be > 0");
  require(panels >= 4, "stable_like_1d: panels must be >= 4");

  GeneratorSpec gen;
  gen.family = Family::StableLike;
  gen.mode = DependenceMode::PathIndependent;
  gen.dim = 1;
  gen.label = "stable_like_1d";
  const double mean_revert = p.get("mean_revert", 0.0);
  require(mean_revert >= 0.0, "stable_like_1d: mean_revert must be >= 0");
  if (mean_revert > 0.0) {
    gen.drift = [mean_revert](double, const Point& z, const PathView&) {
      return Point{-mean_revert * z[0]};
    };
  }
  StableLikeData data;
  data.intensity = [a](double, const Point&, const Point&) { return a; };
  data.stability = [alpha](double, const Point&, const Point&) { return alpha; };
  data.directions = {{{1.0}, 0.5 * omega_total}, {{-1.0}, 0.5 * omega_total}};
  data.truncation_radius = k_trunc;
  data.panels = panels;
  data.homogeneous = true;
  gen.stable = std::move(data);
  gen.stable->nodes();  // populate the shared cache before concurrent use
  const double eps = gen.stable->cutoff_fraction * k_trunc;
  gen.quadrature_truncation_bound =
      a * omega_total * std::pow(eps, 2.0 - alpha) / (2.0 - alpha);
  return gen;
}

GeneratorSpec make_order_one(const ExampleParams& p) {
  const double gamma = p.get("gamma", 0.5);
  const double kappa = p.get("kappa", 0.5);
  const double jump = p.get("jump_size", 0.5);
  const double rate_up = p.get("rate_up", 1.0);
  const double rate_down = p.get("rate_down", 1.0);
  require(gamma >= 0.0, "order_at_most_one: gamma must be >= 0");
  require(jump != 0.0, "order_at_most_one: jump_size must be nonzero");
  require(rate_up >= 0.0 && rate_down >= 0.0,
          "order_at_most_one: rates must be >= 0");

  GeneratorSpec gen;
  gen.family = Family::OrderAtMostOne;
  gen.mode = DependenceMode::PathIndependent;
  gen.dim = 1;
  gen.label = "order_at_most_one";
  gen.drift = [gamma, kappa](double, const Point& z, const PathView& view) {
    return Point{-gamma * z[0] + kappa * view.current().mean()[0]};
  };
  if (rate_up > 0.0) {
    gen.jumps.push_back(
        {[rate_up](double, const Point&, const PathView&) { return rate_up; },
         {jump},
         false});
  }
  if (rate_down > 0.0) {
    gen.jumps.push_back(
        {[rate_down](double, const Point&, const PathView&) { return rate_down; },
         {-jump},
         false});
  }
  return gen;
}

GeneratorSpec make_nonlinear_levy(const ExampleParams& p) {
  const double sigma = p.get("sigma", 0.5);
  const double beta = p.get("beta", 0.5);
  const double jump_rate = p.get("jump_rate", 1.0);
  const double jump_size = p.get("jump_size", 0.5);
  require(sigma >= 0.0, "nonlinear_levy: sigma must be >= 0");
  require(jump_rate >= 0.0, "nonlinear_levy: jump_rate must be >= 0");
  require(jump_size != 0.0, "nonlinear_levy: jump_size must be nonzero");

  GeneratorSpec gen;
  gen.family = Family::NonlinearLevy;
  gen.mode = DependenceMode::PathIndependent;
  gen.dim = 1;
  gen.label = "nonlinear_levy";
  gen.drift = [beta](double, const Point&, const PathView& view) {
    return Point{-beta * view.current().mean()[0]};
  };
  if (sigma > 0.0) {
    const double g = sigma * sigma;
    gen.diffusion = [g](double, const Point&, const PathView&) {
      return std::vector<double>{g};
    };
  }
  if (jump_rate > 0.0) {
    gen.jumps.push_back({[jump_rate](double, const Point&, const PathView&) {
                           return jump_rate;
                         },
                         {jump_size},
                         std::abs(jump_size) <= 1.0});
  }
  return gen;
}

}  // namespace

GeneratorSpec make_example(const std::string& name, const ExampleParams& params) {
  if (name == "pure_jump_2state") return make_two_state(params, false);
  if (name == "anticipating_2state") return make_two_state(params, true);
  if (name == "mckean_vlasov_ou") return make_ou(params, false);
  if (name == "adapted_avg_ou") return make_ou(params, true);
  if (name == "stable_like_1d") return make_stable(params);
  if (name == "order_at_most_one") return make_order_one(params);
  if (name == "nonlinear_levy") return make_nonlinear_levy(params);
  throw ValidationError("unknown example generator '" + name + "'");
}

namespace {

DiscreteMeasure random_probe_measure(const GeneratorSpec& gen,
                                     std::uint64_t seed, std::uint64_t& ctr) {
  if (!gen.states.empty()) {
    std::vector<double> w(gen.states.size());
    double sum = 0.0;
    for (auto& wi : w) {
      wi = -std::log(rng::uniform(seed, 0xabe1, ctr++));
      sum += wi;
    }
    for (auto& wi : w) wi /= sum;
    return DiscreteMeasure::probability(gen.states, w);
  }
  const int k = 1 + static_cast<int>(rng::bits(seed, 0xabe1, ctr++) % 3);
  std::vector<Point> atoms;
  std::vector<double> w;
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    Point x(static_cast<std::size_t>(gen.dim));
    for (auto& c : x) c = -4.0 + 8.0 * rng::uniform(seed, 0xabe1, ctr++);
    atoms.push_back(std::move(x));
    const double wi = -std::log(rng::uniform(seed, 0xabe1, ctr++));
    w.push_back(wi);
    sum += wi;
  }
  for (auto& wi : w) wi /= sum;
  return DiscreteMeasure::probability(std::move(atoms), std::move(w));
}

MeasurePath random_probe_path(const GeneratorSpec& gen, double horizon,
                              bool constant, std::uint64_t seed,
                              std::uint64_t& ctr) {
  constexpr std::size_t kNodes = 9;
  if (constant) {
    return MeasurePath::constant(horizon, kNodes,
                                 random_probe_measure(gen, seed, ctr));
  }
  std::vector<DiscreteMeasure> ms;
  ms.reserve(kNodes);
  for (std::size_t i = 0; i < kNodes; ++i) {
    ms.push_back(random_probe_measure(gen, seed, ctr));
  }
  return MeasurePath(horizon, std::move(ms));
}

std::vector<Point> probe_points(const GeneratorSpec& gen, const MeasurePath& xi,
                                const MeasurePath& eta, std::uint64_t seed,
                                std::uint64_t& ctr) {
  if (!gen.states.empty()) return gen.states;
  std::vector<Point> pts = xi.at(0).atoms();
  const auto& more = eta.at(0).atoms();
  pts.insert(pts.end(), more.begin(), more.end());
  for (int i = 0; i < 8; ++i) {
    Point x(static_cast<std::size_t>(gen.dim));
    for (auto& c : x) c = -4.0 + 8.0 * rng::uniform(seed, 0x90b0, ctr++);
    pts.push_back(std::move(x));
  }
  return pts;
}

}  // namespace

double lipschitz_probe(const GeneratorSpec& gen, double t, int trials,
                       std::uint64_t seed, const Dictionary& dict) {
  if (trials < 1) throw ValidationError("lipschitz_probe: trials must be >= 1");
  const double horizon = std::max(1.0, 1.25 * t + 0.25);
  std::uint64_t ctr = 0;
  double best = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const bool constant = trial % 2 == 0;
    double dist = 0.0;
    MeasurePath xi = random_probe_path(gen, horizon, constant, seed, ctr);
    MeasurePath eta = xi;
    int attempts = 0;
    do {
      if (++attempts > 100) {
        throw StructuralError("lipschitz_probe: could not draw distinct paths");
      }
      eta = random_probe_path(gen, horizon, constant, seed, ctr);
      dist = path_distance(xi, eta);
    } while (dist <= 1e-12);

    const PathView vxi(xi, gen.mode, t);
    const PathView veta(eta, gen.mode, t);
    const auto pts = probe_points(gen, xi, eta, seed, ctr);
    double num = 0.0;
    for (const auto& f : dict.functions) {
      for (const auto& z : pts) {
        num = std::max(num, std::abs(apply(gen, t, vxi, f, z) -
                                     apply(gen, t, veta, f, z)));
      }
    }
    best = std::max(best, num / dist);
  }
  return best;
}

double boundedness_probe(const GeneratorSpec& gen, double t, int trials,
                         std::uint64_t seed, const Dictionary& dict) {
  if (trials < 1) throw ValidationError("boundedness_probe: trials must be >= 1");
  const double horizon = std::max(1.0, 1.25 * t + 0.25);
  std::uint64_t ctr = 0;
  double best = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    MeasurePath xi = random_probe_path(gen, horizon, trial % 2 == 0, seed, ctr);
    const PathView view(xi, gen.mode, t);
    const auto pts = probe_points(gen, xi, xi, seed, ctr);
    for (const auto& f : dict.functions) {
      for (const auto& z : pts) {
        best = std::max(best, std::abs(apply(gen, t, view, f, z)));
      }
    }
  }
  return best;
}

double ebdd_probe(const GeneratorSpec& gen, int trials, std::uint64_t seed,
                  double p) {
  if (trials < 1) throw ValidationError("ebdd_probe: trials must be >= 1");
  if (!(p > 0.0 && p <= 2.0)) {
    throw ValidationError("ebdd_probe: p must lie in (0,2]");
  }
  std::uint64_t ctr = 0;
  double best = 0.0;
  std::vector<StableNode> nodes;
  if (gen.stable.has_value()) nodes = gen.stable->nodes();
  for (int trial = 0; trial < trials; ++trial) {
    MeasurePath xi = random_probe_path(gen, 1.0, trial % 2 == 0, seed, ctr);
    const double t = rng::uniform(seed, 0xebdd, ctr++);
    const PathView view(xi, gen.mode, t);
    auto pts = probe_points(gen, xi, xi, seed, ctr);
    for (const auto& z : pts) {
      if (gen.has_diffusion()) {
        const auto g = gen.diffusion(t, z, view);
        Eigen::Map<const Eigen::MatrixXd> m(g.data(), gen.dim, gen.dim);
        best = std::max(best, m.operatorNorm());
      }
      if (gen.has_drift()) best = std::max(best, norm2(gen.drift(t, z, view)));
      double mass = 0.0;
      for (const auto& ch : gen.jumps) {
        const double y = norm2(ch.displacement);
        mass += ch.rate(t, z, view) * std::min(y * y, std::pow(y, p));
      }
      for (const auto& node : nodes) {
        const auto& dir = gen.stable->directions[node.direction_index].first;
        const double a = gen.stable->intensity(t, z, dir);
        const double alpha = gen.stable->stability(t, z, dir);
        const double w = a * node.weight_factor / std::pow(node.radius, alpha + 1.0);
        mass += w * std::min(node.radius * node.radius, std::pow(node.radius, p));
      }
      best = std::max(best, mass);
    }
  }
  return best;
}

void validate_spec(const GeneratorSpec& gen, std::uint64_t seed) {
  if (gen.dim < 1) throw ValidationError("generator dimension must be >= 1");
  std::uint64_t ctr = 0;
  const auto d = static_cast<std::size_t>(gen.dim);
  for (const auto& ch : gen.jumps) {
    if (ch.displacement.size() != d) {
      throw StructuralError("jump channel displacement dimension mismatch");
    }
    if (norm2(ch.displacement) <= 0.0) {
      throw ValidationError("jump channel has zero displacement (nu({0}) must be 0)");
    }
  }
  if (gen.stable.has_value()) {
    if (gen.stable->directions.empty()) {
      throw ValidationError("stable-like part needs at least one direction");
    }
    if (!(gen.stable->truncation_radius > 0.0)) {
      throw ValidationError("stable-like truncation radius must be > 0");
    }
  }
  for (int trial = 0; trial < 8; ++trial) {
    MeasurePath xi = random_probe_path(gen, 1.0, trial % 2 == 0, seed, ctr);
    const double t = rng::uniform(seed, 0x5a1e, ctr++);
    const PathView view(xi, gen.mode, t);
    auto pts = probe_points(gen, xi, xi, seed, ctr);
    for (const auto& z : pts) {
      if (gen.has_diffusion()) {
        const auto g = gen.diffusion(t, z, view);
        Eigen::Map<const Eigen::MatrixXd> m(g.data(), gen.dim, gen.dim);
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
          throw ValidationError("diffusion matrix is not symmetric at a sample");
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        if (es.eigenvalues().minCoeff() < -1e-12) {
          throw ValidationError("diffusion matrix has eigenvalue < -1e-12 at a sample");
        }
      }
      for (const auto& ch : gen.jumps) {
        if (ch.rate(t, z, view) < 0.0) {
          throw ValidationError("negative jump rate at a sample");
        }
      }
      if (gen.stable.has_value()) {
        for (const auto& [dir, omega] : gen.stable->directions) {
          const double a = gen.stable->intensity(t, z, dir);
          const double alpha = gen.stable->stability(t, z, dir);
          if (!(a > 0.0)) throw ValidationError("stable-like intensity must be > 0");
          if (!(alpha > 0.0 && alpha < 2.0)) {
            throw ValidationError("stable-like alpha must lie in (0,2)");
          }
          if (!(omega >= 0.0)) throw ValidationError("stable-like omega must be >= 0");
        }
      }
    }
  }
}

}  // namespace kineq
