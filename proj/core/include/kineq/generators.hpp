#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kineq/measure.hpp"
#include "kineq/test_functions.hpp"

namespace kineq {

enum class Family {
  NonlinearLevy,
  McKeanVlasov,
  StableLike,
  OrderAtMostOne,
  PureJump,
  FiniteStateJump,
};

/// Which part of the measure path the coefficients may read.
enum class DependenceMode { PathIndependent, Adapted, Anticipating, FullPath };

std::string to_string(Family family);
std::string to_string(DependenceMode mode);
Family family_from_string(const std::string& name);
DependenceMode mode_from_string(const std::string& name);

/// Restricted view of a measure path handed to generator coefficients.
/// Reads outside the dependence window raise VisibilityError; lookups are
/// piecewise-constant on the grid.
class PathView {
 public:
  PathView(const MeasurePath& path, DependenceMode mode, double now);

  double now() const { return now_; }
  double horizon() const { return path_->horizon(); }
  DependenceMode mode() const { return mode_; }
  const MeasurePath& path() const { return *path_; }

  const DiscreteMeasure& measure_at(double s) const;
  const DiscreteMeasure& current() const { return measure_at(now_); }
  const DiscreteMeasure& terminal() const { return measure_at(horizon()); }

  /// First-coordinate mean at time s.
  double mean1(double s) const;
  /// Total weight within 1e-9 of the given state point at time s.
  double occupancy(double s, const Point& state) const;
  /// (1/tau) * int_0^tau mean1 ds, left-Riemann over the grid cells;
  /// continuously extended to mean1(0) as tau -> 0.
  double running_avg_mean1(double tau) const;
  double running_avg_occupancy(double tau, const Point& state) const;

 private:
  void check_visible(double s) const;

  const MeasurePath* path_;
  DependenceMode mode_;
  double now_;
  double slack_;
};

/// One jump channel of the Levy measure: rate(t, z, view) >= 0 toward the
/// fixed displacement; compensated channels subtract (grad f, y) for |y| <= 1.
struct JumpChannel {
  std::function<double(double, const Point&, const PathView&)> rate;
  Point displacement;
  bool compensated = false;
};

/// Fixed radial quadrature node of the stable-like integral: geometric
/// panels with Gauss-Legendre weights, shared by apply() and the particle
/// backend so both discretize the same generator.
struct StableNode {
  Point displacement;   // radius * direction
  double radius;
  double weight_factor; // omega * panel weight (intensity and radius power applied later)
  std::size_t direction_index;
};

/// Stable-like jump part: per unit direction s with weight omega,
/// a(t,x,s) |y|^{-alpha(t,x,s)-1} dy on (eps_q, K_trunc].
struct StableLikeData {
  std::function<double(double, const Point&, const Point&)> intensity;
  std::function<double(double, const Point&, const Point&)> stability;
  std::vector<std::pair<Point, double>> directions;  // unit direction, omega weight
  double truncation_radius = 1.0;
  int panels = 64;
  double cutoff_fraction = 1e-4;  // eps_q = cutoff_fraction * truncation_radius
  bool homogeneous = true;        // a, alpha independent of (t, x)

  /// Quadrature nodes, computed once and shared across copies. First touch
  /// is not thread-safe; make_example and validate_spec populate it.
  const std::vector<StableNode>& nodes() const;

 private:
  mutable std::shared_ptr<const std::vector<StableNode>> cache_;
};

std::vector<StableNode> stable_quadrature_nodes(const StableLikeData& data);

/// Coefficients (G, b, nu) of a Levy-Khintchine family A[t, {mu.}] with a
/// declared path-dependence mode. Empty function slots mean identically 0.
struct GeneratorSpec {
  Family family = Family::PureJump;
  DependenceMode mode = DependenceMode::PathIndependent;
  int dim = 1;
  std::string label;

  std::function<std::vector<double>(double, const Point&, const PathView&)>
      diffusion;  // row-major d x d, symmetric nonnegative
  std::function<Point(double, const Point&, const PathView&)> drift;
  std::vector<JumpChannel> jumps;
  std::optional<StableLikeData> stable;

  /// Embedded state list for jump-on-state families (finite-state backend,
  /// probe measures); empty otherwise.
  std::vector<Point> states;

  /// Compensated mass dropped below the quadrature cutoff (reported).
  double quadrature_truncation_bound = 0.0;

  bool has_diffusion() const { return static_cast<bool>(diffusion); }
  bool has_drift() const { return static_cast<bool>(drift); }
  bool is_jump_only() const {
    return !has_diffusion() && !has_drift() && !stable.has_value();
  }
};

/// The domain class D the family generates on (per the example families).
FunctionClass domain_class(const GeneratorSpec& gen);

/// A[t, {mu.}] f (z): diffusion and drift from supplied derivatives, finite
/// jump channels summed exactly, stable-like part by the fixed quadrature.
double apply(const GeneratorSpec& gen, double t, const PathView& view,
             const TestFunction& f, const Point& z);

/// Structural invariants at sampled arguments: G symmetric with eigenvalues
/// >= -1e-12, rates >= 0, no mass at 0. Throws ValidationError.
void validate_spec(const GeneratorSpec& gen, std::uint64_t seed = 0);

struct ExampleParams {
  std::map<std::string, double> num;
  std::map<std::string, std::string> str;

  double get(const std::string& key, double fallback) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
};

/// Named example families:
///   nonlinear_levy, mckean_vlasov_ou, stable_like_1d, order_at_most_one,
///   pure_jump_2state, anticipating_2state, adapted_avg_ou
GeneratorSpec make_example(const std::string& name, const ExampleParams& params);

/// Empirical lower estimate of the Lipschitz constant c1 of Eq-style bound:
/// max over random path pairs of sup_{f in dict} ||A[t,xi]f - A[t,eta]f||_sup
/// divided by path_distance(xi, eta). Deterministic in seed.
double lipschitz_probe(const GeneratorSpec& gen, double t, int trials,
                       std::uint64_t seed, const Dictionary& dict);

/// Empirical lower estimate of sup ||A[t,xi]||_{D->B}: max |apply| over the
/// dictionary, sample points and random paths.
double boundedness_probe(const GeneratorSpec& gen, double t, int trials,
                         std::uint64_t seed, const Dictionary& dict);

/// P-estimate of the moment-boundedness condition: max over samples of
/// |G|, |b| and int min(|y|^2, |y|^p) nu(dy).
double ebdd_probe(const GeneratorSpec& gen, int trials, std::uint64_t seed,
                  double p);

}  // namespace kineq
