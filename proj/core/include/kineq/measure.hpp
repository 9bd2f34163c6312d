#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace kineq {

using Point = std::vector<double>;

double euclidean_distance(const Point& a, const Point& b);

/// Function classes of the dual pairings: sup-norm (C_inf), first/second
/// derivative norms (C1_inf, C2_inf) and the bounded-Lipschitz norm.
enum class FunctionClass { Sup, C1, C2, Lip };

std::string to_string(FunctionClass cls);
FunctionClass function_class_from_string(const std::string& name);

enum class MassKind { Probability, Signed };

/// Finitely supported measure on R^d: atoms plus weights. Construction
/// canonicalizes the representation: atoms are sorted lexicographically and
/// coincident atoms (within 1e-12, max-norm) are merged with weights summed.
class DiscreteMeasure {
 public:
  static constexpr double kMergeTolerance = 1e-12;
  static constexpr double kMassTolerance = 1e-12;

  DiscreteMeasure(std::vector<Point> atoms, std::vector<double> weights,
                  MassKind kind);

  static DiscreteMeasure dirac(Point x);
  static DiscreteMeasure probability(std::vector<Point> atoms,
                                     std::vector<double> weights);
  static DiscreteMeasure signed_measure(std::vector<Point> atoms,
                                        std::vector<double> weights);
  /// The canonical empty measure: one atom at the origin with weight 0.
  static DiscreteMeasure zero(int dim);

  int dim() const { return dim_; }
  std::size_t size() const { return atoms_.size(); }
  const std::vector<Point>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  MassKind kind() const { return kind_; }

  double total_mass() const;
  /// Weighted mean of the atoms, cached at construction.
  const Point& mean() const { return mean_; }

  bool operator==(const DiscreteMeasure& other) const;

  /// Weight-preserving grid binning onto at most max_atoms snap points.
  /// Atoms move by at most radius()/2 per coordinate; the radius used is
  /// returned through bin_radius when non-null. Measures binned with the
  /// same cap share snap points, which keeps transport LPs small.
  DiscreteMeasure coarsened(std::size_t max_atoms,
                            double* bin_radius = nullptr) const;

  std::string to_json() const;
  static DiscreteMeasure from_json(const std::string& text);

 private:
  int dim_;
  std::vector<Point> atoms_;
  std::vector<double> weights_;
  MassKind kind_;
  Point mean_;
};

/// Dual pairing (f, mu) = sum_i w_i f(x_i); exact for discrete measures.
/// Throws EvaluationError naming the atom if f is non-finite there.
double pairing(const std::function<double(const Point&)>& f,
               const DiscreteMeasure& mu);

/// p-th absolute moment of a probability measure, p > 0.
double moment(const DiscreteMeasure& mu, double p);

/// Uniform time grid on [0,T] carrying one measure per node. Generators
/// read it piecewise-constant on [t_k, t_{k+1}).
class MeasurePath {
 public:
  static constexpr double kGridTolerance = 1e-12;

  MeasurePath(double horizon, std::vector<DiscreteMeasure> measures,
              bool initial_locked = true);

  static MeasurePath constant(double horizon, std::size_t nodes,
                              const DiscreteMeasure& mu);

  double horizon() const { return horizon_; }
  double step() const { return step_; }
  std::size_t nodes() const { return measures_.size(); }
  int dim() const { return measures_.front().dim(); }
  bool initial_locked() const { return initial_locked_; }

  double time_at(std::size_t k) const { return step_ * static_cast<double>(k); }
  const DiscreteMeasure& at(std::size_t k) const { return measures_[k]; }
  void set_node(std::size_t k, DiscreteMeasure m);
  const std::vector<DiscreteMeasure>& measures() const { return measures_; }

  /// Index of the grid cell containing time t (piecewise-constant lookup).
  std::size_t floor_index(double t) const;

  /// int_0^tau mean1 ds for the piecewise-constant first-coordinate mean,
  /// from prefix sums built at construction.
  double mean1_integral(double tau) const;

  /// Node-wise coarsening (see DiscreteMeasure::coarsened).
  MeasurePath coarsened(std::size_t max_atoms) const;

  std::string to_json() const;
  static MeasurePath from_json(const std::string& text);
  /// CSV rows: t, x0..x{d-1}, weight.
  std::string to_csv() const;

 private:
  double horizon_;
  double step_;
  std::vector<DiscreteMeasure> measures_;
  bool initial_locked_;
  std::vector<double> mean1_prefix_;  // prefix integrals of the node means
};

/// Node-wise convex combination (1-a)*lhs + a*rhs on identical grids.
MeasurePath blend_paths(const MeasurePath& lhs, const MeasurePath& rhs,
                        double a, std::size_t bin_cap = 0);

}  // namespace kineq
