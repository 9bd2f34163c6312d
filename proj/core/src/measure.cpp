#include "kineq/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kineq/errors.hpp"
#include "json.hpp"

namespace kineq {

namespace {

using ordered_json = nlohmann::ordered_json;

bool lex_less(const Point& a, const Point& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

bool coincident(const Point& a, const Point& b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

}  // namespace

double euclidean_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::string to_string(FunctionClass cls) {
  switch (cls) {
    case FunctionClass::Sup: return "sup";
    case FunctionClass::C1: return "c1";
    case FunctionClass::C2: return "c2";
    case FunctionClass::Lip: return "lip";
  }
  return "?";
}

FunctionClass function_class_from_string(const std::string& name) {
  if (name == "sup") return FunctionClass::Sup;
  if (name == "c1") return FunctionClass::C1;
  if (name == "c2") return FunctionClass::C2;
  if (name == "lip") return FunctionClass::Lip;
  throw ValidationError("unknown function class '" + name +
                        "' (expected sup|c1|c2|lip)");
}

DiscreteMeasure::DiscreteMeasure(std::vector<Point> atoms,
                                 std::vector<double> weights, MassKind kind)
    : kind_(kind) {
  if (atoms.empty() || atoms.size() != weights.size()) {
    throw StructuralError("measure needs equally many atoms and weights (>= 1)");
  }
  dim_ = static_cast<int>(atoms.front().size());
  if (dim_ < 1) throw StructuralError("measure atoms must have dimension >= 1");
  for (const auto& a : atoms) {
    if (static_cast<int>(a.size()) != dim_) {
      throw StructuralError("measure atoms have mixed dimensions");
    }
    for (double c : a) {
      if (!std::isfinite(c)) throw NumericError("non-finite atom coordinate");
    }
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw NumericError("non-finite weight");
  }

  // Canonical form: sort lexicographically, merge coincident atoms.
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return lex_less(atoms[i], atoms[j]);
  });
  atoms_.reserve(atoms.size());
  weights_.reserve(atoms.size());
  for (std::size_t idx : order) {
    if (!atoms_.empty() && coincident(atoms_.back(), atoms[idx], kMergeTolerance)) {
      weights_.back() += weights[idx];
    } else {
      atoms_.push_back(std::move(atoms[idx]));
      weights_.push_back(weights[idx]);
    }
  }

  if (kind_ == MassKind::Probability) {
    double sum = 0.0;
    for (double& w : weights_) {
      if (w < 0.0) {
        if (w < -1e-9) {
          throw ValidationError("probability measure has negative weight " +
                                std::to_string(w));
        }
        w = 0.0;  // integrator roundoff
      }
      sum += w;
    }
    if (std::abs(sum - 1.0) > kMassTolerance) {
      throw ValidationError("probability weights sum to " +
                            std::to_string(sum) + ", expected 1");
    }
  }

  mean_.assign(static_cast<std::size_t>(dim_), 0.0);
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    for (int k = 0; k < dim_; ++k) {
      mean_[static_cast<std::size_t>(k)] +=
          weights_[i] * atoms_[i][static_cast<std::size_t>(k)];
    }
  }
}

DiscreteMeasure DiscreteMeasure::dirac(Point x) {
  std::vector<Point> a{std::move(x)};
  return DiscreteMeasure(std::move(a), {1.0}, MassKind::Probability);
}

DiscreteMeasure DiscreteMeasure::probability(std::vector<Point> atoms,
                                             std::vector<double> weights) {
  return DiscreteMeasure(std::move(atoms), std::move(weights),
                         MassKind::Probability);
}

DiscreteMeasure DiscreteMeasure::signed_measure(std::vector<Point> atoms,
                                                std::vector<double> weights) {
  return DiscreteMeasure(std::move(atoms), std::move(weights), MassKind::Signed);
}

DiscreteMeasure DiscreteMeasure::zero(int dim) {
  return DiscreteMeasure({Point(static_cast<std::size_t>(dim), 0.0)}, {0.0},
                         MassKind::Signed);
}

double DiscreteMeasure::total_mass() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

bool DiscreteMeasure::operator==(const DiscreteMeasure& other) const {
  return kind_ == other.kind_ && atoms_ == other.atoms_ &&
         weights_ == other.weights_;
}

DiscreteMeasure DiscreteMeasure::coarsened(std::size_t max_atoms,
                                           double* bin_radius) const {
  if (bin_radius) *bin_radius = 0.0;
  if (max_atoms == 0 || atoms_.size() <= max_atoms) return *this;

  double span = 0.0;
  for (int k = 0; k < dim_; ++k) {
    double lo = atoms_.front()[k], hi = lo;
    for (const auto& a : atoms_) {
      lo = std::min(lo, a[k]);
      hi = std::max(hi, a[k]);
    }
    span = std::max(span, hi - lo);
  }
  if (span == 0.0) return *this;

  const double per_dim = std::pow(static_cast<double>(max_atoms),
                                  1.0 / static_cast<double>(dim_));
  // Power-of-two radius anchored at 0 so measures bin onto shared grids.
  double radius = std::exp2(std::ceil(std::log2(span / per_dim)));
  for (;;) {
    std::vector<Point> snapped(atoms_.size());
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      Point p(static_cast<std::size_t>(dim_));
      for (int k = 0; k < dim_; ++k) {
        p[static_cast<std::size_t>(k)] = radius * std::round(atoms_[i][k] / radius);
      }
      snapped[i] = std::move(p);
    }
    DiscreteMeasure binned(snapped, weights_, kind_);
    if (binned.size() <= max_atoms) {
      if (bin_radius) *bin_radius = radius;
      return binned;
    }
    radius *= 2.0;
  }
}

std::string DiscreteMeasure::to_json() const {
  ordered_json j;
  j["d"] = dim_;
  j["kind"] = kind_ == MassKind::Probability ? "probability" : "signed";
  j["atoms"] = atoms_;
  j["weights"] = weights_;
  return j.dump();
}

DiscreteMeasure DiscreteMeasure::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto kind = j.at("kind").get<std::string>() == "probability"
                        ? MassKind::Probability
                        : MassKind::Signed;
  return DiscreteMeasure(j.at("atoms").get<std::vector<Point>>(),
                         j.at("weights").get<std::vector<double>>(), kind);
}

double pairing(const std::function<double(const Point&)>& f,
               const DiscreteMeasure& mu) {
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double v = f(mu.atoms()[i]);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "test function non-finite at atom " << i << " = (";
      for (std::size_t k = 0; k < mu.atoms()[i].size(); ++k) {
        os << (k ? "," : "") << mu.atoms()[i][k];
      }
      os << ")";
      throw EvaluationError(os.str());
    }
    acc += mu.weights()[i] * v;
  }
  return acc;
}

double moment(const DiscreteMeasure& mu, double p) {
  if (mu.kind() != MassKind::Probability) {
    throw ValidationError("moment() supports probability measures only");
  }
  if (!(p > 0.0)) throw ValidationError("moment order p must be positive");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double norm2 = 0.0;
    for (double c : mu.atoms()[i]) norm2 += c * c;
    acc += mu.weights()[i] * std::pow(std::sqrt(norm2), p);
  }
  return acc;
}

MeasurePath::MeasurePath(double horizon, std::vector<DiscreteMeasure> measures,
                         bool initial_locked)
    : horizon_(horizon),
      measures_(std::move(measures)),
      initial_locked_(initial_locked) {
  if (measures_.size() < 2) {
    throw StructuralError("measure path needs at least 2 grid nodes");
  }
  if (!(horizon_ > 0.0)) throw ValidationError("path horizon must be positive");
  step_ = horizon_ / static_cast<double>(measures_.size() - 1);
  const int d = measures_.front().dim();
  const MassKind kind = measures_.front().kind();
  for (const auto& m : measures_) {
    if (m.dim() != d) throw StructuralError("path measures have mixed dimensions");
    if (m.kind() != kind) throw StructuralError("path measures have mixed mass kinds");
  }
  mean1_prefix_.resize(measures_.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < measures_.size(); ++k) {
    mean1_prefix_[k] = acc;
    acc += step_ * measures_[k].mean()[0];
  }
}

void MeasurePath::set_node(std::size_t k, DiscreteMeasure m) {
  if (m.dim() != dim() || m.kind() != measures_.front().kind()) {
    throw StructuralError("set_node: measure does not match the path");
  }
  measures_[k] = std::move(m);
  double acc = 0.0;
  for (std::size_t j = 0; j < measures_.size(); ++j) {
    mean1_prefix_[j] = acc;
    acc += step_ * measures_[j].mean()[0];
  }
}

double MeasurePath::mean1_integral(double tau) const {
  if (tau <= 0.0) return 0.0;
  tau = std::min(tau, horizon_);
  const std::size_t k = floor_index(tau);
  return mean1_prefix_[k] +
         (tau - step_ * static_cast<double>(k)) * measures_[k].mean()[0];
}

MeasurePath MeasurePath::constant(double horizon, std::size_t nodes,
                                  const DiscreteMeasure& mu) {
  return MeasurePath(horizon, std::vector<DiscreteMeasure>(nodes, mu));
}

std::size_t MeasurePath::floor_index(double t) const {
  if (t <= 0.0) return 0;
  if (t >= horizon_ - kGridTolerance) return measures_.size() - 1;
  auto k = static_cast<std::size_t>(std::floor(t / step_ + kGridTolerance));
  return std::min(k, measures_.size() - 1);
}

MeasurePath MeasurePath::coarsened(std::size_t max_atoms) const {
  std::vector<DiscreteMeasure> out;
  out.reserve(measures_.size());
  for (const auto& m : measures_) out.push_back(m.coarsened(max_atoms));
  return MeasurePath(horizon_, std::move(out), initial_locked_);
}

std::string MeasurePath::to_json() const {
  ordered_json j;
  j["T"] = horizon_;
  j["h"] = step_;
  auto arr = ordered_json::array();
  for (const auto& m : measures_) arr.push_back(ordered_json::parse(m.to_json()));
  j["measures"] = std::move(arr);
  return j.dump();
}

MeasurePath MeasurePath::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  std::vector<DiscreteMeasure> ms;
  for (const auto& m : j.at("measures")) {
    ms.push_back(DiscreteMeasure::from_json(m.dump()));
  }
  return MeasurePath(j.at("T").get<double>(), std::move(ms));
}

std::string MeasurePath::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "t";
  for (int k = 0; k < dim(); ++k) os << ",x" << k;
  os << ",weight\n";
  for (std::size_t n = 0; n < measures_.size(); ++n) {
    const auto& m = measures_[n];
    for (std::size_t i = 0; i < m.size(); ++i) {
      os << time_at(n);
      for (int k = 0; k < dim(); ++k) os << "," << m.atoms()[i][static_cast<std::size_t>(k)];
      os << "," << m.weights()[i] << "\n";
    }
  }
  return os.str();
}

MeasurePath blend_paths(const MeasurePath& lhs, const MeasurePath& rhs,
                        double a, std::size_t bin_cap) {
  if (lhs.nodes() != rhs.nodes() ||
      std::abs(lhs.horizon() - rhs.horizon()) > MeasurePath::kGridTolerance) {
    throw StructuralError("blend_paths: grid mismatch");
  }
  std::vector<DiscreteMeasure> out;
  out.reserve(lhs.nodes());
  for (std::size_t k = 0; k < lhs.nodes(); ++k) {
    const auto& m0 = lhs.at(k);
    const auto& m1 = rhs.at(k);
    std::vector<Point> atoms = m0.atoms();
    std::vector<double> weights;
    weights.reserve(m0.size() + m1.size());
    for (double w : m0.weights()) weights.push_back((1.0 - a) * w);
    atoms.insert(atoms.end(), m1.atoms().begin(), m1.atoms().end());
    for (double w : m1.weights()) weights.push_back(a * w);
    DiscreteMeasure blended(std::move(atoms), std::move(weights), m0.kind());
    out.push_back(bin_cap ? blended.coarsened(bin_cap) : blended);
  }
  return MeasurePath(lhs.horizon(), std::move(out), lhs.initial_locked());
}

}  // namespace kineq
