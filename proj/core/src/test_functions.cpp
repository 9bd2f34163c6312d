#include "kineq/test_functions.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "kineq/errors.hpp"
#include "kineq/rng.hpp"

namespace kineq {

namespace {

// max |tanh''| = 4 / (3 sqrt(3)), attained at tanh(u) = 1/sqrt(3).
constexpr double kTanhCurvMax = 0.76980035891950107;

double sq_norm(const Point& x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return s;
}

}  // namespace

TestFunction::TestFunction(std::string label, int dim, Evaluator eval)
    : label_(std::move(label)), dim_(dim), eval_(std::move(eval)) {
  if (dim_ < 1) throw StructuralError("test function dimension must be >= 1");
}

TestFunction& TestFunction::with_gradient(GradientFn g) {
  grad_ = std::move(g);
  return *this;
}

TestFunction& TestFunction::with_hessian(HessianFn h) {
  hess_ = std::move(h);
  return *this;
}

TestFunction& TestFunction::with_norm(FunctionClass cls, double bound) {
  norms_[cls] = bound;
  return *this;
}

Point TestFunction::gradient(const Point& x) const {
  if (!grad_) {
    throw CapabilityError("test function '" + label_ + "' has no gradient");
  }
  return grad_(x);
}

std::vector<double> TestFunction::hessian(const Point& x) const {
  if (!hess_) {
    throw CapabilityError("test function '" + label_ + "' has no hessian");
  }
  return hess_(x);
}

double TestFunction::certified_norm(FunctionClass cls) const {
  auto it = norms_.find(cls);
  if (it == norms_.end()) {
    throw CapabilityError("test function '" + label_ + "' has no certified " +
                          to_string(cls) + " norm");
  }
  return it->second;
}

TestFunction TestFunction::negated() const {
  TestFunction out("-" + label_, dim_,
                   [e = eval_](const Point& x) { return -e(x); });
  if (grad_) {
    out.with_gradient([g = grad_](const Point& x) {
      Point v = g(x);
      for (double& c : v) c = -c;
      return v;
    });
  }
  if (hess_) {
    out.with_hessian([h = hess_](const Point& x) {
      auto m = h(x);
      for (double& c : m) c = -c;
      return m;
    });
  }
  out.norms_ = norms_;
  return out;
}

TestFunction TestFunction::constant(int dim, double value) {
  const auto d = static_cast<std::size_t>(dim);
  TestFunction f("const(" + std::to_string(value) + ")", dim,
                 [value](const Point&) { return value; });
  f.with_gradient([d](const Point&) { return Point(d, 0.0); });
  f.with_hessian([d](const Point&) { return std::vector<double>(d * d, 0.0); });
  f.with_norm(FunctionClass::Sup, std::abs(value))
      .with_norm(FunctionClass::C1, 0.0)
      .with_norm(FunctionClass::C2, 0.0)
      .with_norm(FunctionClass::Lip, std::abs(value));
  return f;
}

TestFunction TestFunction::coordinate(int dim, int axis) {
  const auto d = static_cast<std::size_t>(dim);
  const auto a = static_cast<std::size_t>(axis);
  TestFunction f("x" + std::to_string(axis), dim,
                 [a](const Point& x) { return x[a]; });
  f.with_gradient([d, a](const Point&) {
    Point g(d, 0.0);
    g[a] = 1.0;
    return g;
  });
  f.with_hessian([d](const Point&) { return std::vector<double>(d * d, 0.0); });
  f.with_norm(FunctionClass::C1, 1.0).with_norm(FunctionClass::C2, 1.0);
  return f;
}

TestFunction TestFunction::tanh_axis(int dim, int axis, double width,
                                     double amplitude) {
  if (width <= 0.0) throw ValidationError("tanh width must be positive");
  const auto d = static_cast<std::size_t>(dim);
  const auto a = static_cast<std::size_t>(axis);
  const double A = amplitude, c = width;
  TestFunction f("tanh(x" + std::to_string(axis) + "/" + std::to_string(c) +
                     ")*" + std::to_string(A),
                 dim, [A, c, a](const Point& x) { return A * std::tanh(x[a] / c); });
  f.with_gradient([A, c, d, a](const Point& x) {
    Point g(d, 0.0);
    const double t = std::tanh(x[a] / c);
    g[a] = A * (1.0 - t * t) / c;
    return g;
  });
  f.with_hessian([A, c, d, a](const Point& x) {
    std::vector<double> h(d * d, 0.0);
    const double t = std::tanh(x[a] / c);
    h[a * d + a] = A * (-2.0 * t * (1.0 - t * t)) / (c * c);
    return h;
  });
  f.with_norm(FunctionClass::Sup, A)
      .with_norm(FunctionClass::C1, A / c)
      .with_norm(FunctionClass::C2, A / c + A * kTanhCurvMax / (c * c))
      .with_norm(FunctionClass::Lip, A * (1.0 + 1.0 / c));
  return f;
}

TestFunction TestFunction::gauss_bump(Point center, double scale,
                                      double amplitude) {
  if (scale <= 0.0) throw ValidationError("bump scale must be positive");
  const int dim = static_cast<int>(center.size());
  const auto d = center.size();
  const double A = amplitude, s = scale;
  // sup|grad| = sqrt(2/s) e^{-1/2}; hessian spectral radius peaks at 2/s.
  const double lip = A * std::sqrt(2.0 / s) * std::exp(-0.5);
  const double curv = A * 2.0 / s;
  TestFunction f("bump(s=" + std::to_string(s) + ")*" + std::to_string(A), dim,
                 [A, s, center](const Point& x) {
                   double r2 = 0.0;
                   for (std::size_t k = 0; k < x.size(); ++k) {
                     const double dk = x[k] - center[k];
                     r2 += dk * dk;
                   }
                   return A * std::exp(-r2 / s);
                 });
  f.with_gradient([A, s, center, d](const Point& x) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double dk = x[k] - center[k];
      r2 += dk * dk;
    }
    const double v = A * std::exp(-r2 / s);
    Point g(d);
    for (std::size_t k = 0; k < d; ++k) {
      g[k] = -2.0 * (x[k] - center[k]) / s * v;
    }
    return g;
  });
  f.with_hessian([A, s, center, d](const Point& x) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double dk = x[k] - center[k];
      r2 += dk * dk;
    }
    const double v = A * std::exp(-r2 / s);
    std::vector<double> h(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double di = x[i] - center[i];
        const double dj = x[j] - center[j];
        h[i * d + j] = (4.0 * di * dj / (s * s)) * v;
        if (i == j) h[i * d + j] -= 2.0 / s * v;
      }
    }
    return h;
  });
  f.with_norm(FunctionClass::Sup, A)
      .with_norm(FunctionClass::C1, lip)
      .with_norm(FunctionClass::C2, lip + curv)
      .with_norm(FunctionClass::Lip, A + lip);
  return f;
}

TestFunction TestFunction::indicator_near(Point center, double radius) {
  const int dim = static_cast<int>(center.size());
  TestFunction f("ind(r=" + std::to_string(radius) + ")", dim,
                 [center, radius](const Point& x) {
                   return euclidean_distance(x, center) <= radius ? 1.0 : 0.0;
                 });
  f.with_norm(FunctionClass::Sup, 1.0);
  return f;
}

Dictionary build_dictionary(FunctionClass cls, int dim, int size,
                            std::uint64_t seed) {
  if (dim < 1) throw StructuralError("dictionary dimension must be >= 1");
  if (size < 4) throw ValidationError("dictionary size must be >= 4");
  const int base_count = (size + 1) / 2;

  // Scale so the class norm is <= 1; C1/C2/Lip additionally stay inside the
  // flat unit ball (sup + Lip <= 1), keeping dual estimates below
  // flat_distance.
  const auto amplitude = [cls](double sup, double lip, double curv) {
    double class_norm = sup;
    switch (cls) {
      case FunctionClass::Sup: class_norm = sup; break;
      case FunctionClass::C1: class_norm = lip; break;
      case FunctionClass::C2: class_norm = lip + curv; break;
      case FunctionClass::Lip: class_norm = sup + lip; break;
    }
    if (cls == FunctionClass::Sup) return 1.0 / class_norm;
    return 1.0 / std::max(class_norm, sup + lip);
  };

  std::vector<TestFunction> base;
  base.reserve(static_cast<std::size_t>(base_count));
  const double widths[] = {0.05, 0.5, 2.0};
  int axis = 0, widx = 0;
  while (static_cast<int>(base.size()) < base_count &&
         static_cast<int>(base.size()) < 3 * dim) {
    const double c = widths[widx];
    base.push_back(TestFunction::tanh_axis(
        dim, axis, c, amplitude(1.0, 1.0 / c, kTanhCurvMax / (c * c))));
    if (++axis == dim) {
      axis = 0;
      ++widx;
    }
  }
  std::uint64_t counter = 0;
  while (static_cast<int>(base.size()) < base_count) {
    Point center(static_cast<std::size_t>(dim));
    for (auto& ck : center) {
      ck = -4.0 + 8.0 * rng::uniform(seed, 0x7e57, counter++);
    }
    const double s = std::exp(std::log(0.25) +
                              (std::log(4.0) - std::log(0.25)) *
                                  rng::uniform(seed, 0x7e57, counter++));
    const double lip_unit = std::sqrt(2.0 / s) * std::exp(-0.5);
    base.push_back(TestFunction::gauss_bump(center, s,
                                            amplitude(1.0, lip_unit, 2.0 / s)));
  }

  // Odd sizes round up by one function so the negation closure holds.
  Dictionary dict{cls, dim, seed, {}};
  dict.functions.reserve(2 * base.size());
  for (const auto& f : base) {
    dict.functions.push_back(f);
    dict.functions.push_back(f.negated());
  }
  return dict;
}

double dual_norm_estimate(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                          const Dictionary& dict) {
  if (mu.dim() != nu.dim()) {
    throw StructuralError("dual_norm_estimate: dimension mismatch");
  }
  if (mu.dim() != dict.dim) {
    throw StructuralError("dual_norm_estimate: dictionary dimension mismatch");
  }
  double best = 0.0;
  for (const auto& f : dict.functions) {
    const auto eval = [&f](const Point& x) { return f(x); };
    best = std::max(best, std::abs(pairing(eval, mu) - pairing(eval, nu)));
  }
  return best;
}

double norm_estimate(const TestFunction& f, FunctionClass cls,
                     double box_radius, int mesh_points) {
  const int dim = f.dim();
  const auto d = static_cast<std::size_t>(dim);
  const int per_axis =
      dim == 1 ? mesh_points
               : std::max(2, static_cast<int>(std::round(std::pow(
                                 static_cast<double>(mesh_points),
                                 1.0 / static_cast<double>(dim)))));
  std::size_t total = 1;
  for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(per_axis);

  const double fd_step = 1e-5 * std::max(1.0, box_radius / 10.0);
  const auto grad_at = [&](const Point& x) {
    if (f.has_gradient()) return f.gradient(x);
    Point g(d);
    for (std::size_t k = 0; k < d; ++k) {
      Point xp = x, xm = x;
      xp[k] += fd_step;
      xm[k] -= fd_step;
      g[k] = (f(xp) - f(xm)) / (2.0 * fd_step);
    }
    return g;
  };

  // Lip is a sum of separate sups; Sup/C1/C2 are pointwise sups.
  double best = 0.0;
  double sup_f = 0.0, sup_grad = 0.0;
  Point x(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (std::size_t k = 0; k < d; ++k) {
      const auto i = rem % static_cast<std::size_t>(per_axis);
      rem /= static_cast<std::size_t>(per_axis);
      x[k] = -box_radius + 2.0 * box_radius * static_cast<double>(i) /
                               static_cast<double>(per_axis - 1);
    }
    switch (cls) {
      case FunctionClass::Sup:
        best = std::max(best, std::abs(f(x)));
        break;
      case FunctionClass::C1: {
        const Point g = grad_at(x);
        best = std::max(best, std::sqrt(sq_norm(g)));
        break;
      }
      case FunctionClass::C2: {
        const Point g = grad_at(x);
        double hnorm = 0.0;
        if (f.has_hessian()) {
          const auto h = f.hessian(x);
          Eigen::Map<const Eigen::MatrixXd> m(h.data(), dim, dim);
          hnorm = m.operatorNorm();
        } else {
          for (std::size_t k = 0; k < d; ++k) {
            Point xp = x, xm = x;
            xp[k] += fd_step;
            xm[k] -= fd_step;
            hnorm = std::max(hnorm, std::abs((f(xp) - 2.0 * f(x) + f(xm)) /
                                             (fd_step * fd_step)));
          }
        }
        best = std::max(best, std::sqrt(sq_norm(g)) + hnorm);
        break;
      }
      case FunctionClass::Lip: {
        const Point g = grad_at(x);
        sup_f = std::max(sup_f, std::abs(f(x)));
        sup_grad = std::max(sup_grad, std::sqrt(sq_norm(g)));
        break;
      }
    }
  }
  if (cls == FunctionClass::Lip) return sup_f + sup_grad;
  return best;
}

}  // namespace kineq
