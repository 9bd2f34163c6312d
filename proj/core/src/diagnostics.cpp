#include "kineq/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "kineq/errors.hpp"
#include "kineq/flat_metric.hpp"
#include "kineq/rng.hpp"

namespace kineq {

double weak_residual(const MeasurePath& path, const GeneratorSpec& gen,
                     const Dictionary& dict) {
  if (path.nodes() < 3) {
    throw StructuralError("weak_residual needs at least 3 grid nodes");
  }
  const double h = path.step();
  const std::size_t n = path.nodes();
  double worst = 0.0;
  for (const auto& f : dict.functions) {
    const auto eval = [&f](const Point& x) { return f(x); };
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = pairing(eval, path.at(k));
    for (std::size_t k = 0; k < n; ++k) {
      double deriv;
      if (k == 0) {
        deriv = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h);
      } else if (k + 1 == n) {
        deriv = (3.0 * g[n - 1] - 4.0 * g[n - 2] + g[n - 3]) / (2.0 * h);
      } else {
        deriv = (g[k + 1] - g[k - 1]) / (2.0 * h);
      }
      const double t = path.time_at(k);
      const PathView view(path, gen.mode, t);
      const DiscreteMeasure& mu = path.at(k);
      double rhs = 0.0;
      for (std::size_t i = 0; i < mu.size(); ++i) {
        rhs += mu.weights()[i] * apply(gen, t, view, f, mu.atoms()[i]);
      }
      worst = std::max(worst, std::abs(deriv - rhs));
    }
  }
  return worst;
}

double weak_residual_bound(double c1, double grid_step,
                           const BackendConfig& backend, double noise_hat,
                           double quadrature_truncation, double bin_radius) {
  double bound = 2.0 * c1 * c1 * c1 * grid_step * grid_step + 1e-10;
  bound += quadrature_truncation;
  bound += bin_radius / grid_step;
  if (backend.kind == BackendKind::Particle) {
    const auto n = static_cast<double>(backend.particles);
    bound += 6.0 * std::sqrt(noise_hat / (2.0 * grid_step * n)) +
             6.0 * (1.0 + c1) * std::sqrt(std::max(noise_hat, noise_hat * noise_hat) / n);
  } else {
    bound += 10.0 * std::pow(backend.h_in * std::max(c1, 1.0), 4.0) / grid_step;
  }
  return bound;
}

double noise_intensity_probe(const GeneratorSpec& gen, int trials,
                             std::uint64_t seed) {
  // Like the EBDD probe, but only the fluctuation-generating parts.
  if (trials < 1) throw ValidationError("noise_intensity_probe: trials >= 1");
  std::uint64_t ctr = 0;
  double best = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<DiscreteMeasure> nodes;
    DiscreteMeasure probe = [&] {
      if (!gen.states.empty()) {
        std::vector<double> w(gen.states.size());
        double sum = 0.0;
        for (auto& wi : w) {
          wi = -std::log(rng::uniform(seed, 0x401e, ctr++));
          sum += wi;
        }
        for (auto& wi : w) wi /= sum;
        return DiscreteMeasure::probability(gen.states, w);
      }
      std::vector<Point> atoms;
      std::vector<double> w;
      double sum = 0.0;
      for (int i = 0; i < 3; ++i) {
        Point x(static_cast<std::size_t>(gen.dim));
        for (auto& c : x) c = -4.0 + 8.0 * rng::uniform(seed, 0x401e, ctr++);
        atoms.push_back(std::move(x));
        const double wi = -std::log(rng::uniform(seed, 0x401e, ctr++));
        w.push_back(wi);
        sum += wi;
      }
      for (auto& wi : w) wi /= sum;
      return DiscreteMeasure::probability(std::move(atoms), std::move(w));
    }();
    const MeasurePath path = MeasurePath::constant(1.0, 5, probe);
    const double t = rng::uniform(seed, 0x401e, ctr++);
    const PathView view(path, gen.mode, t);
    std::vector<Point> pts = gen.states.empty() ? probe.atoms() : gen.states;
    for (const auto& z : pts) {
      double v = 0.0;
      if (gen.has_diffusion()) {
        const auto g = gen.diffusion(t, z, view);
        Eigen::Map<const Eigen::MatrixXd> m(g.data(), gen.dim, gen.dim);
        v += m.operatorNorm();
      }
      for (const auto& ch : gen.jumps) {
        double y2 = 0.0;
        for (double c : ch.displacement) y2 += c * c;
        v += ch.rate(t, z, view) * y2;
      }
      if (gen.stable.has_value()) {
        for (const auto& node : gen.stable->nodes()) {
          const auto& dir = gen.stable->directions[node.direction_index].first;
          const double a = gen.stable->intensity(t, z, dir);
          const double alpha = gen.stable->stability(t, z, dir);
          const double w =
              a * node.weight_factor / std::pow(node.radius, alpha + 1.0);
          v += w * node.radius * node.radius;
        }
      }
      best = std::max(best, v);
    }
  }
  return best;
}

double holder_estimate(const MeasurePath& path) {
  if (path.nodes() < 2) {
    throw StructuralError("holder_estimate needs at least 2 nodes");
  }
  const double h = path.step();
  const std::size_t n = path.nodes();
  double best = 0.0;
  for (std::size_t gap = 1; gap < n; gap *= 2) {
    const std::size_t anchors = n - gap;
    const std::size_t stride = std::max<std::size_t>(1, anchors / 64);
    for (std::size_t k = 0; k < anchors; k += stride) {
      const double d = flat_distance(path.at(k), path.at(k + gap));
      best = std::max(best, d / std::sqrt(static_cast<double>(gap) * h));
    }
  }
  return best;
}

CertificateRecord moment_certificate(const MeasurePath& path, double p,
                                     double p_probe) {
  if (path.at(0).kind() != MassKind::Probability) {
    throw ValidationError("moment_certificate supports probability paths only");
  }
  if (!(p > 0.0 && p <= 2.0)) {
    throw ValidationError("moment_certificate needs p in (0, 2]");
  }
  double sup = 0.0;
  for (std::size_t k = 0; k < path.nodes(); ++k) {
    sup = std::max(sup, moment(path.at(k), p));
  }
  const double p_mu = moment(path.at(0), p);
  constexpr double kSchemeKappa = 8.0;  // calibrated against two-state/OU oracles
  const double chat = kSchemeKappa * p_probe;
  const double bound =
      std::exp(std::min(chat * path.horizon(), 700.0)) * (1.0 + p_mu);
  std::ostringstream ctx;
  ctx << "sup_t moment(mu_t, " << p << ") vs e^{8*P*T}(1+p_mu); P=" << p_probe
      << ", p_mu=" << p_mu;
  return make_certificate("MOMENT", sup, bound, 0.0, ctx.str());
}

CertificateRecord sensitivity_certificate(const SolverHandle& solve,
                                          const DiscreteMeasure& mu,
                                          const DiscreteMeasure& eta,
                                          double tol) {
  const double denom = flat_distance(mu, eta);
  if (denom <= 0.0) {
    return make_certificate("SENSITIVITY", 0.0, 1.0, 0.0,
                            "identical initial data (0/0 handled as pass)");
  }
  const SolveReport a = solve(mu);
  const SolveReport b = solve(eta);
  const double measured = path_distance(a.solution, b.solution) / denom;
  const double bound =
      a.constants.c2 *
      std::exp(std::min(a.constants.product(), 700.0));
  std::ostringstream ctx;
  ctx << "ratio over flat(mu,eta)=" << denom << " vs c2*e^{c1c2c3KT}; solves at tol="
      << tol << ", common random numbers";
  return make_certificate("SENSITIVITY", measured, bound, 0.05, ctx.str());
}

namespace oracle {

std::vector<double> expm(const std::vector<double>& a, std::size_t m) {
  Eigen::MatrixXd A(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      A(static_cast<int>(i), static_cast<int>(j)) = a[i * m + j];
    }
  }
  const Eigen::MatrixXd E = A.exp();
  std::vector<double> out(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out[i * m + j] = E(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return out;
}

std::vector<double> rk4(
    const std::function<std::vector<double>(double, const std::vector<double>&)>& rhs,
    std::vector<double> y, double t0, double t1, double step) {
  if (!(step > 0.0)) throw ValidationError("oracle::rk4 needs step > 0");
  const std::size_t n = y.size();
  double t = t0;
  std::vector<double> w(n);
  while (t < t1 - 1e-15) {
    const double h = std::min(step, t1 - t);
    const auto k1 = rhs(t, y);
    for (std::size_t i = 0; i < n; ++i) w[i] = y[i] + 0.5 * h * k1[i];
    const auto k2 = rhs(t + 0.5 * h, w);
    for (std::size_t i = 0; i < n; ++i) w[i] = y[i] + 0.5 * h * k2[i];
    const auto k3 = rhs(t + 0.5 * h, w);
    for (std::size_t i = 0; i < n; ++i) w[i] = y[i] + h * k3[i];
    const auto k4 = rhs(t + h, w);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    t += h;
  }
  return y;
}

double bisect(const std::function<double(double)>& g, double lo, double hi,
              double tol, int max_iter) {
  double flo = g(lo);
  double fhi = g(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0) {
    throw NumericError("oracle::bisect needs a sign change on [lo, hi]");
  }
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = g(mid);
    if (fm == 0.0) return mid;
    if (flo * fm < 0.0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

double ou_mean(double m0, double anchor, double t) {
  return anchor + (m0 - anchor) * std::exp(-t);
}

double ou_variance(double v0, double sigma, double t) {
  const double stat = 0.5 * sigma * sigma;
  return stat + (v0 - stat) * std::exp(-2.0 * t);
}

}  // namespace oracle

}  // namespace kineq
