#pragma once

#include <functional>

#include "kineq/certificates.hpp"
#include "kineq/fixpoint.hpp"
#include "kineq/generators.hpp"
#include "kineq/test_functions.hpp"

namespace kineq {

/// Weak-form residual of a path: max over dictionary functions and grid
/// nodes of |d/dt (f, mu_t) - (A[t,{mu.}] f, mu_t)|, centered differences on
/// interior nodes and second-order one-sided differences at the endpoints.
double weak_residual(const MeasurePath& path, const GeneratorSpec& gen,
                     const Dictionary& dict);

/// Scheme-level bound the weak residual of a converged solution should meet:
/// the h^2 finite-difference term plus backend noise and quadrature
/// truncation allowances.
double weak_residual_bound(double c1, double grid_step,
                           const BackendConfig& backend, double noise_hat,
                           double quadrature_truncation, double bin_radius = 0.0);

/// Noise intensity of a generator: max over samples of |G| plus the second
/// moment rate of the jump parts. Zero for deterministic drift flows.
double noise_intensity_probe(const GeneratorSpec& gen, int trials,
                             std::uint64_t seed);

/// max over dyadic node pairs of flat(mu_{t1}, mu_{t2}) / sqrt(|t1 - t2|);
/// at most 64 anchors per dyadic gap on long paths.
double holder_estimate(const MeasurePath& path);

/// sup_t moment(mu_t, p) vs e^{8 P T} (1 + p_mu); the scheme constant 8 is
/// calibrated once against the two-state and OU oracles.
CertificateRecord moment_certificate(const MeasurePath& path, double p,
                                     double p_probe);

using SolverHandle = std::function<SolveReport(const DiscreteMeasure&)>;

/// Gronwall sensitivity: path_distance(solve(mu), solve(eta)) over
/// flat(mu, eta) vs c2 e^{c1 c2 c3 K T} from the solve's own constants.
CertificateRecord sensitivity_certificate(const SolverHandle& solve,
                                          const DiscreteMeasure& mu,
                                          const DiscreteMeasure& eta,
                                          double tol);

namespace oracle {

/// Matrix exponential exp(A) of a row-major m x m matrix.
std::vector<double> expm(const std::vector<double>& a, std::size_t m);

/// Classical fixed-step RK4 on y' = rhs(t, y) from t0 to t1.
std::vector<double> rk4(
    const std::function<std::vector<double>(double, const std::vector<double>&)>& rhs,
    std::vector<double> y0, double t0, double t1, double step);

/// Bisection root of a sign-changing continuous function on [lo, hi].
double bisect(const std::function<double(double)>& g, double lo, double hi,
              double tol, int max_iter = 200);

/// Mean and variance of dX = -(X - anchor) dt + sigma dW.
double ou_mean(double m0, double anchor, double t);
double ou_variance(double v0, double sigma, double t);

}  // namespace oracle

}  // namespace kineq
