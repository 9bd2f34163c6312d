#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kineq/generators.hpp"

namespace kineq {

enum class BackendKind { FiniteState, Particle };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& name);

/// Discretization of the frozen-coefficient dual propagator.
struct BackendConfig {
  BackendKind kind = BackendKind::FiniteState;

  /// Finite-state: atoms fixed for all time; weights evolve by RK4 on
  /// w' = Q(t)^T w with Q extracted from apply() on indicator functions.
  std::vector<Point> states;

  /// Inner integrator step; must divide the path grid step.
  double h_in = 1e-3;

  /// Particle backend: ensemble size (>= 100), base seed of the
  /// counter-based streams, and the atom cap used when recording path nodes.
  std::size_t particles = 0;
  std::uint64_t seed = 1;
  std::size_t bin_cap = 512;
};

void validate_backend(const BackendConfig& backend, const GeneratorSpec& gen,
                      double grid_step);

/// Scheme diagnostics accumulated during a propagation.
struct PropagationStats {
  double max_renormalization_defect = 0.0;  // finite-state, per step
  double min_weight = 0.0;                  // most negative pre-clamp weight
  double max_rate_step = 0.0;               // sup of h_in * total jump rate
  double small_jump_sigma2 = 0.0;           // stable-like gaussian proxy variance rate
  double thinning_cutoff = 0.0;             // stable-like radius below which jumps are proxied
  double bin_radius = 0.0;                  // largest node-binning radius used
};

/// N interacting particles with per-particle counter streams.
struct ParticleEnsemble {
  int dim = 1;
  std::size_t count = 0;
  std::vector<double> positions;  // count * dim, row-major
  std::uint64_t base_seed = 1;

  DiscreteMeasure empirical() const;
};

ParticleEnsemble sample_ensemble(const DiscreteMeasure& mu, std::size_t count,
                                 std::uint64_t seed);

/// Advance the ensemble under frozen coefficients from time `from` to `to`.
/// Increments are pure functions of (seed, particle, global step index), so
/// seed-aligned propagations replay identical trajectories. `time_offset`
/// shifts the step index when `frozen` covers a sub-interval of a larger
/// horizon, keeping increments fresh across chained solves.
void step_ensemble(ParticleEnsemble& ensemble, const GeneratorSpec& gen,
                   const MeasurePath& frozen, double from, double to,
                   double h_in, PropagationStats* stats = nullptr,
                   double time_offset = 0.0);

/// Rate matrix (row-major m x m) of a jump-on-states family: off-diagonal
/// entries from apply() on state indicators, diagonal = -row sum.
std::vector<double> rate_matrix(const GeneratorSpec& gen, double t,
                                const PathView& view,
                                const std::vector<Point>& states);

/// Dual propagator action: evolve mu from time s to t under coefficients
/// frozen along `frozen`.
DiscreteMeasure propagate(const BackendConfig& backend, const GeneratorSpec& gen,
                          const MeasurePath& frozen, const DiscreteMeasure& mu,
                          double s, double t, PropagationStats* stats = nullptr);

/// Evolve mu across the whole frozen grid, recording every node; particle
/// nodes are binned to backend.bin_cap atoms. `terminal_full`, when given,
/// receives the unbinned terminal measure (used when chaining solves).
MeasurePath propagate_path(const BackendConfig& backend, const GeneratorSpec& gen,
                           const MeasurePath& frozen, const DiscreteMeasure& mu,
                           PropagationStats* stats = nullptr,
                           double time_offset = 0.0,
                           DiscreteMeasure* terminal_full = nullptr);

/// flat_distance between the one-shot r->t propagation and the composition
/// r->s->t. Particle legs share streams, so the defect is exactly 0.
double chain_defect(const BackendConfig& backend, const GeneratorSpec& gen,
                    const MeasurePath& frozen, const DiscreteMeasure& mu,
                    double r, double s, double t);

struct MartingaleDefect {
  double time;
  double defect;
  double std_error;
};

/// E[M_t] - E[M_{t0}] for M_t = f(X_t) - int A[tau, frozen] f(X_tau) dtau,
/// with paired per-particle Monte-Carlo standard errors.
std::vector<MartingaleDefect> martingale_defect(
    const BackendConfig& backend, const GeneratorSpec& gen,
    const MeasurePath& frozen, const TestFunction& f,
    const std::vector<double>& checkpoints);

}  // namespace kineq
