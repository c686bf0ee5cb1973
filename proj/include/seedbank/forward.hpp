#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seedbank/measure.hpp"

namespace seedbank {

/// Active frequency plus one dormant frequency per seed-bank atom.
struct DiffusionState {
  double t = 0.0;
  double x = 0.0;
  std::vector<double> y;

  /// (p, p, ..., p) for a measure with `banks` atoms.
  static DiffusionState uniform(double p, std::size_t banks);
};

/// Throws invalid_state if any coordinate leaves [0, 1] (or is NaN).
void check_in_unit_box(const DiffusionState& state);

struct PathConfig {
  double dt = 1e-3;
  double t_max = 1.0;
  std::uint64_t seed = 0;
  std::size_t record_stride = 1;
};

/// Number of Euler steps covering [0, t_max]; the last step is shortened
/// when t_max is not a multiple of dt.
std::size_t step_count(const PathConfig& cfg);
/// Width of step k (0-based).
double step_width(const PathConfig& cfg, std::size_t k);

double drift_x(const DiffusionState& state, const DiscretizedMeasure& mu);

/// One Euler–Maruyama step for x, exponential integrator for y with x
/// frozen at its pre-step value. x is clamped to [0, 1].
DiffusionState em_step(const DiffusionState& state, const DiscretizedMeasure& mu, double dt,
                       double dW);

/// Gaussian increments for replicate `replicate` of a run seeded with `seed`:
/// exactly the increments simulate_path consumes.
std::vector<double> brownian_increments(std::uint64_t seed, std::uint64_t replicate,
                                        const PathConfig& cfg);

/// Recorded states at t = 0, every record_stride steps, and at t_max.
std::vector<DiffusionState> simulate_path(const DiffusionState& z0, const DiscretizedMeasure& mu,
                                          const PathConfig& cfg, std::uint64_t replicate = 0);

/// Same scheme driven by caller-supplied increments (one per step).
std::vector<DiffusionState> simulate_path(const DiffusionState& z0, const DiscretizedMeasure& mu,
                                          const PathConfig& cfg, std::span<const double> noise);

/// Explicit discretization of the stochastic Volterra equation for X alone.
/// X is held constant on each step; the memory kernel is integrated exactly
/// over each step. O(steps^2). Returns X at t_0..t_steps.
std::vector<double> simulate_sve_path(double x0, std::span<const double> y0,
                                      const DiscretizedMeasure& mu, const PathConfig& cfg,
                                      std::span<const double> noise);

/// Sums consecutive groups of `factor` fine increments into coarse ones.
std::vector<double> coarsen_increments(std::span<const double> fine, std::size_t factor);

/// E[X_t], E[Y_t(rate_i)] from the closed linear system of first moments.
DiffusionState moment_ode(const DiffusionState& z0, const DiscretizedMeasure& mu, double t);

struct EnsembleOptions {
  std::size_t reps = 1;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Per-time ensemble summary of X.
struct EnsemblePoint {
  double t;
  double mean_x;
  double var_x;  // unbiased sample variance
  double se_x;
};

struct EnsembleResult {
  std::vector<EnsemblePoint> summary;     // at the recorded times of cfg
  std::vector<DiffusionState> terminal;   // one per replicate, at t_max
};

/// Runs `reps` independent paths, replicate r using stream (cfg.seed, r).
/// Each replicate's trajectory is bit-identical to simulate_path(..., r);
/// results do not depend on the thread count.
EnsembleResult simulate_ensemble(const DiffusionState& z0, const DiscretizedMeasure& mu,
                                 const PathConfig& cfg, const EnsembleOptions& opts,
                                 bool keep_terminal = true);

}  // namespace seedbank
