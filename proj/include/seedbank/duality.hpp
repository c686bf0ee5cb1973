#pragma once

#include <cstdint>
#include <functional>

#include "seedbank/dual.hpp"
#include "seedbank/forward.hpp"
#include "seedbank/measure.hpp"

namespace seedbank {

struct MomentEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t reps = 0;
};

/// x^n prod_rate y(rate)^{m(rate)}, with 0^0 = 1.
double dual_function(double x, const std::function<double(double)>& y, const DualState& s);

/// Same, with y given per atom of mu: a flag must equal one of the atom
/// rates exactly (flag_mismatch otherwise).
double dual_function(const DiffusionState& z, const DiscretizedMeasure& mu, const DualState& s);

/// Step function y(rate) = y_i on (rate_{i-1}, rate_i]; rates above the last
/// atom take the last value.
std::function<double(double)> bank_step_function(const DiscretizedMeasure& mu,
                                                 std::vector<double> y);

/// Monte Carlo estimate of E[F((X_t, Y_t), s0)] over forward paths started
/// at z0 (cfg.t_max is overridden by t).
MomentEstimate forward_side(const DiffusionState& z0, const DualState& s0,
                            const DiscretizedMeasure& mu, double t, std::size_t reps,
                            PathConfig cfg, unsigned threads = 0);

/// Monte Carlo estimate of E[F((x, y), S_t)] over dual trajectories started
/// at s0; replicate r uses stream (seed, r).
MomentEstimate dual_side(double x, const std::function<double(double)>& y, const DualState& s0,
                         const SeedBankMeasure& mu, double t, std::size_t reps,
                         std::uint64_t seed, unsigned threads = 0);

struct GapResult {
  double z;
  bool pass;
};

inline constexpr double kDualityThreshold = 3.0;

/// Welch-type z-score |a - b| / sqrt(se_a^2 + se_b^2); pass iff z <= 3.
GapResult duality_gap(const MomentEstimate& a, const MomentEstimate& b);

}  // namespace seedbank
