#include "seedbank/duality.hpp"

#include <algorithm>
#include <cmath>

#include "seedbank/error.hpp"
#include "seedbank/parallel.hpp"

namespace seedbank {

namespace {

MomentEstimate summarize(double sum, double sum_sq, std::size_t reps) {
  const double n = static_cast<double>(reps);
  const double mean = sum / n;
  const double var = reps > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n), reps};
}

std::size_t atom_index(const DiscretizedMeasure& mu, double flag) {
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu.atoms[i].rate == flag) {
      return i;
    }
  }
  throw Error(ErrorCode::flag_mismatch,
              "flag " + std::to_string(flag) + " does not coincide with an atom rate");
}

}  // namespace

double dual_function(double x, const std::function<double(double)>& y, const DualState& s) {
  double value = s.active == 0 ? 1.0 : std::pow(x, static_cast<double>(s.active));
  for (const auto& [flag, count] : s.dormant) {
    value *= std::pow(y(flag), static_cast<double>(count));
  }
  return value;
}

double dual_function(const DiffusionState& z, const DiscretizedMeasure& mu, const DualState& s) {
  double value = s.active == 0 ? 1.0 : std::pow(z.x, static_cast<double>(s.active));
  for (const auto& [flag, count] : s.dormant) {
    value *= std::pow(z.y.at(atom_index(mu, flag)), static_cast<double>(count));
  }
  return value;
}

std::function<double(double)> bank_step_function(const DiscretizedMeasure& mu,
                                                 std::vector<double> y) {
  if (y.size() != mu.size() || y.empty()) {
    throw Error(ErrorCode::dimension_mismatch, "one y value per atom is required");
  }
  std::vector<double> edges;
  for (const auto& a : mu.atoms) {
    edges.push_back(a.rate);
  }
  return [edges = std::move(edges), y = std::move(y)](double rate) {
    const auto it = std::lower_bound(edges.begin(), edges.end(), rate);
    const auto i = it == edges.end() ? edges.size() - 1
                                     : static_cast<std::size_t>(it - edges.begin());
    return y[i];
  };
}

MomentEstimate forward_side(const DiffusionState& z0, const DualState& s0,
                            const DiscretizedMeasure& mu, double t, std::size_t reps,
                            PathConfig cfg, unsigned threads) {
  validate_dual_state(s0);
  for (const auto& [flag, count] : s0.dormant) {
    (void)atom_index(mu, flag);
  }
  if (reps < 1) {
    throw Error(ErrorCode::invalid_parameter, "reps must be >= 1");
  }
  cfg.t_max = t;
  cfg.record_stride = std::max<std::size_t>(1, step_count(cfg));
  const auto ensemble = simulate_ensemble(z0, mu, cfg, {reps, threads});
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& z : ensemble.terminal) {
    const double f = dual_function(z, mu, s0);
    sum += f;
    sum_sq += f * f;
  }
  return summarize(sum, sum_sq, reps);
}

MomentEstimate dual_side(double x, const std::function<double(double)>& y, const DualState& s0,
                         const SeedBankMeasure& mu, double t, std::size_t reps,
                         std::uint64_t seed, unsigned threads) {
  validate_dual_state(s0);
  if (reps < 1) {
    throw Error(ErrorCode::invalid_parameter, "reps must be >= 1");
  }
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (reps + kChunk - 1) / kChunk;
  std::vector<std::pair<double, double>> partial(chunks, {0.0, 0.0});
  parallel_chunks(chunks, threads, [&](std::size_t chunk) {
    const std::size_t end = std::min(reps, (chunk + 1) * kChunk);
    auto& [sum, sum_sq] = partial[chunk];
    for (std::size_t r = chunk * kChunk; r < end; ++r) {
      Philox rng(seed, r, StreamPurpose::dual);
      const auto trajectory = simulate_dual(s0, mu, t, rng);
      const double f = dual_function(x, y, trajectory.final_state);
      sum += f;
      sum_sq += f * f;
    }
  });
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& [s, sq] : partial) {
    sum += s;
    sum_sq += sq;
  }
  return summarize(sum, sum_sq, reps);
}

GapResult duality_gap(const MomentEstimate& a, const MomentEstimate& b) {
  if (!std::isfinite(a.value) || !std::isfinite(b.value) || !std::isfinite(a.se) ||
      !std::isfinite(b.se)) {
    throw Error(ErrorCode::invalid_parameter, "estimates must be finite");
  }
  const double spread = std::sqrt(a.se * a.se + b.se * b.se);
  const double diff = std::abs(a.value - b.value);
  if (spread == 0.0) {
    if (diff != 0.0) {
      throw Error(ErrorCode::zero_variance_both, "both standard errors are zero but values differ");
    }
    return {0.0, true};
  }
  const double z = diff / spread;
  return {z, z <= kDualityThreshold};
}

}  // namespace seedbank
