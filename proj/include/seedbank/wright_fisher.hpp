#pragma once

#include <cstdint>
#include <vector>

#include "seedbank/forward.hpp"
#include "seedbank/measure.hpp"
#include "seedbank/rng.hpp"

namespace seedbank {

struct Bank {
  std::int64_t size;  // M_i
  double mass;        // c_i
  double rate;        // lambda_i = c_i N / M_i
};

/// Discrete-time Wright–Fisher model with seed-banks: N active individuals,
/// `migrants` (= c) of which are exchanged with the banks every generation.
struct WFParams {
  std::int64_t N = 0;
  std::int64_t migrants = 0;
  std::vector<Bank> banks;

  /// Throws invalid_parameter unless 1 <= c <= N, c <= min M_i, sum c_i = c
  /// and every c_i > 0.
  void validate() const;

  /// The (rate_i, c_i) seed-bank measure seen by the embedding.
  DiscretizedMeasure measure() const;
};

/// Counts of type-A individuals: active count in [0, N] and one count per
/// bank in [0, M_i]. Frequencies are count / size.
struct WFState {
  std::int64_t active = 0;
  std::vector<std::int64_t> dormant;

  /// Nearest lattice state to the given frequencies.
  static WFState from_frequencies(const WFParams& params, double x, const std::vector<double>& y);
  double x(const WFParams& params) const;
  double y(const WFParams& params, std::size_t bank) const;
};

void validate_state(const WFState& state, const WFParams& params);

/// One generation: multinomial split of migrants over banks, binomial
/// resampling of the active population, hypergeometric revival draws.
WFState wf_step(const WFState& state, const WFParams& params, Philox& rng);

/// Grid from discretize(mu, bins, cutoff); the mass beyond the cutoff is
/// lumped into the last bin so the bin masses add up to the integer c.
/// M_i = round(c_i N / rate_i) and rate_i is recomputed as c_i N / M_i.
/// Throws bank_too_small, naming the offending bins and their total mass,
/// if any M_i < c.
WFParams build_model(const SeedBankMeasure& mu, std::int64_t N, int bins, double cutoff);

/// Sizes banks for already-binned atoms; any reported tail mass is lumped
/// into the last bin as above.
WFParams build_model(DiscretizedMeasure grid, std::int64_t N);

/// Maps a lattice state to diffusion coordinates aligned with params.measure().
DiffusionState embed(const WFState& state, const WFParams& params);

struct WFEnsembleOptions {
  double t_max = 1.0;
  std::size_t reps = 1;
  std::uint64_t seed = 0;
  std::size_t record_stride = 1;  // in generations
  unsigned threads = 0;
};

/// floor(N t_max) generations per replicate; summary of the embedded X at
/// times k / N for recorded generations k.
std::vector<EnsemblePoint> rescaled_ensemble(const WFParams& params, const WFState& z0,
                                             const WFEnsembleOptions& opts);

namespace sampling {
std::int64_t binomial(std::int64_t trials, double p, Philox& rng);
/// Successes when drawing `draws` items without replacement from `population`
/// items of which `successes` are marked. Inverse transform on the pmf.
std::int64_t hypergeometric(std::int64_t population, std::int64_t successes, std::int64_t draws,
                            Philox& rng);
/// Multinomial counts via sequential conditional binomials.
std::vector<std::int64_t> multinomial(std::int64_t trials, const std::vector<double>& weights,
                                      Philox& rng);
}  // namespace sampling

}  // namespace seedbank
