#include "seedbank/wright_fisher.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "seedbank/error.hpp"
#include "seedbank/parallel.hpp"

namespace seedbank {

namespace sampling {

std::int64_t binomial(std::int64_t trials, double p, Philox& rng) {
  if (trials <= 0 || p <= 0.0) {
    return 0;
  }
  if (p >= 1.0) {
    return trials;
  }
  std::binomial_distribution<std::int64_t> draw(trials, p);
  return draw(rng);
}

std::int64_t hypergeometric(std::int64_t population, std::int64_t successes, std::int64_t draws,
                            Philox& rng) {
  if (population < 0 || successes < 0 || successes > population || draws < 0 ||
      draws > population) {
    throw Error(ErrorCode::invalid_parameter, "hypergeometric parameters out of range");
  }
  const std::int64_t lo = std::max<std::int64_t>(0, draws - (population - successes));
  const std::int64_t hi = std::min(draws, successes);
  if (lo == hi) {
    return lo;
  }
  auto log_choose = [](double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  };
  const auto K = static_cast<double>(successes);
  const auto M = static_cast<double>(population);
  const auto n = static_cast<double>(draws);
  const double lo_d = static_cast<double>(lo);
  double pmf =
      std::exp(log_choose(K, lo_d) + log_choose(M - K, n - lo_d) - log_choose(M, n));

  const double u = rng.uniform();
  double cumulative = pmf;
  std::int64_t k = lo;
  while (u >= cumulative && k < hi) {
    const double kd = static_cast<double>(k);
    // p(k+1) / p(k) = (K - k)(n - k) / ((k + 1)(M - K - n + k + 1))
    pmf *= (K - kd) * (n - kd) / ((kd + 1.0) * (M - K - n + kd + 1.0));
    cumulative += pmf;
    ++k;
  }
  return k;
}

std::vector<std::int64_t> multinomial(std::int64_t trials, const std::vector<double>& weights,
                                      Philox& rng) {
  std::vector<std::int64_t> counts(weights.size(), 0);
  double remaining_weight = 0.0;
  for (double w : weights) {
    remaining_weight += w;
  }
  std::int64_t remaining = trials;
  for (std::size_t i = 0; i + 1 < weights.size() && remaining > 0; ++i) {
    const double p = remaining_weight > 0.0 ? std::min(1.0, weights[i] / remaining_weight) : 0.0;
    counts[i] = binomial(remaining, p, rng);
    remaining -= counts[i];
    remaining_weight -= weights[i];
  }
  if (!weights.empty()) {
    counts.back() += remaining;
  }
  return counts;
}

}  // namespace sampling

void WFParams::validate() const {
  if (N < 1) {
    throw Error(ErrorCode::invalid_parameter, "N must be >= 1");
  }
  if (migrants < 1) {
    throw Error(ErrorCode::invalid_parameter, "the migrant count c must be a positive integer");
  }
  if (migrants > N) {
    throw Error(ErrorCode::invalid_parameter, "need c <= N");
  }
  if (banks.empty()) {
    throw Error(ErrorCode::invalid_parameter, "at least one seed-bank is required");
  }
  double total = 0.0;
  for (const auto& bank : banks) {
    if (bank.size < migrants) {
      throw Error(ErrorCode::bank_too_small, "every bank needs M_i >= c");
    }
    if (!(bank.mass > 0.0)) {
      throw Error(ErrorCode::invalid_parameter, "bank masses must be positive");
    }
    total += bank.mass;
  }
  if (std::abs(total - static_cast<double>(migrants)) > 1e-9 * static_cast<double>(migrants)) {
    throw Error(ErrorCode::invalid_parameter, "bank masses must add up to c");
  }
}

DiscretizedMeasure WFParams::measure() const {
  DiscretizedMeasure mu;
  for (const auto& bank : banks) {
    mu.atoms.push_back({bank.rate, bank.mass});
  }
  mu.tail_cutoff = banks.empty() ? 0.0 : banks.back().rate;
  return mu;
}

WFState WFState::from_frequencies(const WFParams& params, double x, const std::vector<double>& y) {
  if (y.size() != params.banks.size()) {
    throw Error(ErrorCode::dimension_mismatch, "one bank frequency per bank is required");
  }
  WFState state;
  state.active = std::llround(x * static_cast<double>(params.N));
  for (std::size_t i = 0; i < y.size(); ++i) {
    state.dormant.push_back(std::llround(y[i] * static_cast<double>(params.banks[i].size)));
  }
  validate_state(state, params);
  return state;
}

double WFState::x(const WFParams& params) const {
  return static_cast<double>(active) / static_cast<double>(params.N);
}

double WFState::y(const WFParams& params, std::size_t bank) const {
  return static_cast<double>(dormant[bank]) / static_cast<double>(params.banks[bank].size);
}

void validate_state(const WFState& state, const WFParams& params) {
  if (state.dormant.size() != params.banks.size()) {
    throw Error(ErrorCode::invalid_state, "bank count mismatch");
  }
  if (state.active < 0 || state.active > params.N) {
    throw Error(ErrorCode::invalid_state, "active count out of range");
  }
  for (std::size_t i = 0; i < state.dormant.size(); ++i) {
    if (state.dormant[i] < 0 || state.dormant[i] > params.banks[i].size) {
      throw Error(ErrorCode::invalid_state, "dormant count out of range in bank " +
                                                std::to_string(i + 1));
    }
  }
}

WFState wf_step(const WFState& state, const WFParams& params, Philox& rng) {
  validate_state(state, params);
  const std::size_t n = params.banks.size();
  const double x = state.x(params);

  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    weights[i] = params.banks[i].mass;
  }
  const auto entering = sampling::multinomial(params.migrants, weights, rng);

  WFState next;
  next.active = sampling::binomial(params.N - params.migrants, x, rng);
  next.dormant = state.dormant;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t from_active = sampling::binomial(entering[i], x, rng);
    const std::int64_t revived = sampling::hypergeometric(params.banks[i].size, state.dormant[i],
                                                          entering[i], rng);
    next.active += revived;
    next.dormant[i] = state.dormant[i] - revived + from_active;
  }
  return next;
}

WFParams build_model(const SeedBankMeasure& mu, std::int64_t N, int bins, double cutoff) {
  return build_model(discretize(mu, bins, cutoff), N);
}

WFParams build_model(DiscretizedMeasure grid, std::int64_t N) {
  const double c = grid.mass() + grid.tail_mass;
  const double c_int = std::round(c);
  if (std::abs(c - c_int) > 1e-9 * std::max(1.0, c) || c_int < 1.0) {
    throw Error(ErrorCode::non_integer_mass, "total mass " + std::to_string(c) +
                                                 " is not a positive integer");
  }
  const auto migrants = static_cast<std::int64_t>(c_int);
  if (N < migrants) {
    throw Error(ErrorCode::invalid_parameter, "need N >= c");
  }
  if (grid.tail_mass > 0.0) {
    const double cutoff = grid.tail_cutoff;
    if (!grid.atoms.empty() && grid.atoms.back().rate == cutoff) {
      grid.atoms.back().mass += grid.tail_mass;
    } else {
      grid.atoms.push_back({cutoff, grid.tail_mass});
    }
  }

  WFParams params;
  params.N = N;
  params.migrants = migrants;
  std::ostringstream rejected;
  double rejected_mass = 0.0;
  for (const auto& atom : grid.atoms) {
    const auto size =
        static_cast<std::int64_t>(std::llround(atom.mass * static_cast<double>(N) / atom.rate));
    if (size < migrants) {
      rejected << " (rate " << atom.rate << ", M " << size << ")";
      rejected_mass += atom.mass;
      continue;
    }
    params.banks.push_back(
        {size, atom.mass, atom.mass * static_cast<double>(N) / static_cast<double>(size)});
  }
  if (rejected_mass > 0.0) {
    throw Error(ErrorCode::bank_too_small, "bins with M_i < c:" + rejected.str() +
                                               "; rejected mass " + std::to_string(rejected_mass));
  }
  // Rounding of the quadrature masses can leave sum c_i a hair off c.
  double total = 0.0;
  for (const auto& bank : params.banks) {
    total += bank.mass;
  }
  const double scale = c_int / total;
  for (auto& bank : params.banks) {
    bank.mass *= scale;
    bank.rate = bank.mass * static_cast<double>(N) / static_cast<double>(bank.size);
  }
  params.validate();
  return params;
}

DiffusionState embed(const WFState& state, const WFParams& params) {
  validate_state(state, params);
  DiffusionState out{0.0, state.x(params), std::vector<double>(params.banks.size())};
  for (std::size_t i = 0; i < params.banks.size(); ++i) {
    out.y[i] = state.y(params, i);
  }
  return out;
}

std::vector<EnsemblePoint> rescaled_ensemble(const WFParams& params, const WFState& z0,
                                             const WFEnsembleOptions& opts) {
  params.validate();
  validate_state(z0, params);
  if (opts.reps < 1 || opts.record_stride < 1 || !(opts.t_max > 0.0)) {
    throw Error(ErrorCode::invalid_parameter, "need reps >= 1, record_stride >= 1, t_max > 0");
  }
  const double N = static_cast<double>(params.N);
  const auto generations = static_cast<std::size_t>(std::floor(N * opts.t_max + 1e-9));
  std::vector<std::size_t> recorded;
  for (std::size_t k = 0; k <= generations; ++k) {
    if (k % opts.record_stride == 0 || k == generations) {
      recorded.push_back(k);
    }
  }

  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (opts.reps + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> sums(chunks), sums_sq(chunks);
  parallel_chunks(chunks, opts.threads, [&](std::size_t chunk) {
    auto& sum = sums[chunk];
    auto& sum_sq = sums_sq[chunk];
    sum.assign(recorded.size(), 0.0);
    sum_sq.assign(recorded.size(), 0.0);
    const std::size_t end = std::min(opts.reps, (chunk + 1) * kChunk);
    for (std::size_t rep = chunk * kChunk; rep < end; ++rep) {
      Philox rng(opts.seed, rep, StreamPurpose::wright_fisher);
      WFState state = z0;
      std::size_t slot = 0;
      for (std::size_t k = 0; k <= generations; ++k) {
        if (k > 0) {
          state = wf_step(state, params, rng);
        }
        if (slot < recorded.size() && recorded[slot] == k) {
          const double x = state.x(params);
          sum[slot] += x;
          sum_sq[slot] += x * x;
          ++slot;
        }
      }
    }
  });

  const double reps = static_cast<double>(opts.reps);
  std::vector<EnsemblePoint> out;
  for (std::size_t r = 0; r < recorded.size(); ++r) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
      sum += sums[c][r];
      sum_sq += sums_sq[c][r];
    }
    const double mean = sum / reps;
    const double var =
        opts.reps > 1 ? std::max(0.0, (sum_sq - reps * mean * mean) / (reps - 1.0)) : 0.0;
    out.push_back({static_cast<double>(recorded[r]) / N, mean, var, std::sqrt(var / reps)});
  }
  return out;
}

}  // namespace seedbank
