#include "seedbank/forward.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "seedbank/error.hpp"
#include "seedbank/parallel.hpp"
#include "seedbank/simd/kernels.hpp"

namespace seedbank {

namespace {

void check_dimensions(const DiffusionState& state, const DiscretizedMeasure& mu) {
  if (state.y.size() != mu.size()) {
    throw Error(ErrorCode::dimension_mismatch, "state has " + std::to_string(state.y.size()) +
                                                   " bank frequencies, measure has " +
                                                   std::to_string(mu.size()) + " atoms");
  }
}

void check_config(const PathConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
    throw Error(ErrorCode::nonpositive_dt, "dt must be positive");
  }
  if (!(cfg.t_max > 0.0) || cfg.dt > cfg.t_max) {
    throw Error(ErrorCode::invalid_parameter, "need 0 < dt <= t_max");
  }
  if (cfg.record_stride < 1) {
    throw Error(ErrorCode::invalid_parameter, "record_stride must be >= 1");
  }
}

double time_at(const PathConfig& cfg, std::size_t k, std::size_t steps) {
  return k == steps ? cfg.t_max : static_cast<double>(k) * cfg.dt;
}

bool is_recorded(const PathConfig& cfg, std::size_t k, std::size_t steps) {
  return k % cfg.record_stride == 0 || k == steps;
}

std::vector<DiffusionState> run_path(const DiffusionState& z0, const DiscretizedMeasure& mu,
                                     const PathConfig& cfg, auto&& next_increment) {
  check_config(cfg);
  check_dimensions(z0, mu);
  check_in_unit_box(z0);
  const std::size_t steps = step_count(cfg);

  std::vector<DiffusionState> path;
  DiffusionState state = z0;
  state.t = 0.0;
  path.push_back(state);
  for (std::size_t k = 0; k < steps; ++k) {
    const double h = step_width(cfg, k);
    state = em_step(state, mu, h, next_increment(k, h));
    state.t = time_at(cfg, k + 1, steps);
    if (is_recorded(cfg, k + 1, steps)) {
      path.push_back(state);
    }
  }
  return path;
}

}  // namespace

DiffusionState DiffusionState::uniform(double p, std::size_t banks) {
  return DiffusionState{0.0, p, std::vector<double>(banks, p)};
}

void check_in_unit_box(const DiffusionState& state) {
  auto inside = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!inside(state.x) || !std::all_of(state.y.begin(), state.y.end(), inside)) {
    throw Error(ErrorCode::invalid_state, "frequencies must lie in [0, 1]");
  }
}

std::size_t step_count(const PathConfig& cfg) {
  const double ratio = cfg.t_max / cfg.dt;
  const double rounded = std::round(ratio);
  // Tolerate representation error in t_max / dt (e.g. 1 / 1e-3).
  if (std::abs(ratio - rounded) <= 1e-9 * rounded) {
    return static_cast<std::size_t>(rounded);
  }
  return static_cast<std::size_t>(std::ceil(ratio));
}

double step_width(const PathConfig& cfg, std::size_t k) {
  const std::size_t steps = step_count(cfg);
  if (k + 1 < steps) {
    return cfg.dt;
  }
  const double last = cfg.t_max - static_cast<double>(steps - 1) * cfg.dt;
  // A near-exact multiple keeps the nominal width so uniform grids stay uniform.
  return std::abs(last - cfg.dt) <= 1e-9 * cfg.dt ? cfg.dt : last;
}

double drift_x(const DiffusionState& state, const DiscretizedMeasure& mu) {
  check_dimensions(state, mu);
  double inflow = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    inflow += mu.atoms[i].mass * state.y[i];
  }
  return inflow - mu.mass() * state.x;
}

DiffusionState em_step(const DiffusionState& state, const DiscretizedMeasure& mu, double dt,
                       double dW) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::nonpositive_dt, "step size must be positive");
  }
  const double x = state.x;
  const double drift = drift_x(state, mu);
  const double diffusion = std::sqrt(x * (1.0 - x));
  double next = x + drift * dt + diffusion * dW;
  next = next < 0.0 ? 0.0 : next;
  next = next > 1.0 ? 1.0 : next;

  DiffusionState out{state.t + dt, next, state.y};
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double decay = std::exp(-mu.atoms[i].rate * dt);
    const double gain = 1.0 - decay;
    out.y[i] = decay * out.y[i] + gain * x;
  }
  return out;
}

std::vector<double> brownian_increments(std::uint64_t seed, std::uint64_t replicate,
                                        const PathConfig& cfg) {
  check_config(cfg);
  Philox rng(seed, replicate, StreamPurpose::forward_noise);
  std::normal_distribution<double> normal;
  const std::size_t steps = step_count(cfg);
  std::vector<double> dW(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    dW[k] = std::sqrt(step_width(cfg, k)) * normal(rng);
  }
  return dW;
}

std::vector<DiffusionState> simulate_path(const DiffusionState& z0, const DiscretizedMeasure& mu,
                                          const PathConfig& cfg, std::uint64_t replicate) {
  Philox rng(cfg.seed, replicate, StreamPurpose::forward_noise);
  std::normal_distribution<double> normal;
  return run_path(z0, mu, cfg,
                  [&](std::size_t, double h) { return std::sqrt(h) * normal(rng); });
}

std::vector<DiffusionState> simulate_path(const DiffusionState& z0, const DiscretizedMeasure& mu,
                                          const PathConfig& cfg, std::span<const double> noise) {
  check_config(cfg);
  if (noise.size() < step_count(cfg)) {
    throw Error(ErrorCode::dimension_mismatch, "fewer noise increments than steps");
  }
  return run_path(z0, mu, cfg, [&](std::size_t k, double) { return noise[k]; });
}

std::vector<double> coarsen_increments(std::span<const double> fine, std::size_t factor) {
  if (factor == 0) {
    throw Error(ErrorCode::invalid_parameter, "coarsening factor must be positive");
  }
  std::vector<double> coarse(fine.size() / factor, 0.0);
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    for (std::size_t j = 0; j < factor; ++j) {
      coarse[k] += fine[k * factor + j];
    }
  }
  return coarse;
}

std::vector<double> simulate_sve_path(double x0, std::span<const double> y0,
                                      const DiscretizedMeasure& mu, const PathConfig& cfg,
                                      std::span<const double> noise) {
  check_config(cfg);
  check_in_unit_box(DiffusionState{0.0, x0, {y0.begin(), y0.end()}});
  if (y0.size() != mu.size()) {
    throw Error(ErrorCode::dimension_mismatch, "y0 length differs from atom count");
  }
  const std::size_t steps = step_count(cfg);
  if (noise.size() < steps) {
    throw Error(ErrorCode::dimension_mismatch, "fewer noise increments than steps");
  }

  const auto& atoms = mu.atoms;
  auto offset = [&](double t) {
    double g = x0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      g += atoms[i].mass * y0[i] * (-std::expm1(-atoms[i].rate * t)) / atoms[i].rate;
    }
    return g;
  };
  // Integral of (c K(u) - c) = -sum c_i e^{-r_i u} over u in [a, b].
  auto cell_weight = [&](double a, double b) {
    double w = 0.0;
    for (const auto& atom : atoms) {
      w -= atom.mass * (std::exp(-atom.rate * a) - std::exp(-atom.rate * b)) / atom.rate;
    }
    return w;
  };

  const double h = cfg.dt;
  // Uniform-grid weights, stored reversed so each row is one contiguous dot
  // product against the history: reversed[steps - m] = weight of lag m.
  std::vector<double> reversed(steps);
  for (std::size_t m = 1; m <= steps; ++m) {
    reversed[steps - m] = cell_weight(static_cast<double>(m - 1) * h, static_cast<double>(m) * h);
  }

  const auto& kern = simd::active();
  std::vector<double> x(steps + 1);
  x[0] = x0;
  double noise_sum = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    noise_sum += std::sqrt(x[k] * (1.0 - x[k])) * noise[k];
    const double t_next = time_at(cfg, k + 1, steps);
    double memory = 0.0;
    if (step_width(cfg, k) == h) {
      memory = kern.dot(x.data(), reversed.data() + (steps - k - 1), k + 1);
    } else {
      // Shortened final step: lags are no longer multiples of h.
      for (std::size_t j = 0; j <= k; ++j) {
        const double t_j = static_cast<double>(j) * h;
        const double t_j1 = j == k ? t_next : static_cast<double>(j + 1) * h;
        memory += cell_weight(t_next - t_j1, t_next - t_j) * x[j];
      }
    }
    double next = offset(t_next) + memory + noise_sum;
    next = next < 0.0 ? 0.0 : next;
    next = next > 1.0 ? 1.0 : next;
    x[k + 1] = next;
  }
  return x;
}

DiffusionState moment_ode(const DiffusionState& z0, const DiscretizedMeasure& mu, double t) {
  check_dimensions(z0, mu);
  if (!(t >= 0.0)) {
    throw Error(ErrorCode::invalid_parameter, "moment_ode needs t >= 0");
  }
  const auto n = static_cast<Eigen::Index>(mu.size());
  Eigen::MatrixXd generator = Eigen::MatrixXd::Zero(n + 1, n + 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& atom = mu.atoms[static_cast<std::size_t>(i)];
    generator(0, i + 1) = atom.mass;
    generator(i + 1, 0) = atom.rate;
    generator(i + 1, i + 1) = -atom.rate;
    total += atom.mass;
  }
  generator(0, 0) = -total;

  Eigen::VectorXd start(n + 1);
  start(0) = z0.x;
  for (Eigen::Index i = 0; i < n; ++i) {
    start(i + 1) = z0.y[static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd flow = (generator * t).exp();
  const Eigen::VectorXd mean = flow * start;

  DiffusionState out{t, mean(0), std::vector<double>(mu.size())};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.y[static_cast<std::size_t>(i)] = mean(i + 1);
  }
  return out;
}

namespace {

constexpr std::size_t kLanes = 64;

struct BatchResult {
  std::vector<double> sum;     // per recorded time
  std::vector<double> sum_sq;  // per recorded time
};

}  // namespace

EnsembleResult simulate_ensemble(const DiffusionState& z0, const DiscretizedMeasure& mu,
                                 const PathConfig& cfg, const EnsembleOptions& opts,
                                 bool keep_terminal) {
  check_config(cfg);
  check_dimensions(z0, mu);
  check_in_unit_box(z0);
  if (opts.reps < 1) {
    throw Error(ErrorCode::invalid_parameter, "reps must be >= 1");
  }

  const std::size_t steps = step_count(cfg);
  std::vector<double> record_times;
  for (std::size_t k = 0; k <= steps; ++k) {
    if (is_recorded(cfg, k, steps)) {
      record_times.push_back(time_at(cfg, k, steps));
    }
  }

  const std::size_t banks = mu.size();
  std::vector<double> mass(banks);
  for (std::size_t i = 0; i < banks; ++i) {
    mass[i] = mu.atoms[i].mass;
  }
  const double total_mass = mu.mass();
  auto decay_for = [&](double h) {
    std::vector<double> decay(banks), gain(banks);
    for (std::size_t i = 0; i < banks; ++i) {
      decay[i] = std::exp(-mu.atoms[i].rate * h);
      gain[i] = 1.0 - decay[i];
    }
    return std::pair{decay, gain};
  };
  const auto [decay, gain] = decay_for(cfg.dt);
  const double last_h = step_width(cfg, steps - 1);
  const auto [decay_last, gain_last] = decay_for(last_h);

  const std::size_t batches = (opts.reps + kLanes - 1) / kLanes;
  std::vector<BatchResult> results(batches);
  EnsembleResult out;
  if (keep_terminal) {
    out.terminal.resize(opts.reps);
  }
  const auto& kern = simd::active();

  auto run_batch = [&](std::size_t b) {
    const std::size_t first = b * kLanes;
    const std::size_t lanes = std::min(kLanes, opts.reps - first);
    std::vector<double> x(lanes, z0.x);
    std::vector<double> y(banks * lanes);
    for (std::size_t i = 0; i < banks; ++i) {
      std::fill_n(y.begin() + static_cast<std::ptrdiff_t>(i * lanes), lanes, z0.y[i]);
    }
    std::vector<double> dW(lanes);
    std::vector<Philox> streams;
    std::vector<std::normal_distribution<double>> normals(lanes);
    streams.reserve(lanes);
    for (std::size_t l = 0; l < lanes; ++l) {
      streams.emplace_back(cfg.seed, first + l, StreamPurpose::forward_noise);
    }

    BatchResult& res = results[b];
    res.sum.assign(record_times.size(), 0.0);
    res.sum_sq.assign(record_times.size(), 0.0);
    std::size_t slot = 0;
    auto record = [&] {
      for (std::size_t l = 0; l < lanes; ++l) {
        res.sum[slot] += x[l];
        res.sum_sq[slot] += x[l] * x[l];
      }
      ++slot;
    };
    record();

    simd::EmLanes args{lanes,        lanes,         x.data(),     y.data(), dW.data(),
                       banks,        mass.data(),   decay.data(), gain.data(), total_mass,
                       cfg.dt};
    for (std::size_t k = 0; k < steps; ++k) {
      const double h = step_width(cfg, k);
      const double scale = std::sqrt(h);
      for (std::size_t l = 0; l < lanes; ++l) {
        dW[l] = scale * normals[l](streams[l]);
      }
      if (k + 1 == steps && h != cfg.dt) {
        args.decay = decay_last.data();
        args.gain = gain_last.data();
        args.dt = h;
      }
      kern.em_lanes(args);
      if (is_recorded(cfg, k + 1, steps)) {
        record();
      }
    }

    if (keep_terminal) {
      for (std::size_t l = 0; l < lanes; ++l) {
        DiffusionState& s = out.terminal[first + l];
        s.t = cfg.t_max;
        s.x = x[l];
        s.y.resize(banks);
        for (std::size_t i = 0; i < banks; ++i) {
          s.y[i] = y[i * lanes + l];
        }
      }
    }
  };

  parallel_chunks(batches, opts.threads, run_batch);

  // Reduce in batch order so the summary does not depend on scheduling.
  const double reps = static_cast<double>(opts.reps);
  for (std::size_t r = 0; r < record_times.size(); ++r) {
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& res : results) {
      sum += res.sum[r];
      sum_sq += res.sum_sq[r];
    }
    const double mean = sum / reps;
    const double var =
        opts.reps > 1 ? std::max(0.0, (sum_sq - reps * mean * mean) / (reps - 1.0)) : 0.0;
    out.summary.push_back({record_times[r], mean, var, std::sqrt(var / reps)});
  }
  return out;
}

}  // namespace seedbank
