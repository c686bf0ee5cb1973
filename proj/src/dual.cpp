#include "seedbank/dual.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <unsupported/Eigen/MatrixFunctions>

#include "seedbank/error.hpp"

namespace seedbank {

namespace {

double exponential(double rate, Philox& rng) { return -std::log(rng.uniform_pos()) / rate; }

double pairs(std::int64_t n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

void add_flag(std::map<double, std::int64_t>& m, double rate) { ++m[rate]; }

void remove_flag(std::map<double, std::int64_t>& m, double rate) {
  auto it = m.find(rate);
  if (--it->second == 0) {
    m.erase(it);
  }
}

}  // namespace

std::int64_t DualState::total() const noexcept {
  std::int64_t sum = active;
  for (const auto& [rate, count] : dormant) {
    sum += count;
  }
  return sum;
}

void validate_dual_state(const DualState& s) {
  if (s.active < 0) {
    throw Error(ErrorCode::invalid_state, "negative active block count");
  }
  for (const auto& [rate, count] : s.dormant) {
    if (!(rate > 0.0) || count < 1) {
      throw Error(ErrorCode::invalid_state, "dormant entries need rate > 0, multiplicity >= 1");
    }
  }
}

const char* to_string(DualEvent event) {
  switch (event) {
    case DualEvent::deactivation: return "deactivation";
    case DualEvent::reactivation: return "reactivation";
    case DualEvent::coalescence: return "coalescence";
  }
  return "unknown";
}

double total_rate(const DualState& s, const SeedBankMeasure& mu) {
  double rate = mu.mass() * static_cast<double>(s.active) + pairs(s.active);
  for (const auto& [flag, count] : s.dormant) {
    rate += flag * static_cast<double>(count);
  }
  return rate;
}

DualTransition dual_step(const DualState& s, const SeedBankMeasure& mu, Philox& rng) {
  validate_dual_state(s);
  const double total = total_rate(s, mu);
  if (!(total > 0.0)) {
    throw Error(ErrorCode::absorbing_state, "no transition is possible from this state");
  }
  DualTransition out{exponential(total, rng), s, DualEvent::coalescence, 0.0};

  double u = rng.uniform() * total;
  const double deactivation = mu.mass() * static_cast<double>(s.active);
  if (u < deactivation) {
    const double flag = sample_rate(mu, rng);
    --out.next.active;
    add_flag(out.next.dormant, flag);
    out.event = DualEvent::deactivation;
    out.rate = flag;
    return out;
  }
  u -= deactivation;
  for (const auto& [flag, count] : s.dormant) {
    const double weight = flag * static_cast<double>(count);
    if (u < weight) {
      ++out.next.active;
      remove_flag(out.next.dormant, flag);
      out.event = DualEvent::reactivation;
      out.rate = flag;
      return out;
    }
    u -= weight;
  }
  if (s.active >= 2) {
    --out.next.active;
    return out;
  }
  // Rounding pushed u past the last segment; fall back to the last possible event.
  if (!s.dormant.empty()) {
    const double flag = s.dormant.rbegin()->first;
    ++out.next.active;
    remove_flag(out.next.dormant, flag);
    out.event = DualEvent::reactivation;
    out.rate = flag;
    return out;
  }
  const double flag = sample_rate(mu, rng);
  --out.next.active;
  add_flag(out.next.dormant, flag);
  out.event = DualEvent::deactivation;
  out.rate = flag;
  return out;
}

DualTrajectory simulate_dual(const DualState& s0, const SeedBankMeasure& mu, double horizon,
                             Philox& rng, bool keep_log) {
  validate_dual_state(s0);
  DualTrajectory out{s0, {}};
  double clock = 0.0;
  while (total_rate(out.final_state, mu) > 0.0) {
    auto step = dual_step(out.final_state, mu, rng);
    if (clock + step.holding_time > horizon) {
      break;
    }
    clock += step.holding_time;
    out.final_state = std::move(step.next);
    if (keep_log) {
      out.log.push_back({clock, step.event, step.rate, out.final_state});
    }
  }
  return out;
}

std::size_t DualChain::index_of(const DualState& s) const {
  std::vector<std::int64_t> key(rates.size() + 1, 0);
  key[0] = s.active;
  for (const auto& [flag, count] : s.dormant) {
    const auto it = std::find(rates.begin(), rates.end(), flag);
    if (it == rates.end()) {
      throw Error(ErrorCode::flag_mismatch, "flag is not an atom of the measure");
    }
    key[1 + static_cast<std::size_t>(it - rates.begin())] = count;
  }
  const auto pos = std::lower_bound(states.begin(), states.end(), key);
  if (pos == states.end() || *pos != key) {
    throw Error(ErrorCode::invalid_state, "state is outside the enumerated chain");
  }
  return static_cast<std::size_t>(pos - states.begin());
}

DualState DualChain::state(std::size_t index) const {
  DualState s;
  s.active = states[index][0];
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (states[index][i + 1] > 0) {
      s.dormant[rates[i]] = states[index][i + 1];
    }
  }
  return s;
}

DualChain build_dual_chain(const DualState& s0, const SeedBankMeasure& mu) {
  validate_dual_state(s0);
  if (!mu.is_discrete()) {
    throw Error(ErrorCode::invalid_parameter, "exact enumeration needs a discrete measure");
  }
  const auto atoms = mu.atoms();
  const std::int64_t total = s0.total();
  if (atoms.size() > kMaxExactAtoms || total > kMaxExactTotal) {
    throw Error(ErrorCode::state_space_too_large,
                "exact enumeration supports <= 4 atoms and total count <= 6");
  }

  DualChain chain;
  for (const auto& a : atoms) {
    chain.rates.push_back(a.rate);
  }
  const std::size_t k = atoms.size();

  // Lexicographic enumeration of [n, m_1..m_k] with n + sum m <= total.
  std::vector<std::int64_t> current(k + 1, 0);
  auto enumerate = [&](auto&& self, std::size_t pos, std::int64_t budget) -> void {
    if (pos == k + 1) {
      chain.states.push_back(current);
      return;
    }
    for (std::int64_t v = 0; v <= budget; ++v) {
      current[pos] = v;
      self(self, pos + 1, budget - v);
    }
    current[pos] = 0;
  };
  enumerate(enumerate, 0, total);

  const std::size_t size = chain.states.size();
  chain.generator.assign(size, std::vector<double>(size, 0.0));
  auto find = [&](const std::vector<std::int64_t>& key) {
    return static_cast<std::size_t>(
        std::lower_bound(chain.states.begin(), chain.states.end(), key) - chain.states.begin());
  };
  for (std::size_t from = 0; from < size; ++from) {
    const auto& s = chain.states[from];
    auto add = [&](std::vector<std::int64_t> to, double rate) {
      if (rate <= 0.0) {
        return;
      }
      const std::size_t j = find(to);
      chain.generator[from][j] += rate;
      chain.generator[from][from] -= rate;
    };
    const std::int64_t n = s[0];
    for (std::size_t i = 0; i < k; ++i) {
      if (n > 0) {
        auto to = s;
        --to[0];
        ++to[i + 1];
        add(to, static_cast<double>(n) * atoms[i].mass);
      }
      if (s[i + 1] > 0) {
        auto to = s;
        ++to[0];
        --to[i + 1];
        add(to, atoms[i].rate * static_cast<double>(s[i + 1]));
      }
    }
    if (n >= 2) {
      auto to = s;
      --to[0];
      add(to, pairs(n));
    }
  }
  // Validates that s0 only uses atom flags.
  (void)chain.index_of(s0);
  return chain;
}

std::vector<double> dual_transient_law(const DualChain& chain, const DualState& s0, double t) {
  const auto size = static_cast<Eigen::Index>(chain.states.size());
  Eigen::MatrixXd q(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    for (Eigen::Index j = 0; j < size; ++j) {
      q(i, j) = chain.generator[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  const Eigen::MatrixXd transition = (q * t).exp();
  const auto start = static_cast<Eigen::Index>(chain.index_of(s0));
  std::vector<double> law(chain.states.size());
  for (Eigen::Index j = 0; j < size; ++j) {
    law[static_cast<std::size_t>(j)] = std::max(0.0, transition(start, j));
  }
  return law;
}

double dual_moment_exact(const DualState& s0, double x, const std::vector<double>& y,
                         const SeedBankMeasure& mu, double t) {
  const DualChain chain = build_dual_chain(s0, mu);
  if (y.size() != chain.rates.size()) {
    throw Error(ErrorCode::dimension_mismatch, "one y value per atom is required");
  }
  const auto law = dual_transient_law(chain, s0, t);
  double expectation = 0.0;
  for (std::size_t j = 0; j < law.size(); ++j) {
    const auto& s = chain.states[j];
    double value = std::pow(x, static_cast<double>(s[0]));
    for (std::size_t i = 0; i < y.size(); ++i) {
      value *= std::pow(y[i], static_cast<double>(s[i + 1]));
    }
    expectation += law[j] * value;
  }
  return expectation;
}

MarkedPartition MarkedPartition::singletons(int K) {
  MarkedPartition p;
  for (int i = 1; i <= K; ++i) {
    p.blocks.push_back({i});
    p.flags.push_back(0.0);
  }
  return p;
}

int MarkedPartition::sample_size() const {
  std::size_t n = 0;
  for (const auto& b : blocks) {
    n += b.size();
  }
  return static_cast<int>(n);
}

void MarkedPartition::canonicalize() {
  std::vector<std::size_t> order(blocks.size());
  std::iota(order.begin(), order.end(), 0);
  for (auto& b : blocks) {
    std::sort(b.begin(), b.end());
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return blocks[a].front() < blocks[b].front(); });
  MarkedPartition sorted;
  for (auto i : order) {
    sorted.blocks.push_back(std::move(blocks[i]));
    sorted.flags.push_back(flags[i]);
  }
  *this = std::move(sorted);
}

void validate_partition(const MarkedPartition& p) {
  if (p.blocks.size() != p.flags.size()) {
    throw Error(ErrorCode::invalid_state, "one flag per block is required");
  }
  const int K = p.sample_size();
  std::vector<bool> seen(static_cast<std::size_t>(K) + 1, false);
  for (const auto& b : p.blocks) {
    if (b.empty()) {
      throw Error(ErrorCode::invalid_state, "blocks must be nonempty");
    }
    for (int e : b) {
      if (e < 1 || e > K || seen[static_cast<std::size_t>(e)]) {
        throw Error(ErrorCode::invalid_state, "blocks must cover 1..K exactly once");
      }
      seen[static_cast<std::size_t>(e)] = true;
    }
  }
  for (double f : p.flags) {
    if (!(f >= 0.0) || !std::isfinite(f)) {
      throw Error(ErrorCode::invalid_state, "flags must be 0 or a positive rate");
    }
  }
}

namespace {

std::vector<std::size_t> active_blocks(const MarkedPartition& p) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < p.flags.size(); ++i) {
    if (p.flags[i] == 0.0) {
      out.push_back(i);
    }
  }
  return out;
}

// Maps a uniform pair index in [0, C(a, 2)) to (i < j).
std::pair<std::size_t, std::size_t> pair_at(std::size_t index, std::size_t a) {
  for (std::size_t i = 0; i < a; ++i) {
    const std::size_t row = a - 1 - i;
    if (index < row) {
      return {i, i + 1 + index};
    }
    index -= row;
  }
  return {a - 2, a - 1};
}

}  // namespace

double coalescent_rate(const MarkedPartition& p, const SeedBankMeasure& mu) {
  const auto a = static_cast<std::int64_t>(active_blocks(p).size());
  double rate = mu.mass() * static_cast<double>(a) + pairs(a);
  for (double f : p.flags) {
    rate += f;
  }
  return rate;
}

MarkedPartition merge_blocks(const MarkedPartition& p, std::size_t a, std::size_t b) {
  if (a == b || a >= p.blocks.size() || b >= p.blocks.size() || p.flags[a] != 0.0 ||
      p.flags[b] != 0.0) {
    throw Error(ErrorCode::invalid_parameter, "only two distinct active blocks can merge");
  }
  if (a > b) {
    std::swap(a, b);
  }
  MarkedPartition out = p;
  auto& target = out.blocks[a];
  target.insert(target.end(), p.blocks[b].begin(), p.blocks[b].end());
  std::sort(target.begin(), target.end());
  out.blocks.erase(out.blocks.begin() + static_cast<std::ptrdiff_t>(b));
  out.flags.erase(out.flags.begin() + static_cast<std::ptrdiff_t>(b));
  return out;
}

CoalescentTransition coalescent_step(const MarkedPartition& p, const SeedBankMeasure& mu,
                                     Philox& rng) {
  validate_partition(p);
  const double total = coalescent_rate(p, mu);
  if (!(total > 0.0)) {
    throw Error(ErrorCode::absorbing_state, "no transition is possible from this partition");
  }
  const auto active = active_blocks(p);
  CoalescentTransition out{exponential(total, rng), p, CoalescentEvent::merge, 0, 0};

  double u = rng.uniform() * total;
  const double deactivation = mu.mass() * static_cast<double>(active.size());
  if (u < deactivation) {
    const auto pick = std::min(active.size() - 1,
                               static_cast<std::size_t>(u / mu.mass()));
    out.block = active[pick];
    out.next.flags[out.block] = sample_rate(mu, rng);
    out.event = CoalescentEvent::deactivation;
    return out;
  }
  u -= deactivation;
  for (std::size_t i = 0; i < p.flags.size(); ++i) {
    if (p.flags[i] > 0.0) {
      if (u < p.flags[i]) {
        out.block = i;
        out.next.flags[i] = 0.0;
        out.event = CoalescentEvent::reactivation;
        return out;
      }
      u -= p.flags[i];
    }
  }
  if (active.size() >= 2) {
    const auto n_pairs = active.size() * (active.size() - 1) / 2;
    const auto index = std::min(n_pairs - 1, static_cast<std::size_t>(u));
    const auto [i, j] = pair_at(index, active.size());
    out.block = active[i];
    out.other_block = active[j];
    out.next = merge_blocks(p, active[i], active[j]);
    return out;
  }
  // Rounding fallback: reactivate the last flagged block.
  for (std::size_t i = p.flags.size(); i-- > 0;) {
    if (p.flags[i] > 0.0) {
      out.block = i;
      out.next.flags[i] = 0.0;
      out.event = CoalescentEvent::reactivation;
      return out;
    }
  }
  out.block = active.back();
  out.next.flags[out.block] = sample_rate(mu, rng);
  out.event = CoalescentEvent::deactivation;
  return out;
}

MarkedPartition simulate_coalescent(const MarkedPartition& p0, const SeedBankMeasure& mu,
                                    double horizon, Philox& rng) {
  MarkedPartition p = p0;
  double clock = 0.0;
  while (coalescent_rate(p, mu) > 0.0) {
    auto step = coalescent_step(p, mu, rng);
    if (clock + step.holding_time > horizon) {
      break;
    }
    clock += step.holding_time;
    p = std::move(step.next);
  }
  return p;
}

DualState block_counting(const MarkedPartition& p) {
  validate_partition(p);
  DualState s;
  for (double f : p.flags) {
    if (f == 0.0) {
      ++s.active;
    } else {
      add_flag(s.dormant, f);
    }
  }
  return s;
}

MarkedPartition ancestral_step(const MarkedPartition& p, const WFParams& params, Philox& rng) {
  validate_partition(p);
  const double N = static_cast<double>(params.N);
  auto bank_of = [&](double flag) {
    for (std::size_t i = 0; i < params.banks.size(); ++i) {
      if (params.banks[i].rate == flag) {
        return i;
      }
    }
    throw Error(ErrorCode::flag_not_in_model, "flag " + std::to_string(flag) +
                                                  " is not a bank rate of the model");
  };

  const auto active = active_blocks(p);
  const double c = static_cast<double>(params.migrants);
  const double per_pair = (1.0 - c / N) * (1.0 - c / N) / N;
  const double n_pairs = pairs(static_cast<std::int64_t>(active.size()));

  double total = c / N * static_cast<double>(active.size()) + per_pair * n_pairs;
  for (double f : p.flags) {
    if (f > 0.0) {
      total += params.banks[bank_of(f)].rate / N;
    }
  }
  if (total > 1.0) {
    throw Error(ErrorCode::invalid_parameter,
                "single-event probabilities exceed 1; N is too small for this sample");
  }

  double u = rng.uniform();
  if (u >= total) {
    return p;
  }
  MarkedPartition out = p;
  for (std::size_t b : active) {
    for (const auto& bank : params.banks) {
      const double prob = bank.mass / N;
      if (u < prob) {
        out.flags[b] = bank.rate;
        return out;
      }
      u -= prob;
    }
  }
  for (std::size_t b = 0; b < p.flags.size(); ++b) {
    if (p.flags[b] > 0.0) {
      const double prob = params.banks[bank_of(p.flags[b])].rate / N;
      if (u < prob) {
        out.flags[b] = 0.0;
        return out;
      }
      u -= prob;
    }
  }
  if (active.size() >= 2) {
    const auto n = static_cast<std::size_t>(n_pairs);
    const auto index = std::min(n - 1, static_cast<std::size_t>(u / per_pair));
    const auto [i, j] = pair_at(index, active.size());
    return merge_blocks(p, active[i], active[j]);
  }
  return p;
}

std::string to_json(const MarkedPartition& p) {
  nlohmann::json j;
  j["blocks"] = p.blocks;
  j["flags"] = p.flags;
  return j.dump();
}

MarkedPartition partition_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse_error, e.what());
  }
  MarkedPartition p;
  try {
    p.blocks = j.at("blocks").get<std::vector<std::vector<int>>>();
    p.flags = j.at("flags").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, e.what());
  }
  validate_partition(p);
  return p;
}

}  // namespace seedbank
