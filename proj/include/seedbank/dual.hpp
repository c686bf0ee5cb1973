#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "seedbank/measure.hpp"
#include "seedbank/rng.hpp"
#include "seedbank/wright_fisher.hpp"

namespace seedbank {

/// Block counts of the dual process: `active` lineages plus an integer
/// valued measure on rates, stored as rate -> multiplicity. Rates are exact
/// keys; no entry has multiplicity zero.
struct DualState {
  std::int64_t active = 0;
  std::map<double, std::int64_t> dormant;

  std::int64_t total() const noexcept;
  friend bool operator==(const DualState&, const DualState&) = default;
};

void validate_dual_state(const DualState& s);

/// c n + sum_rate rate m(rate) + n (n - 1) / 2.
double total_rate(const DualState& s, const SeedBankMeasure& mu);

enum class DualEvent { deactivation, reactivation, coalescence };

const char* to_string(DualEvent event);

struct DualTransition {
  double holding_time;
  DualState next;
  DualEvent event;
  double rate;  // flag placed or removed; 0 for coalescence
};

DualTransition dual_step(const DualState& s, const SeedBankMeasure& mu, Philox& rng);

struct DualLogEntry {
  double time;
  DualEvent event;
  double rate;
  DualState after;
};

struct DualTrajectory {
  DualState final_state;
  std::vector<DualLogEntry> log;  // filled only when requested
};

/// Gillespie iteration until the clock passes `horizon` or no event is
/// possible.
DualTrajectory simulate_dual(const DualState& s0, const SeedBankMeasure& mu, double horizon,
                             Philox& rng, bool keep_log = false);

/// Finite reachable state space of the dual chain with flags restricted to
/// the atoms of a discrete measure: all (n, m) with n + |m| <= total(s0),
/// ordered lexicographically by (n, multiplicities in atom order).
struct DualChain {
  std::vector<double> rates;                       // atom rates
  std::vector<std::vector<std::int64_t>> states;   // [n, m_1, ..., m_k]
  std::vector<std::vector<double>> generator;      // dense rate matrix

  std::size_t index_of(const DualState& s) const;
  DualState state(std::size_t index) const;
};

inline constexpr std::size_t kMaxExactAtoms = 4;
inline constexpr std::int64_t kMaxExactTotal = 6;

DualChain build_dual_chain(const DualState& s0, const SeedBankMeasure& mu);

/// Law of the dual chain at time t started from s0 (matrix exponential),
/// indexed like chain.states.
std::vector<double> dual_transient_law(const DualChain& chain, const DualState& s0, double t);

/// E[x^{N_t} prod_rate y(rate)^{M_t(rate)}] by exact enumeration. `y` is
/// aligned with the atoms of mu.
double dual_moment_exact(const DualState& s0, double x, const std::vector<double>& y,
                         const SeedBankMeasure& mu, double t);

/// A partition of {1..K} with one flag per block; flag 0 is active, a
/// positive flag is the dormancy rate of the bank holding the block.
struct MarkedPartition {
  std::vector<std::vector<int>> blocks;
  std::vector<double> flags;

  /// K singletons, all active.
  static MarkedPartition singletons(int K);
  int sample_size() const;
  /// Blocks sorted by their smallest element, elements sorted within blocks.
  void canonicalize();
  friend bool operator==(const MarkedPartition&, const MarkedPartition&) = default;
};

/// Throws invalid_state unless the blocks partition {1..K} and flags are
/// non-negative with one per block.
void validate_partition(const MarkedPartition& p);

enum class CoalescentEvent { deactivation, reactivation, merge };

struct CoalescentTransition {
  double holding_time;
  MarkedPartition next;
  CoalescentEvent event;
  std::size_t block;        // block changed, or first merged block
  std::size_t other_block;  // second merged block (merge only)
};

/// Total jump rate: c (#0-blocks) + sum of positive flags + C(#0-blocks, 2).
double coalescent_rate(const MarkedPartition& p, const SeedBankMeasure& mu);

CoalescentTransition coalescent_step(const MarkedPartition& p, const SeedBankMeasure& mu,
                                     Philox& rng);

/// Merges two active blocks into one active block (the union).
MarkedPartition merge_blocks(const MarkedPartition& p, std::size_t a, std::size_t b);

MarkedPartition simulate_coalescent(const MarkedPartition& p0, const SeedBankMeasure& mu,
                                    double horizon, Philox& rng);

DualState block_counting(const MarkedPartition& p);

/// One generation of the discrete ancestral process of the Wright–Fisher
/// model: at most one flag change or merge per generation, with
/// probabilities c_i / N, rate_i / N and (1 - c / N)^2 / N.
MarkedPartition ancestral_step(const MarkedPartition& p, const WFParams& params, Philox& rng);

/// {"blocks": [[1, 2], [3]], "flags": [0, 0.5]}
std::string to_json(const MarkedPartition& p);
MarkedPartition partition_from_json(const std::string& text);

}  // namespace seedbank
