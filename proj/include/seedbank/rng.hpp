#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace seedbank {

// What a stream is used for. Distinct purposes never share counters, so a
// replicate's forward noise and, say, its dual-chain draws are independent.
enum class StreamPurpose : std::uint32_t {
  forward_noise = 1,
  wright_fisher = 2,
  dual = 3,
  coalescent = 4,
  ancestral = 5,
  measure_sampling = 6,
  misc = 7,
};

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit key is the run seed; the 128-bit counter is split into a
/// 64-bit block index and the (replicate, purpose) pair. Any replicate's
/// stream can therefore be reconstructed directly without touching other
/// streams, which is what makes ensemble results independent of the order
/// in which replicates are executed.
class Philox {
 public:
  using result_type = std::uint32_t;

  Philox(std::uint64_t seed, std::uint64_t replicate, StreamPurpose purpose) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        replicate_(replicate),
        purpose_(static_cast<std::uint32_t>(purpose)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) {
      refill();
    }
    return buffer_[pos_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)() >> 5;
    const std::uint64_t lo = (*this)() >> 6;
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
  }

  /// Uniform double in (0, 1], safe for -log(u).
  double uniform_pos() { return 1.0 - uniform(); }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t replicate_;
  std::uint32_t purpose_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int pos_ = 4;
};

/// Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

}  // namespace seedbank
