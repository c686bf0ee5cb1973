#pragma once

#include <cstddef>

// Data-parallel inner loops with a scalar reference implementation and an
// AVX2 variant chosen at runtime. Elementwise kernels produce bit-identical
// results on every ISA (no FMA contraction, identical operation order);
// reductions agree to rounding only.

namespace seedbank::simd {

enum class Isa { scalar, avx2 };

const char* to_string(Isa isa);

/// Arguments for one Euler–Maruyama step over a batch of independent paths.
/// Lane l is one replicate. y is stored bank-major: y[bank * stride + lane].
struct EmLanes {
  std::size_t lanes;
  std::size_t stride;
  double* x;
  double* y;
  const double* dW;     // [lanes]
  std::size_t banks;
  const double* mass;   // [banks]
  const double* decay;  // exp(-rate * dt), [banks]
  const double* gain;   // 1 - decay, [banks]
  double total_mass;
  double dt;
};

struct Kernels {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*em_lanes)(const EmLanes& args);
};

bool isa_available(Isa isa);

/// Kernel table for a specific ISA; throws if the CPU lacks it.
const Kernels& kernels(Isa isa);

/// Kernel table chosen for this CPU (AVX2 when supported).
const Kernels& active();

/// Overrides the runtime choice; throws if the ISA is unavailable.
void select(Isa isa);

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
void em_lanes_scalar(const EmLanes& args);
#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* a, const double* b, std::size_t n);
void em_lanes_avx2(const EmLanes& args);
#endif
}  // namespace detail

}  // namespace seedbank::simd
