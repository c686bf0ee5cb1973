#include <atomic>

#include "seedbank/error.hpp"
#include "seedbank/simd/kernels.hpp"

namespace seedbank::simd {

namespace {

constexpr Kernels kScalar{Isa::scalar, &detail::dot_scalar, &detail::em_lanes_scalar};
#if defined(__x86_64__) || defined(_M_X64)
constexpr Kernels kAvx2{Isa::avx2, &detail::dot_avx2, &detail::em_lanes_avx2};
#endif

const Kernels* detect() {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2")) {
    return &kAvx2;
  }
#endif
  return &kScalar;
}

std::atomic<const Kernels*>& current() {
  static std::atomic<const Kernels*> table{detect()};
  return table;
}

}  // namespace

const char* to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const Kernels& kernels(Isa isa) {
  if (!isa_available(isa)) {
    throw Error(ErrorCode::invalid_parameter, std::string("ISA not supported: ") + to_string(isa));
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::avx2) {
    return kAvx2;
  }
#endif
  return kScalar;
}

const Kernels& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) { current().store(&kernels(isa), std::memory_order_release); }

}  // namespace seedbank::simd
