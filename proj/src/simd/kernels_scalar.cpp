#include <cmath>

#include "seedbank/simd/kernels.hpp"

namespace seedbank::simd::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += a[i] * b[i];
  }
  return sum;
}

// Reference lane update. Must stay in lockstep with em_step() in forward.cpp
// and with the AVX2 variant: same operations, same order.
void em_lanes_scalar(const EmLanes& args) {
  for (std::size_t l = 0; l < args.lanes; ++l) {
    const double x = args.x[l];
    double inflow = 0.0;
    for (std::size_t i = 0; i < args.banks; ++i) {
      inflow += args.mass[i] * args.y[i * args.stride + l];
    }
    const double drift = inflow - args.total_mass * x;
    const double diffusion = std::sqrt(x * (1.0 - x));
    double next = x + drift * args.dt + diffusion * args.dW[l];
    next = next < 0.0 ? 0.0 : next;
    next = next > 1.0 ? 1.0 : next;
    for (std::size_t i = 0; i < args.banks; ++i) {
      double& y = args.y[i * args.stride + l];
      y = args.decay[i] * y + args.gain[i] * x;
    }
    args.x[l] = next;
  }
}

}  // namespace seedbank::simd::detail
