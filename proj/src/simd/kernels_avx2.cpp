#include <immintrin.h>

#include <cmath>

#include "seedbank/simd/kernels.hpp"

namespace seedbank::simd::detail {

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  if (i + 4 <= n) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    i += 4;
  }
  const __m256d acc = _mm256_add_pd(acc0, acc1);
  const __m128d pair = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
  double sum = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
  for (; i < n; ++i) {
    sum += a[i] * b[i];
  }
  return sum;
}

void em_lanes_avx2(const EmLanes& args) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d dt = _mm256_set1_pd(args.dt);
  const __m256d total = _mm256_set1_pd(args.total_mass);

  std::size_t l = 0;
  for (; l + 4 <= args.lanes; l += 4) {
    const __m256d x = _mm256_loadu_pd(args.x + l);
    __m256d inflow = zero;
    for (std::size_t i = 0; i < args.banks; ++i) {
      const __m256d y = _mm256_loadu_pd(args.y + i * args.stride + l);
      inflow = _mm256_add_pd(inflow, _mm256_mul_pd(_mm256_set1_pd(args.mass[i]), y));
    }
    const __m256d drift = _mm256_sub_pd(inflow, _mm256_mul_pd(total, x));
    const __m256d diffusion = _mm256_sqrt_pd(_mm256_mul_pd(x, _mm256_sub_pd(one, x)));
    __m256d next = _mm256_add_pd(_mm256_add_pd(x, _mm256_mul_pd(drift, dt)),
                                 _mm256_mul_pd(diffusion, _mm256_loadu_pd(args.dW + l)));
    // Operand order reproduces the scalar ternaries, including for -0.0 and NaN.
    next = _mm256_max_pd(zero, next);
    next = _mm256_min_pd(one, next);
    for (std::size_t i = 0; i < args.banks; ++i) {
      double* yp = args.y + i * args.stride + l;
      const __m256d y = _mm256_loadu_pd(yp);
      const __m256d relaxed = _mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(args.decay[i]), y),
                                            _mm256_mul_pd(_mm256_set1_pd(args.gain[i]), x));
      _mm256_storeu_pd(yp, relaxed);
    }
    _mm256_storeu_pd(args.x + l, next);
  }

  if (l < args.lanes) {
    EmLanes tail = args;
    tail.lanes = args.lanes - l;
    tail.x = args.x + l;
    tail.y = args.y + l;
    tail.dW = args.dW + l;
    em_lanes_scalar(tail);
  }
}

}  // namespace seedbank::simd::detail
