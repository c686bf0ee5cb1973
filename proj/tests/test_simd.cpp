#include <doctest.h>

#include <cmath>
#include <vector>

#include "seedbank/rng.hpp"
#include "seedbank/simd/kernels.hpp"

using namespace seedbank;

namespace {

struct Batch {
  std::vector<double> x, y, dW, mass, decay, gain;
  simd::EmLanes args() {
    return {lanes, lanes, x.data(), y.data(), dW.data(), mass.size(), mass.data(),
            decay.data(), gain.data(), total, dt};
  }
  std::size_t lanes;
  double total = 0.0;
  double dt;
};

Batch random_batch(std::size_t lanes, std::size_t banks, std::uint64_t seed) {
  Philox rng(seed, 0, StreamPurpose::misc);
  Batch b;
  b.lanes = lanes;
  b.dt = 1e-3 + 0.1 * rng.uniform();
  for (std::size_t i = 0; i < banks; ++i) {
    const double rate = 0.1 + 10 * rng.uniform();
    b.mass.push_back(0.1 + 2 * rng.uniform());
    b.decay.push_back(std::exp(-rate * b.dt));
    b.gain.push_back(-std::expm1(-rate * b.dt));
    b.total += b.mass.back();
  }
  for (std::size_t l = 0; l < lanes; ++l) {
    // Include exact boundary values and large kicks to exercise the clamp.
    const auto pick = rng() % 8;
    b.x.push_back(pick == 0 ? 0.0 : pick == 1 ? 1.0 : rng.uniform());
    b.dW.push_back((rng.uniform() - 0.5) * (pick == 2 ? 20.0 : 0.2));
  }
  for (std::size_t i = 0; i < banks * lanes; ++i) b.y.push_back(rng.uniform());
  return b;
}

}  // namespace

TEST_CASE("scalar is always available and active resolves") {
  CHECK(simd::isa_available(simd::Isa::scalar));
  CHECK(simd::kernels(simd::Isa::scalar).isa == simd::Isa::scalar);
  const auto& k = simd::active();
  CHECK(simd::isa_available(k.isa));
}

TEST_CASE("em_lanes variants are bit-identical") {
  if (!simd::isa_available(simd::Isa::avx2)) {
    MESSAGE("avx2 unavailable; only the scalar kernel is exercised");
    return;
  }
  const auto& ref = simd::kernels(simd::Isa::scalar);
  const auto& vec = simd::kernels(simd::Isa::avx2);
  for (std::size_t lanes : {1, 3, 4, 7, 64}) {
    for (std::size_t banks : {0, 1, 5}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto a = random_batch(lanes, banks, seed * 131 + lanes + banks);
        auto b = a;
        for (int step = 0; step < 10; ++step) {
          ref.em_lanes(a.args());
          vec.em_lanes(b.args());
        }
        for (std::size_t l = 0; l < lanes; ++l) REQUIRE(a.x[l] == b.x[l]);
        for (std::size_t i = 0; i < a.y.size(); ++i) REQUIRE(a.y[i] == b.y[i]);
      }
    }
  }
}

TEST_CASE("dot variants agree to rounding") {
  if (!simd::isa_available(simd::Isa::avx2)) return;
  Philox rng(3, 0, StreamPurpose::misc);
  for (std::size_t n : {0, 1, 5, 16, 1001}) {
    std::vector<double> a(n), b(n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform() - 0.5;
      b[i] = rng.uniform() - 0.5;
      scale += std::abs(a[i] * b[i]);
    }
    const double s = simd::detail::dot_scalar(a.data(), b.data(), n);
    const double v = simd::kernels(simd::Isa::avx2).dot(a.data(), b.data(), n);
    CHECK(std::abs(s - v) <= 1e-14 * (scale + 1.0));
  }
}

TEST_CASE("select switches the active table") {
  const auto original = simd::active().isa;
  simd::select(simd::Isa::scalar);
  CHECK(simd::active().isa == simd::Isa::scalar);
  simd::select(original);
  CHECK(simd::active().isa == original);
}
