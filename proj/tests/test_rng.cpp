#include <doctest.h>

#include <cmath>
#include <set>

#include "seedbank/rng.hpp"

using namespace seedbank;

TEST_CASE("philox known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  Philox a(42, 3, StreamPurpose::forward_noise);
  Philox b(42, 3, StreamPurpose::forward_noise);
  for (int i = 0; i < 100; ++i) {
    REQUIRE(a() == b());
  }

  std::set<std::uint32_t> firsts;
  firsts.insert(Philox(42, 3, StreamPurpose::forward_noise)());
  firsts.insert(Philox(42, 4, StreamPurpose::forward_noise)());
  firsts.insert(Philox(42, 3, StreamPurpose::dual)());
  firsts.insert(Philox(43, 3, StreamPurpose::forward_noise)());
  CHECK(firsts.size() == 4);
}

TEST_CASE("uniform doubles stay in range with the right mean") {
  Philox rng(7, 0, StreamPurpose::misc);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const double v = rng.uniform_pos();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(v > 0.0);
    REQUIRE(v <= 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}
