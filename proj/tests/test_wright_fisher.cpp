#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "oracles.hpp"
#include "seedbank/error.hpp"
#include "seedbank/stats.hpp"
#include "seedbank/wright_fisher.hpp"

using namespace seedbank;

namespace {

WFParams two_banks(std::int64_t N) {
  return build_model(SeedBankMeasure::discrete({{0.5, 1}, {2, 1}}), N, 4, 2.0);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::usage_error;
}

}  // namespace

TEST_CASE("hypergeometric sampler matches its pmf") {
  Philox rng(11, 0, StreamPurpose::misc);
  const std::int64_t M = 20, K = 7, n = 6;
  std::vector<std::int64_t> counts(n + 1, 0);
  const int reps = 200000;
  for (int i = 0; i < reps; ++i) ++counts[sampling::hypergeometric(M, K, n, rng)];
  // chi-square goodness of fit against the exact pmf
  double chi = 0.0;
  int cells = 0;
  for (std::int64_t k = 0; k <= n; ++k) {
    const double p = std::exp(std::lgamma(K + 1.0) - std::lgamma(k + 1.0) - std::lgamma(K - k + 1.0) +
                              std::lgamma(M - K + 1.0) - std::lgamma(n - k + 1.0) -
                              std::lgamma(M - K - n + k + 1.0) - std::lgamma(M + 1.0) +
                              std::lgamma(n + 1.0) + std::lgamma(M - n + 1.0));
    const double e = p * reps;
    if (e < 5) continue;
    chi += (counts[k] - e) * (counts[k] - e) / e;
    ++cells;
  }
  CHECK(cells >= 5);
  CHECK(chi < 20.0);  // ~ chi2(6) 0.997 quantile

  CHECK(sampling::hypergeometric(10, 10, 4, rng) == 4);
  CHECK(sampling::hypergeometric(10, 0, 4, rng) == 0);
  CHECK(sampling::hypergeometric(10, 3, 0, rng) == 0);
  CHECK_THROWS_AS(sampling::hypergeometric(10, 11, 4, rng), Error);
}

TEST_CASE("binomial and multinomial samplers") {
  Philox rng(12, 0, StreamPurpose::misc);
  CHECK(sampling::binomial(50, 0.0, rng) == 0);
  CHECK(sampling::binomial(50, 1.0, rng) == 50);
  const auto counts = sampling::multinomial(5, {1.0, 0.0, 3.0}, rng);
  CHECK(counts.size() == 3);
  CHECK(counts[1] == 0);
  CHECK(counts[0] + counts[2] == 5);

  double mean0 = 0.0;
  const int reps = 100000;
  for (int i = 0; i < reps; ++i) mean0 += sampling::multinomial(4, {1.0, 3.0}, rng)[0];
  mean0 /= reps;
  CHECK(std::abs(mean0 - 1.0) <= 3 * std::sqrt(4 * 0.25 * 0.75 / reps));
}

TEST_CASE("build model") {
  auto p = build_model(SeedBankMeasure::discrete({{1, 1}}), 100, 2, 2.0);
  REQUIRE(p.banks.size() == 1);
  CHECK(p.banks[0].size == 100);
  CHECK(p.banks[0].rate == 1.0);
  CHECK(p.migrants == 1);

  p = two_banks(100);
  REQUIRE(p.banks.size() == 2);
  CHECK(p.banks[0].size == 200);
  CHECK(p.banks[1].size == 50);
  CHECK(p.banks[0].rate == 0.5);
  CHECK(p.banks[1].rate == 2.0);
  CHECK(p.migrants == 2);

  const auto g = build_model(SeedBankMeasure::gamma(2, 1, 2), 2000, 8, 4.0);
  REQUIRE(g.banks.size() == 8);
  CHECK(g.migrants == 2);
  double total = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    const auto& b = g.banks[i];
    total += b.mass;
    CHECK(b.rate == doctest::Approx(b.mass * 2000.0 / static_cast<double>(b.size)).epsilon(1e-15));
    // Rounding M_i moves the rate by at most half a unit of M_i, relatively.
    CHECK(std::abs(b.rate - 0.5 * (i + 1)) <= 0.5 * (i + 1) / static_cast<double>(b.size));
    if (i < 7) {
      CHECK(std::abs(b.mass - oracle::gamma_bin_mass(2, 1, 2, 0.5 * i, 0.5 * (i + 1))) <= 1e-9);
    }
  }
  // The tail beyond the cutoff is lumped into the last bin.
  CHECK(std::abs(g.banks[7].mass - oracle::gamma_bin_mass(2, 1, 2, 3.5, INFINITY)) <= 1e-9);
  CHECK(total == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("build model rejects what the model cannot represent") {
  CHECK(code_of([] { build_model(SeedBankMeasure::discrete({{1, 1.5}}), 100, 2, 2.0); }) ==
        ErrorCode::non_integer_mass);
  // M = round(1 * 10 / 8) = 1 < c = 2 for the fast bin.
  CHECK(code_of([] {
          build_model(SeedBankMeasure::discrete({{0.5, 1}, {8, 1}}), 10, 16, 8.0);
        }) == ErrorCode::bank_too_small);
  CHECK(code_of([] { build_model(SeedBankMeasure::discrete({{1, 2}}), 1, 1, 1.0); }) ==
        ErrorCode::invalid_parameter);

  WFParams bad = two_banks(100);
  bad.migrants = 0;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::invalid_parameter);
  CHECK(code_of([&] {
          rescaled_ensemble(bad, WFState{50, {100, 25}}, {});
        }) == ErrorCode::invalid_parameter);
}

TEST_CASE("embed") {
  const auto p = two_banks(100);
  auto z = embed(WFState{100, {200, 50}}, p);
  CHECK(z.x == 1.0);
  CHECK(z.y == std::vector<double>{1.0, 1.0});
  z = embed(WFState{0, {0, 0}}, p);
  CHECK(z.x == 0.0);
  CHECK(z.y == std::vector<double>{0.0, 0.0});
  const auto s = WFState::from_frequencies(p, 0.5, {0.25, 0.75});
  CHECK(s.active == 50);
  CHECK(s.dormant == std::vector<std::int64_t>{50, 38});
  z = embed(WFState{50, {50, 37}}, p);
  CHECK(z.x == 0.5);
  CHECK(z.y[0] == 0.25);
  CHECK(z.y[1] == 0.74);
  CHECK(code_of([&] { embed(WFState{101, {0, 0}}, p); }) == ErrorCode::invalid_state);
}

TEST_CASE("absorbing states and lattice invariants") {
  const auto p = two_banks(100);
  Philox rng(5, 0, StreamPurpose::wright_fisher);
  for (const WFState& s0 : {WFState{100, {200, 50}}, WFState{0, {0, 0}}}) {
    WFState s = s0;
    for (int k = 0; k < 1000; ++k) {
      s = wf_step(s, p, rng);
      REQUIRE(s.active == s0.active);
      REQUIRE(s.dormant == s0.dormant);
    }
  }
  WFState s{37, {120, 9}};
  for (int k = 0; k < 20000; ++k) {
    s = wf_step(s, p, rng);
    REQUIRE_NOTHROW(validate_state(s, p));
  }
}

TEST_CASE("one-step moments match exact enumeration") {
  const auto p = two_banks(100);
  const auto exact = oracle::wf_one_step(100, 2, {1.0, 1.0}, {200, 50}, 0.5, {0.25, 0.76});
  // The drift identity itself: E[x'] = ((N - c) x + sum c_i y_i) / N.
  CHECK(exact.mean == doctest::Approx((98 * 0.5 + 0.25 + 0.76) / 100).epsilon(1e-12));

  const WFState s0{50, {50, 38}};
  const int reps = 100000;
  double sum = 0.0, sq = 0.0, quad = 0.0;
  for (int r = 0; r < reps; ++r) {
    Philox rng(99, static_cast<std::uint64_t>(r), StreamPurpose::wright_fisher);
    const double x = wf_step(s0, p, rng).x(p);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / reps;
  const double var = (sq - reps * mean * mean) / (reps - 1);
  for (int r = 0; r < reps; ++r) {
    Philox rng(99, static_cast<std::uint64_t>(r), StreamPurpose::wright_fisher);
    const double d = wf_step(s0, p, rng).x(p) - mean;
    quad += d * d * d * d;
  }
  const double se_mean = std::sqrt(var / reps);
  const double se_var = std::sqrt((quad / reps - var * var) / reps);
  CHECK(std::abs(mean - exact.mean) <= 3 * se_mean);
  CHECK(std::abs(var - exact.variance) <= 3 * se_var);
}

TEST_CASE("relabeling identical banks leaves the law invariant") {
  // Two banks with the same (M, c): swap their roles and compare the law of
  // (x', sorted y') by chi-square.
  WFParams p;
  p.N = 40;
  p.migrants = 2;
  p.banks = {{40, 1.0, 1.0}, {40, 1.0, 1.0}};
  p.validate();
  const WFState a{20, {10, 30}};
  const WFState b{20, {30, 10}};
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, std::pair<std::int64_t, std::int64_t>> table;
  const int reps = 50000;
  for (int r = 0; r < reps; ++r) {
    Philox ra(1, static_cast<std::uint64_t>(r), StreamPurpose::wright_fisher);
    Philox rb(2, static_cast<std::uint64_t>(r), StreamPurpose::wright_fisher);
    auto sa = wf_step(a, p, ra);
    auto sb = wf_step(b, p, rb);
    std::sort(sa.dormant.begin(), sa.dormant.end());
    std::sort(sb.dormant.begin(), sb.dormant.end());
    ++table[{sa.active, sa.dormant[0], sa.dormant[1]}].first;
    ++table[{sb.active, sb.dormant[0], sb.dormant[1]}].second;
  }
  std::vector<std::int64_t> ca, cb;
  for (const auto& [key, v] : table) {
    ca.push_back(v.first);
    cb.push_back(v.second);
  }
  CHECK(stats::chi_square_two_sample(ca, cb).p_value > 0.001);
}

TEST_CASE("rescaled ensemble") {
  const auto p = two_banks(100);
  const auto ones = rescaled_ensemble(p, WFState{100, {200, 50}}, {.t_max = 1.0, .reps = 10, .seed = 1, .record_stride = 25});
  REQUIRE(ones.size() == 5);
  for (const auto& pt : ones) {
    CHECK(pt.mean_x == 1.0);
    CHECK(pt.var_x == 0.0);
  }
  CHECK(ones.back().t == 1.0);

  const WFState s0{50, {100, 25}};
  const auto a = rescaled_ensemble(p, s0, {.t_max = 0.5, .reps = 200, .seed = 3, .record_stride = 10, .threads = 1});
  const auto b = rescaled_ensemble(p, s0, {.t_max = 0.5, .reps = 200, .seed = 3, .record_stride = 10, .threads = 4});
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].mean_x == b[k].mean_x);
    CHECK(a[k].var_x == b[k].var_x);
  }
}

TEST_CASE("embedded mean follows the diffusion's first moments") {
  const auto p = build_model(SeedBankMeasure::discrete({{1, 1}}), 2000, 1, 1.0);
  const auto s0 = WFState::from_frequencies(p, 0.5, {0.1});
  const auto res = rescaled_ensemble(p, s0, {.t_max = 1.0, .reps = 400, .seed = 8, .record_stride = 2000, .threads = 1});
  const double target = moment_ode(embed(s0, p), p.measure(), 1.0).x;
  CHECK(std::abs(res.back().mean_x - target) <= 0.02);
  CHECK(std::abs(res.back().mean_x - target) <= 3 * res.back().se_x + 1e-3);
}
