#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "seedbank/error.hpp"
#include "seedbank/forward.hpp"

using namespace seedbank;

namespace {

DiscretizedMeasure atoms(std::vector<Atom> a) { return DiscretizedMeasure::from_atoms(a); }

const DiscretizedMeasure kOne = atoms({{1, 1}});
const DiscretizedMeasure kTwo = atoms({{0.5, 1}, {2, 1}});

double max_gap(const std::vector<double>& a, const std::vector<DiffusionState>& b) {
  double gap = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) gap = std::max(gap, std::abs(a[k] - b[k].x));
  return gap;
}

}  // namespace

TEST_CASE("drift") {
  CHECK(drift_x(DiffusionState::uniform(0.5, 2), kTwo) == 0.0);
  CHECK(drift_x({0, 0, {1}}, kOne) == 1.0);
  CHECK(drift_x({0, 1, {0, 0}}, kTwo) == -2.0);
  CHECK_THROWS_AS(drift_x({0, 1, {0}}, kTwo), Error);
}

TEST_CASE("em step") {
  const auto ones = DiffusionState::uniform(1.0, 2);
  const auto same = em_step(ones, kTwo, 0.3, 1.7);
  CHECK(same.x == 1.0);
  CHECK(same.y == ones.y);

  auto z = em_step({0, 1, {0}}, kOne, std::log(2.0), 0.0);
  CHECK(z.y[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(z.x == doctest::Approx(1 - std::log(2.0)).epsilon(1e-15));

  z = em_step({0, 0, {1}}, kOne, 0.1, 0.0);
  CHECK(z.x == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(z.y[0] == doctest::Approx(std::exp(-0.1)).epsilon(1e-15));
  CHECK(z.t == doctest::Approx(0.1));

  // Large noise is clamped back into the box.
  CHECK(em_step({0, 0.5, {0.5}}, kOne, 0.01, 10.0).x == 1.0);
  CHECK(em_step({0, 0.5, {0.5}}, kOne, 0.01, -10.0).x == 0.0);

  try {
    em_step(ones, kTwo, 0.0, 0.0);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::nonpositive_dt);
  }
}

TEST_CASE("exponential integrator is exact for frozen x") {
  // With x held at a constant, y(t) = x + (y0 - x) e^{-rate t}.
  const auto mu = atoms({{0.7, 1}, {3, 0.5}});
  const double x = 0.35;
  DiffusionState z{0, x, {0.9, 0.05}};
  const double dt = 0.0137;
  for (int k = 1; k <= 500; ++k) {
    z = em_step(z, mu, dt, 0.0);
    z.x = x;
    for (std::size_t i = 0; i < 2; ++i) {
      const double y0 = i == 0 ? 0.9 : 0.05;
      const double exact = x + (y0 - x) * std::exp(-mu.atoms[i].rate * dt * k);
      REQUIRE(std::abs(z.y[i] - exact) <= 1e-13);
    }
  }
}

TEST_CASE("absorbing paths") {
  PathConfig cfg{.dt = 1e-3, .t_max = 1.0, .seed = 5};
  for (double p : {0.0, 1.0}) {
    const auto path = simulate_path(DiffusionState::uniform(p, 2), kTwo, cfg);
    CHECK(path.size() == 1001);
    for (const auto& z : path) {
      REQUIRE(z.x == p);
      REQUIRE(z.y[0] == p);
      REQUIRE(z.y[1] == p);
    }
  }
}

TEST_CASE("path recording and determinism") {
  PathConfig cfg{.dt = 0.003, .t_max = 0.5, .seed = 9, .record_stride = 10};
  CHECK(step_count(cfg) == 167);
  CHECK(step_width(cfg, 166) == doctest::Approx(0.5 - 166 * 0.003));
  const auto a = simulate_path({0, 0.4, {0.2, 0.7}}, kTwo, cfg, 3);
  const auto b = simulate_path({0, 0.4, {0.2, 0.7}}, kTwo, cfg, 3);
  const auto c = simulate_path({0, 0.4, {0.2, 0.7}}, kTwo, cfg, 4);
  REQUIRE(a.size() == 18);
  CHECK(a.back().t == doctest::Approx(0.5));
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    REQUIRE(a[k].x == b[k].x);
    REQUIRE(a[k].y == b[k].y);
    differs |= a[k].x != c[k].x;
  }
  CHECK(differs);

  // The explicit-noise overload reproduces the seeded run.
  const auto noise = brownian_increments(9, 3, cfg);
  CHECK(noise.size() == 167);
  const auto d = simulate_path({0, 0.4, {0.2, 0.7}}, kTwo, cfg, noise);
  for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(a[k].x == d[k].x);
}

TEST_CASE("state bounds over random simulations") {
  Philox rng(2024, 0, StreamPurpose::misc);
  PathConfig cfg{.dt = 1e-3, .t_max = 0.05};
  for (int run = 0; run < 10000; ++run) {
    const int n = 1 + static_cast<int>(rng() % 5);
    std::vector<Atom> a;
    for (int i = 0; i < n; ++i) a.push_back({0.1 * (i + 1) + 5.0 * rng.uniform(), 0.1 + 3.0 * rng.uniform()});
    std::sort(a.begin(), a.end(), [](auto& l, auto& r) { return l.rate < r.rate; });
    DiffusionState z0{0, rng.uniform(), {}};
    for (int i = 0; i < n; ++i) z0.y.push_back(rng.uniform());
    cfg.seed = static_cast<std::uint64_t>(run);
    for (const auto& z : simulate_path(z0, atoms(a), cfg)) {
      REQUIRE_NOTHROW(check_in_unit_box(z));
    }
  }
}

TEST_CASE("moment ode") {
  const auto z = moment_ode(DiffusionState::uniform(0.3, 2), kTwo, 2.0);
  CHECK(z.x == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(z.y[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(z.y[1] == doctest::Approx(0.3).epsilon(1e-12));

  CHECK(moment_ode({0, 0.42, {}}, DiscretizedMeasure{}, 3.0).x == 0.42);

  // Frozen 2x2 closed form (1 + e^{-2}) / 2.
  const auto w = moment_ode({0, 1, {0}}, kOne, 1.0);
  CHECK(std::abs(w.x - 0.56766764161830641) <= 1e-12);
  CHECK(std::abs(w.y[0] - (1 - std::exp(-2.0)) / 2) <= 1e-12);
}

TEST_CASE("sve fixed points") {
  PathConfig cfg{.dt = 1e-3, .t_max = 1.0};
  const std::vector<double> zero(step_count(cfg), 0.0);
  const std::vector<double> ones{1.0, 1.0};
  for (double xk : simulate_sve_path(1.0, ones, kTwo, cfg, zero)) {
    REQUIRE(std::abs(xk - 1.0) <= 1e-8);
  }
  const std::vector<double> zeros{0.0, 0.0};
  for (double xk : simulate_sve_path(0.0, zeros, kTwo, cfg, zero)) {
    REQUIRE(xk == 0.0);
  }
}

TEST_CASE("sve without noise follows the moment equations") {
  // Deterministically both formulations solve the same linear system.
  PathConfig cfg{.dt = 1e-3, .t_max = 1.0};
  const std::vector<double> zero(step_count(cfg), 0.0);
  const std::vector<double> y0{0.9, 0.1};
  const auto x = simulate_sve_path(0.2, y0, kTwo, cfg, zero);
  const auto exact = moment_ode({0, 0.2, y0}, kTwo, 1.0);
  CHECK(x.back() == doctest::Approx(exact.x).epsilon(5e-3));
}

TEST_CASE("sve and sde agree pathwise on shared noise") {
  const std::vector<double> y0{0.5};
  double prev = 1.0;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    PathConfig cfg{.dt = dt, .t_max = 1.0, .seed = 77};
    // Common fine noise, coarsened so every dt sees the same Brownian path.
    PathConfig fine = cfg;
    fine.dt = 1e-3;
    const auto noise = coarsen_increments(brownian_increments(77, 0, fine),
                                          static_cast<std::size_t>(std::lround(dt / 1e-3)));
    const auto sde = simulate_path({0, 0.5, y0}, kOne, cfg, noise);
    const auto sve = simulate_sve_path(0.5, y0, kOne, cfg, noise);
    const double gap = max_gap(sve, sde);
    CHECK(gap <= prev);
    prev = gap;
  }
  CHECK(prev <= 0.05);
}

TEST_CASE("ensemble replicates equal single paths for any thread count") {
  PathConfig cfg{.dt = 1e-2, .t_max = 0.5, .seed = 31, .record_stride = 5};
  const DiffusionState z0{0, 0.3, {0.6, 0.1}};
  const auto one = simulate_ensemble(z0, kTwo, cfg, {.reps = 130, .threads = 1});
  const auto many = simulate_ensemble(z0, kTwo, cfg, {.reps = 130, .threads = 3});
  REQUIRE(one.terminal.size() == 130);
  for (std::size_t r = 0; r < 130; ++r) {
    const auto path = simulate_path(z0, kTwo, cfg, r);
    REQUIRE(one.terminal[r].x == path.back().x);
    REQUIRE(one.terminal[r].y == path.back().y);
    REQUIRE(many.terminal[r].x == path.back().x);
  }
  REQUIRE(one.summary.size() == many.summary.size());
  for (std::size_t k = 0; k < one.summary.size(); ++k) {
    CHECK(one.summary[k].mean_x == many.summary[k].mean_x);
    CHECK(one.summary[k].var_x == many.summary[k].var_x);
  }
  CHECK(one.summary.front().var_x == 0.0);
}

TEST_CASE("monte carlo mean follows the moment equations") {
  for (const auto* mu : {&kOne, &kTwo}) {
    for (std::uint64_t seed : {1, 2, 3}) {
      PathConfig cfg{.dt = 1e-2, .t_max = 1.0, .seed = seed, .record_stride = 50};
      DiffusionState z0{0, 0.5, std::vector<double>(mu->size(), 0.5)};
      z0.y[0] = 0.1;
      const auto res = simulate_ensemble(z0, *mu, cfg, {.reps = 4000, .threads = 1}, false);
      for (const auto& pt : res.summary) {
        if (pt.t == 0.0) continue;
        // dt = 1e-2 leaves an O(dt) bias far below 3 SE at this sample size.
        CHECK(std::abs(pt.mean_x - moment_ode(z0, *mu, pt.t).x) <= 3 * pt.se_x);
      }
    }
  }
}
