#include <doctest.h>

#include <string>

#include "seedbank/config.hpp"
#include "seedbank/error.hpp"

using namespace seedbank;

namespace {

std::string error_text(const std::string& text, ErrorCode expected) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == expected);
    return e.what();
  }
  FAIL("config was accepted: " << text);
  return {};
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const auto cfg = parse_config("measure.kind = \"discrete\"\nmeasure.atoms = [[1, 1]]\n");
  CHECK(cfg.sim.dt == 1e-3);
  CHECK(cfg.sim.reps == 1);
  CHECK(cfg.sim.t_max == 1.0);
  CHECK(cfg.x0 == 0.5);
  CHECK(cfg.y0 == std::vector<double>{0.5});
  CHECK(cfg.dual_initial == DualState{2, {}});
  CHECK(cfg.duality_target == "dual");
  CHECK(cfg.wf.N == 1000);
  CHECK(cfg.resolved["sim"]["dt"] == 1e-3);
  CHECK(cfg.source_measure().mass() == 1.0);
}

TEST_CASE("full config") {
  const auto cfg = parse_config(R"(
# two banks
measure.kind = "discrete"
measure.atoms = [[0.5, 1], [2, 1]]   # rate, mass
init.x = 0.5
init.y = [0.25, 0.75]
sim.dt = 0.002
sim.reps = 1000
sim.seed = 18446744073709551615
sim.mode = "ensemble"
wf.N = 500
dual.initial = {"active": 1, "dormant": [[0.5, 1]]}
coalescent.K = 4
duality.target = "exact"
)");
  CHECK(cfg.y0 == std::vector<double>{0.25, 0.75});
  CHECK(cfg.sim.seed == 18446744073709551615ULL);
  CHECK(cfg.sim.mode == "ensemble");
  CHECK(cfg.wf.reps == 1000);  // follows sim.reps
  CHECK(cfg.dual_initial == DualState{1, {{0.5, 1}}});
  REQUIRE(cfg.coalescent_initial);
  CHECK(*cfg.coalescent_initial == MarkedPartition::singletons(4));
  CHECK(cfg.duality_target == "exact");
}

TEST_CASE("gamma config with bins") {
  const auto cfg = parse_config(
      "measure.kind = \"gamma\"\nmeasure.gamma = {\"shape\": 2, \"scale\": 1, \"mass\": 2}\n"
      "measure.bins = 8\nmeasure.cutoff = 4\ninit.y = 0.3\n");
  CHECK(cfg.simulation_measure().size() == 8);
  CHECK(cfg.y0.size() == 8);
  CHECK(cfg.source_measure().kind() == SeedBankMeasure::Kind::gamma);
}

TEST_CASE("validation errors name the field") {
  auto msg = error_text("measure.kind = \"discrete\"\nmeasure.atoms = [[1, -1]]\n",
                        ErrorCode::validation_error);
  CHECK(msg.find("measure.atoms[0].mass") != std::string::npos);

  msg = error_text("measure.kind = \"discrete\"\nmeasure.atoms = [[1, 1], [2, 1]]\ninit.y = [0.5]\n",
                   ErrorCode::validation_error);
  CHECK(msg.find("init.y") != std::string::npos);
}

TEST_CASE("every violation is reported") {
  const auto msg = error_text(
      "measure.kind = \"discrete\"\nmeasure.atoms = [[0, 1]]\nsim.dt = -1\nsim.reps = 0\n"
      "init.x = 2\nbogus.key = 1\n",
      ErrorCode::validation_error);
  for (const char* field : {"measure.atoms[0].rate", "sim.dt", "sim.reps", "init.x", "bogus"}) {
    CHECK_MESSAGE(msg.find(field) != std::string::npos, field);
  }
}

TEST_CASE("parse errors carry the line") {
  auto msg = error_text("measure.kind = \"discrete\"\nmeasure.atoms [[1, 1]]\n", ErrorCode::parse_error);
  CHECK(msg.find("line 2") != std::string::npos);
  msg = error_text("measure.kind = \"discrete\"\n\nmeasure.atoms = [[1, 1]\n", ErrorCode::parse_error);
  CHECK(msg.find("line 3") != std::string::npos);
  msg = error_text("sim.dt = 0.1\nsim.dt = 0.2\n", ErrorCode::parse_error);
  CHECK(msg.find("duplicate") != std::string::npos);
  msg = error_text("{\n  \"measure\": {\n    \"kind\": \n}", ErrorCode::parse_error);
  CHECK(msg.find("line 4") != std::string::npos);
}

TEST_CASE("resolved config round-trips") {
  const auto cfg = parse_config(
      "measure.kind = \"discrete\"\nmeasure.atoms = [[0.5, 1], [2, 1]]\ninit.y = [0.25, 0.75]\n"
      "sim.seed = 7\ncoalescent.initial = {\"blocks\": [[1, 2], [3]], \"flags\": [0, 2]}\n");
  const auto again = parse_config(cfg.resolved.dump());
  CHECK(again.resolved == cfg.resolved);
  CHECK(config_hash(again) == config_hash(cfg));
  CHECK(config_hash(cfg).size() == 16);

  // Reports embed the resolved config under "config".
  nlohmann::json report{{"z", 0.1}, {"config", cfg.resolved}};
  CHECK(parse_config(report.dump()).resolved == cfg.resolved);

  const auto other = parse_config(
      "measure.kind = \"discrete\"\nmeasure.atoms = [[0.5, 1], [2, 1]]\nsim.seed = 8\n");
  CHECK(config_hash(other) != config_hash(cfg));
}
