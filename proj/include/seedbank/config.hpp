#pragma once

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "seedbank/dual.hpp"
#include "seedbank/measure.hpp"

namespace seedbank {

/// Validated run configuration.
///
/// The text format is one `dotted.key = <JSON value>` assignment per line;
/// `#` starts a comment. A document whose first non-blank character is `{`
/// is read as nested JSON instead, which is the form embedded in reports:
///
///     measure.kind = "discrete"
///     measure.atoms = [[1, 1]]
///     init.x = 0.5
///     init.y = 0.5
///     sim.reps = 100000
///     dual.initial = {"active": 2, "dormant": []}
struct RunConfig {
  struct Measure {
    SeedBankMeasure::Kind kind = SeedBankMeasure::Kind::discrete;
    std::vector<Atom> atoms;
    GammaShape gamma{};
    std::optional<int> bins;
    std::optional<double> cutoff;
  };
  struct Sim {
    double dt = 1e-3;
    double t_max = 1.0;
    std::size_t reps = 1;
    std::uint64_t seed = 0;
    std::size_t record_stride = 1;
    unsigned threads = 0;
    std::string mode = "path";  // path | ensemble
  };
  struct WF {
    std::int64_t N = 1000;
    double t_max = 1.0;
    std::size_t reps = 1;
  };

  Measure measure;
  double x0 = 0.5;
  std::vector<double> y0;  // resolved to one entry per seed-bank atom
  Sim sim;
  WF wf;
  DualState dual_initial;
  std::optional<MarkedPartition> coalescent_initial;
  std::string duality_target = "dual";  // dual | exact
  double scaling_tolerance = 0.02;

  /// Every key with defaults filled in, as nested JSON.
  nlohmann::json resolved;

  SeedBankMeasure source_measure() const;
  /// Binned measure when bins/cutoff are set, else the atoms themselves.
  DiscretizedMeasure simulation_measure() const;
};

RunConfig parse_config(const std::string& text);

/// Resolved config re-parsed from its JSON form.
RunConfig config_from_json(const nlohmann::json& doc);

/// 64-bit FNV-1a of the resolved config's canonical dump, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace seedbank
