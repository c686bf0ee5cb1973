#include "seedbank/app.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "seedbank/dual.hpp"
#include "seedbank/duality.hpp"
#include "seedbank/error.hpp"
#include "seedbank/forward.hpp"
#include "seedbank/wright_fisher.hpp"

namespace seedbank::app {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

namespace {

std::ofstream open_output(const fs::path& out_dir, const std::string& name) {
  fs::create_directories(out_dir);
  std::ofstream file(out_dir / name, std::ios::binary);
  if (!file) {
    throw Error(ErrorCode::usage_error, "cannot write " + (out_dir / name).string());
  }
  return file;
}

void write_json(const fs::path& out_dir, const std::string& name, const json& doc) {
  auto file = open_output(out_dir, name);
  file << doc.dump(2) << '\n';
}

void write_summary_csv(std::ostream& os, const std::vector<EnsemblePoint>& summary) {
  os << "t,mean_x,var_x,se_x\n";
  for (const auto& p : summary) {
    os << format_double(p.t) << ',' << format_double(p.mean_x) << ',' << format_double(p.var_x)
       << ',' << format_double(p.se_x) << '\n';
  }
}

std::string csv_quote(const std::string& field) {
  std::string out = "\"";
  for (char ch : field) {
    out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  }
  return out + '"';
}

std::string describe(const DualState& s) {
  std::ostringstream os;
  os << "n=" << s.active << " m={";
  bool first = true;
  for (const auto& [rate, count] : s.dormant) {
    os << (first ? "" : " ") << format_double(rate) << ':' << count;
    first = false;
  }
  os << '}';
  return os.str();
}

PathConfig path_config(const RunConfig& cfg) {
  return {cfg.sim.dt, cfg.sim.t_max, cfg.sim.seed, cfg.sim.record_stride};
}

DiffusionState initial_state(const RunConfig& cfg) { return {0.0, cfg.x0, cfg.y0}; }

json estimate_json(const MomentEstimate& e) { return {{"value", e.value}, {"se", e.se}}; }

int run_forward(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const auto mu = cfg.simulation_measure();
  const auto pcfg = path_config(cfg);
  auto file = open_output(out_dir, "forward.csv");
  if (cfg.sim.mode == "ensemble") {
    const auto result =
        simulate_ensemble(initial_state(cfg), mu, pcfg, {cfg.sim.reps, cfg.sim.threads}, false);
    write_summary_csv(file, result.summary);
  } else {
    file << "t,x";
    for (std::size_t i = 1; i <= mu.size(); ++i) {
      file << ",y_" << i;
    }
    file << '\n';
    for (const auto& s : simulate_path(initial_state(cfg), mu, pcfg, 0)) {
      file << format_double(s.t) << ',' << format_double(s.x);
      for (double y : s.y) {
        file << ',' << format_double(y);
      }
      file << '\n';
    }
  }
  log << "forward: wrote " << (out_dir / "forward.csv").string() << '\n';
  return kExitOk;
}

int run_sve(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const auto mu = cfg.simulation_measure();
  const auto pcfg = path_config(cfg);
  const std::size_t steps = step_count(pcfg);
  auto time_of = [&](std::size_t k) {
    return k == steps ? pcfg.t_max : static_cast<double>(k) * pcfg.dt;
  };
  auto recorded = [&](std::size_t k) { return k % pcfg.record_stride == 0 || k == steps; };

  auto file = open_output(out_dir, "sve.csv");
  if (cfg.sim.mode == "ensemble") {
    std::vector<double> sum(steps + 1, 0.0), sum_sq(steps + 1, 0.0);
    for (std::size_t r = 0; r < cfg.sim.reps; ++r) {
      const auto noise = brownian_increments(pcfg.seed, r, pcfg);
      const auto x = simulate_sve_path(cfg.x0, cfg.y0, mu, pcfg, noise);
      for (std::size_t k = 0; k <= steps; ++k) {
        sum[k] += x[k];
        sum_sq[k] += x[k] * x[k];
      }
    }
    const double n = static_cast<double>(cfg.sim.reps);
    std::vector<EnsemblePoint> summary;
    for (std::size_t k = 0; k <= steps; ++k) {
      if (recorded(k)) {
        const double mean = sum[k] / n;
        const double var =
            cfg.sim.reps > 1 ? std::max(0.0, (sum_sq[k] - n * mean * mean) / (n - 1.0)) : 0.0;
        summary.push_back({time_of(k), mean, var, std::sqrt(var / n)});
      }
    }
    write_summary_csv(file, summary);
  } else {
    const auto noise = brownian_increments(pcfg.seed, 0, pcfg);
    const auto x = simulate_sve_path(cfg.x0, cfg.y0, mu, pcfg, noise);
    file << "t,x\n";
    for (std::size_t k = 0; k <= steps; ++k) {
      if (recorded(k)) {
        file << format_double(time_of(k)) << ',' << format_double(x[k]) << '\n';
      }
    }
  }
  log << "sve: wrote " << (out_dir / "sve.csv").string() << '\n';
  return kExitOk;
}

WFParams wf_params(const RunConfig& cfg) {
  const auto mu = cfg.source_measure();
  if (cfg.measure.bins) {
    return build_model(mu, cfg.wf.N, *cfg.measure.bins, *cfg.measure.cutoff);
  }
  return build_model(cfg.simulation_measure(), cfg.wf.N);
}

WFState wf_initial(const RunConfig& cfg, const WFParams& params) {
  std::vector<double> y = cfg.y0;
  // Lumping the tail can append one bank beyond the configured bins.
  while (y.size() < params.banks.size()) {
    y.push_back(y.empty() ? cfg.x0 : y.back());
  }
  return WFState::from_frequencies(params, cfg.x0, y);
}

int run_wf(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const auto params = wf_params(cfg);
  const auto z0 = wf_initial(cfg, params);
  const auto summary = rescaled_ensemble(
      params, z0, {cfg.wf.t_max, cfg.wf.reps, cfg.sim.seed, cfg.sim.record_stride, cfg.sim.threads});
  auto file = open_output(out_dir, "wf.csv");
  write_summary_csv(file, summary);
  log << "wf: wrote " << (out_dir / "wf.csv").string() << '\n';
  return kExitOk;
}

int run_dual(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const auto mu = cfg.source_measure();
  Philox rng(cfg.sim.seed, 0, StreamPurpose::dual);
  const auto trajectory = simulate_dual(cfg.dual_initial, mu, cfg.sim.t_max, rng, true);
  auto file = open_output(out_dir, "dual_events.csv");
  file << "time,event_kind,detail\n";
  for (const auto& e : trajectory.log) {
    file << format_double(e.time) << ',' << to_string(e.event) << ','
         << csv_quote("rate=" + format_double(e.rate) + " " + describe(e.after)) << '\n';
  }
  json dormant = json::array();
  for (const auto& [rate, count] : trajectory.final_state.dormant) {
    dormant.push_back({rate, count});
  }
  write_json(out_dir, "dual_final.json",
             {{"t", cfg.sim.t_max},
              {"active", trajectory.final_state.active},
              {"dormant", dormant},
              {"events", trajectory.log.size()},
              {"seed", cfg.sim.seed},
              {"config_hash", config_hash(cfg)},
              {"config", cfg.resolved}});
  log << "dual: " << trajectory.log.size() << " events, final " << describe(trajectory.final_state)
      << '\n';
  return kExitOk;
}

int run_coalescent(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  if (!cfg.coalescent_initial) {
    throw Error(ErrorCode::validation_error, "coalescent needs coalescent.initial or coalescent.K");
  }
  const auto mu = cfg.source_measure();
  Philox rng(cfg.sim.seed, 0, StreamPurpose::coalescent);
  MarkedPartition p = *cfg.coalescent_initial;
  auto file = open_output(out_dir, "coalescent_events.csv");
  file << "time,event_kind,detail\n";
  double clock = 0.0;
  std::size_t events = 0;
  while (coalescent_rate(p, mu) > 0.0) {
    auto step = coalescent_step(p, mu, rng);
    if (clock + step.holding_time > cfg.sim.t_max) {
      break;
    }
    clock += step.holding_time;
    p = std::move(step.next);
    ++events;
    const char* kind = step.event == CoalescentEvent::merge          ? "merge"
                       : step.event == CoalescentEvent::deactivation ? "deactivation"
                                                                     : "reactivation";
    file << format_double(clock) << ',' << kind << ',' << csv_quote(to_json(p)) << '\n';
  }
  const auto counts = block_counting(p);
  write_json(out_dir, "coalescent_final.json",
             {{"t", cfg.sim.t_max},
              {"partition", json::parse(to_json(p))},
              {"block_count", describe(counts)},
              {"events", events},
              {"seed", cfg.sim.seed},
              {"config_hash", config_hash(cfg)},
              {"config", cfg.resolved}});
  log << "coalescent: " << events << " events, final " << to_json(p) << '\n';
  return kExitOk;
}

int run_duality_check(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const auto mu_n = cfg.simulation_measure();
  const auto mu = mu_n.as_measure();
  const auto z0 = initial_state(cfg);
  const double t = cfg.sim.t_max;
  const auto forward =
      forward_side(z0, cfg.dual_initial, mu_n, t, cfg.sim.reps, path_config(cfg), cfg.sim.threads);
  MomentEstimate dual;
  if (cfg.duality_target == "exact") {
    dual = {dual_moment_exact(cfg.dual_initial, cfg.x0, cfg.y0, mu, t), 0.0, 0};
  } else {
    dual = dual_side(cfg.x0, bank_step_function(mu_n, cfg.y0), cfg.dual_initial, mu, t,
                     cfg.sim.reps, cfg.sim.seed, cfg.sim.threads);
  }
  const auto gap = duality_gap(forward, dual);
  write_json(out_dir, "duality_report.json",
             {{"forward", estimate_json(forward)},
              {"dual", estimate_json(dual)},
              {"target", cfg.duality_target},
              {"z", gap.z},
              {"pass", gap.pass},
              {"seed", cfg.sim.seed},
              {"config_hash", config_hash(cfg)},
              {"config", cfg.resolved}});
  log << "duality-check: forward " << format_double(forward.value) << " (se "
      << format_double(forward.se) << "), dual " << format_double(dual.value) << " (se "
      << format_double(dual.se) << "), z " << format_double(gap.z)
      << (gap.pass ? " PASS" : " FAIL") << '\n';
  return gap.pass ? kExitOk : kExitCheckFailed;
}

int run_scaling_check(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const auto params = wf_params(cfg);
  const auto z0 = wf_initial(cfg, params);
  const auto generations =
      static_cast<std::size_t>(std::floor(static_cast<double>(params.N) * cfg.wf.t_max + 1e-9));
  const auto summary = rescaled_ensemble(
      params, z0,
      {cfg.wf.t_max, cfg.wf.reps, cfg.sim.seed, std::max<std::size_t>(1, generations),
       cfg.sim.threads});
  const auto& last = summary.back();
  const auto ode = moment_ode(embed(z0, params), params.measure(), last.t);
  const double diff = std::abs(last.mean_x - ode.x);
  const bool pass = diff <= cfg.scaling_tolerance;

  json banks = json::array();
  for (const auto& b : params.banks) {
    banks.push_back({{"size", b.size}, {"mass", b.mass}, {"rate", b.rate}});
  }
  write_json(out_dir, "scaling_report.json",
             {{"wf", {{"value", last.mean_x}, {"se", last.se_x}}},
              {"ode", ode.x},
              {"t", last.t},
              {"diff", diff},
              {"tolerance", cfg.scaling_tolerance},
              {"pass", pass},
              {"banks", banks},
              {"seed", cfg.sim.seed},
              {"config_hash", config_hash(cfg)},
              {"config", cfg.resolved}});
  log << "scaling-check: WF mean " << format_double(last.mean_x) << ", ODE "
      << format_double(ode.x) << ", |diff| " << format_double(diff)
      << (pass ? " PASS" : " FAIL") << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run(const std::string& command, const RunConfig& cfg, const fs::path& out_dir,
        std::ostream& log) {
  if (command == "forward") return run_forward(cfg, out_dir, log);
  if (command == "sve") return run_sve(cfg, out_dir, log);
  if (command == "wf") return run_wf(cfg, out_dir, log);
  if (command == "dual") return run_dual(cfg, out_dir, log);
  if (command == "coalescent") return run_coalescent(cfg, out_dir, log);
  if (command == "duality-check") return run_duality_check(cfg, out_dir, log);
  if (command == "scaling-check") return run_scaling_check(cfg, out_dir, log);
  throw Error(ErrorCode::usage_error, "unknown subcommand `" + command + "`");
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App cli{"Wright-Fisher diffusion with a continuum of seed-banks: simulators and checks"};
  std::string command;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  cli.add_option("command", command, "forward | sve | wf | dual | coalescent | duality-check | scaling-check")
      ->required();
  cli.add_option("--config", config_path, "Config file (key = value lines or JSON)")->required();
  cli.add_option("--out", out_dir, "Output directory");
  cli.add_option("--seed", seed, "Override sim.seed");
  cli.add_option("--reps", reps, "Override sim.reps (and wf.reps)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << cli.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << cli.help();
    return kExitUsage;
  }

  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
    err << "unknown subcommand `" << command << "`\n";
    return kExitUsage;
  }

  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
      throw Error(ErrorCode::usage_error, "cannot read config " + config_path);
    }
    std::ostringstream text;
    text << in.rdbuf();
    auto doc_cfg = parse_config(text.str());
    if (seed || reps) {
      json doc = doc_cfg.resolved;
      if (seed) doc["sim"]["seed"] = *seed;
      if (reps) {
        doc["sim"]["reps"] = *reps;
        doc["wf"]["reps"] = *reps;
      }
      doc_cfg = config_from_json(doc);
    }
    return run(command, doc_cfg, out_dir, out);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace seedbank::app
