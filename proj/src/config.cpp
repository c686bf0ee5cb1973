#include "seedbank/config.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

#include "seedbank/error.hpp"

namespace seedbank {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Strips a `#` comment that is not inside a JSON string.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (in_string) {
      if (ch == '\\') {
        ++i;
      } else if (ch == '"') {
        in_string = false;
      }
    } else if (ch == '"') {
      in_string = true;
    } else if (ch == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') {
    return false;
  }
  for (std::size_t i = 0; i < key.size(); ++i) {
    const char ch = key[i];
    if (ch == '.' && key[i - 1] == '.') {
      return false;
    }
    if (!(std::isalpha(static_cast<unsigned char>(ch)) || std::isdigit(static_cast<unsigned char>(ch)) ||
          ch == '_' || ch == '.')) {
      return false;
    }
  }
  return true;
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    line += text[i] == '\n' ? 1 : 0;
  }
  return line;
}

json parse_key_values(const std::string& text) {
  json doc = json::object();
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) {
      throw Error(ErrorCode::parse_error, where + "expected `key = value`");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) {
      throw Error(ErrorCode::parse_error, where + "malformed key `" + key + "`");
    }
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::parse_error, where + "bad value for `" + key + "`: " + e.what());
    }
    std::string pointer = "/" + key;
    for (auto& ch : pointer) {
      ch = ch == '.' ? '/' : ch;
    }
    const json::json_pointer ptr(pointer);
    if (doc.contains(ptr)) {
      throw Error(ErrorCode::parse_error, where + "duplicate key `" + key + "`");
    }
    try {
      doc[ptr] = std::move(parsed);
    } catch (const json::exception&) {
      throw Error(ErrorCode::parse_error, where + "`" + key + "` conflicts with an earlier key");
    }
  }
  return doc;
}

// Collects every violation instead of stopping at the first one.
class Validator {
 public:
  explicit Validator(const json& doc) : doc_(doc) {}

  const json* find(const std::string& dotted) {
    std::string pointer = "/" + dotted;
    for (auto& ch : pointer) {
      ch = ch == '.' ? '/' : ch;
    }
    const json::json_pointer ptr(pointer);
    return doc_.contains(ptr) ? &doc_.at(ptr) : nullptr;
  }

  template <typename T>
  std::optional<T> get(const std::string& key) {
    const json* node = find(key);
    if (node == nullptr) {
      return std::nullopt;
    }
    bool ok = true;
    if constexpr (std::is_same_v<T, std::string>) {
      ok = node->is_string();
    } else if constexpr (std::is_integral_v<T>) {
      ok = node->is_number_integer();
      if constexpr (std::is_unsigned_v<T>) {
        ok = ok && (node->is_number_unsigned() || node->template get<std::int64_t>() >= 0);
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      ok = node->is_number();
    }
    if (!ok) {
      fail(key + " has the wrong type");
      return std::nullopt;
    }
    return node->template get<T>();
  }

  void fail(const std::string& message) { errors_.push_back(message); }
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  const json& doc_;
  std::vector<std::string> errors_;
};

const std::vector<std::pair<std::string, std::vector<std::string>>>& schema() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> keys{
      {"measure", {"kind", "atoms", "gamma", "bins", "cutoff"}},
      {"init", {"x", "y"}},
      {"sim", {"dt", "t_max", "reps", "seed", "record_stride", "threads", "mode"}},
      {"wf", {"N", "t_max", "reps"}},
      {"dual", {"initial"}},
      {"coalescent", {"initial", "K"}},
      {"duality", {"target"}},
      {"scaling", {"tolerance"}},
  };
  return keys;
}

void check_unknown_keys(const json& doc, Validator& v) {
  if (!doc.is_object()) {
    v.fail("config must be an object");
    return;
  }
  for (const auto& [section, value] : doc.items()) {
    const auto it = std::find_if(schema().begin(), schema().end(),
                                 [&](const auto& entry) { return entry.first == section; });
    if (it == schema().end()) {
      v.fail("unknown section `" + section + "`");
      continue;
    }
    if (!value.is_object()) {
      v.fail("`" + section + "` must be a table of keys");
      continue;
    }
    for (const auto& [key, unused] : value.items()) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
        v.fail("unknown key `" + section + "." + key + "`");
      }
    }
  }
}

json dual_state_json(const DualState& s) {
  json dormant = json::array();
  for (const auto& [rate, count] : s.dormant) {
    dormant.push_back({rate, count});
  }
  return {{"active", s.active}, {"dormant", dormant}};
}

}  // namespace

SeedBankMeasure RunConfig::source_measure() const {
  if (measure.kind == SeedBankMeasure::Kind::gamma) {
    return SeedBankMeasure::gamma(measure.gamma.shape, measure.gamma.scale, measure.gamma.mass);
  }
  return SeedBankMeasure::discrete(measure.atoms);
}

DiscretizedMeasure RunConfig::simulation_measure() const {
  const auto mu = source_measure();
  if (measure.bins && measure.cutoff) {
    return discretize(mu, *measure.bins, *measure.cutoff);
  }
  if (!mu.is_discrete()) {
    throw Error(ErrorCode::validation_error,
                "measure.bins and measure.cutoff are required to simulate a gamma measure");
  }
  return DiscretizedMeasure::from_atoms(mu.atoms());
}

RunConfig config_from_json(const json& doc) {
  Validator v(doc);
  check_unknown_keys(doc, v);
  RunConfig cfg;

  // measure
  const auto kind = v.get<std::string>("measure.kind");
  const bool has_atoms = v.find("measure.atoms") != nullptr;
  const bool has_gamma = v.find("measure.gamma") != nullptr;
  if (kind && *kind != "discrete" && *kind != "gamma") {
    v.fail("measure.kind must be \"discrete\" or \"gamma\"");
  }
  const std::string resolved_kind = kind ? *kind : (has_gamma && !has_atoms ? "gamma" : "discrete");
  cfg.measure.kind =
      resolved_kind == "gamma" ? SeedBankMeasure::Kind::gamma : SeedBankMeasure::Kind::discrete;
  bool measure_ok = true;
  if (cfg.measure.kind == SeedBankMeasure::Kind::discrete) {
    const json* atoms = v.find("measure.atoms");
    if (atoms == nullptr || !atoms->is_array() || atoms->empty()) {
      v.fail("measure.atoms must be a nonempty list of [rate, mass] pairs");
      measure_ok = false;
    } else {
      for (std::size_t i = 0; i < atoms->size(); ++i) {
        const json& a = (*atoms)[i];
        const std::string name = "measure.atoms[" + std::to_string(i) + "]";
        if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
          v.fail(name + " must be [rate, mass]");
          measure_ok = false;
          continue;
        }
        const double rate = a[0].get<double>(), mass = a[1].get<double>();
        if (!(rate > 0.0)) {
          v.fail(name + ".rate must be > 0");
          measure_ok = false;
        }
        if (!(mass > 0.0)) {
          v.fail(name + ".mass must be > 0");
          measure_ok = false;
        }
        cfg.measure.atoms.push_back({rate, mass});
      }
      for (std::size_t i = 0; i < cfg.measure.atoms.size(); ++i) {
        for (std::size_t j = i + 1; j < cfg.measure.atoms.size(); ++j) {
          if (cfg.measure.atoms[i].rate == cfg.measure.atoms[j].rate) {
            v.fail("measure.atoms has a repeated rate " + std::to_string(cfg.measure.atoms[i].rate));
            measure_ok = false;
          }
        }
      }
    }
  } else {
    const auto shape = v.get<double>("measure.gamma.shape");
    const auto scale = v.get<double>("measure.gamma.scale");
    const auto mass = v.get<double>("measure.gamma.mass");
    const std::pair<const char*, std::optional<double>> fields[] = {
        {"shape", shape}, {"scale", scale}, {"mass", mass}};
    for (const auto& [name, value] : fields) {
      if (!value || !(*value > 0.0)) {
        v.fail(std::string("measure.gamma.") + name + " must be given and > 0");
        measure_ok = false;
      }
    }
    cfg.measure.gamma = {shape.value_or(0.0), scale.value_or(0.0), mass.value_or(0.0)};
  }
  cfg.measure.bins = v.get<int>("measure.bins");
  cfg.measure.cutoff = v.get<double>("measure.cutoff");
  if (cfg.measure.bins.has_value() != cfg.measure.cutoff.has_value()) {
    v.fail("measure.bins and measure.cutoff must be given together");
    measure_ok = false;
  }
  if (cfg.measure.bins && *cfg.measure.bins < 1) {
    v.fail("measure.bins must be >= 1");
    measure_ok = false;
  }
  if (cfg.measure.cutoff && !(*cfg.measure.cutoff > 0.0)) {
    v.fail("measure.cutoff must be > 0");
    measure_ok = false;
  }

  // sim
  cfg.sim.dt = v.get<double>("sim.dt").value_or(cfg.sim.dt);
  cfg.sim.t_max = v.get<double>("sim.t_max").value_or(cfg.sim.t_max);
  cfg.sim.reps = v.get<std::size_t>("sim.reps").value_or(cfg.sim.reps);
  cfg.sim.seed = v.get<std::uint64_t>("sim.seed").value_or(cfg.sim.seed);
  cfg.sim.record_stride = v.get<std::size_t>("sim.record_stride").value_or(cfg.sim.record_stride);
  cfg.sim.threads = v.get<unsigned>("sim.threads").value_or(cfg.sim.threads);
  cfg.sim.mode = v.get<std::string>("sim.mode").value_or(cfg.sim.mode);
  if (!(cfg.sim.dt > 0.0)) v.fail("sim.dt must be > 0");
  if (!(cfg.sim.t_max > 0.0)) v.fail("sim.t_max must be > 0");
  if (cfg.sim.dt > cfg.sim.t_max) v.fail("sim.dt must not exceed sim.t_max");
  if (cfg.sim.reps < 1) v.fail("sim.reps must be >= 1");
  if (cfg.sim.record_stride < 1) v.fail("sim.record_stride must be >= 1");
  if (cfg.sim.mode != "path" && cfg.sim.mode != "ensemble") {
    v.fail("sim.mode must be \"path\" or \"ensemble\"");
  }

  // wf
  cfg.wf.N = v.get<std::int64_t>("wf.N").value_or(cfg.wf.N);
  cfg.wf.t_max = v.get<double>("wf.t_max").value_or(cfg.sim.t_max);
  cfg.wf.reps = v.get<std::size_t>("wf.reps").value_or(cfg.sim.reps);
  if (cfg.wf.N < 1) v.fail("wf.N must be >= 1");
  if (!(cfg.wf.t_max > 0.0)) v.fail("wf.t_max must be > 0");
  if (cfg.wf.reps < 1) v.fail("wf.reps must be >= 1");

  // init
  cfg.x0 = v.get<double>("init.x").value_or(cfg.x0);
  if (!(cfg.x0 >= 0.0 && cfg.x0 <= 1.0)) v.fail("init.x must lie in [0, 1]");
  std::optional<std::size_t> bank_count;
  if (measure_ok) {
    try {
      bank_count = cfg.simulation_measure().size();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::validation_error) {
        v.fail(std::string("measure: ") + e.what());
      }
    }
  }
  const json* y = v.find("init.y");
  if (y == nullptr || y->is_number()) {
    const double p = y == nullptr ? cfg.x0 : y->get<double>();
    if (!(p >= 0.0 && p <= 1.0)) v.fail("init.y must lie in [0, 1]");
    cfg.y0.assign(bank_count.value_or(0), p);
  } else if (y->is_array()) {
    for (const auto& value : *y) {
      if (!value.is_number() || !(value.get<double>() >= 0.0 && value.get<double>() <= 1.0)) {
        v.fail("init.y entries must be numbers in [0, 1]");
        break;
      }
      cfg.y0.push_back(value.get<double>());
    }
    if (bank_count && cfg.y0.size() != *bank_count) {
      v.fail("init.y has " + std::to_string(cfg.y0.size()) + " entries but the measure has " +
             std::to_string(*bank_count) + " seed-banks");
    } else if (!bank_count && measure_ok) {
      v.fail("init.y as a list needs a discrete or binned measure");
    }
  } else {
    v.fail("init.y must be a number or a list of numbers");
  }

  // dual
  if (const json* init = v.find("dual.initial")) {
    const auto active = init->is_object() ? init->value("active", json()) : json();
    if (!active.is_number_integer() || active.get<std::int64_t>() < 0) {
      v.fail("dual.initial.active must be a non-negative integer");
    } else {
      cfg.dual_initial.active = active.get<std::int64_t>();
    }
    const auto dormant = init->is_object() ? init->value("dormant", json::array()) : json();
    if (!dormant.is_array()) {
      v.fail("dual.initial.dormant must be a list of [rate, count] pairs");
    } else {
      for (const auto& entry : dormant) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
            !entry[1].is_number_integer() || !(entry[0].get<double>() > 0.0) ||
            entry[1].get<std::int64_t>() < 1) {
          v.fail("dual.initial.dormant entries must be [rate > 0, count >= 1]");
          continue;
        }
        cfg.dual_initial.dormant[entry[0].get<double>()] += entry[1].get<std::int64_t>();
      }
    }
  } else {
    cfg.dual_initial.active = 2;
  }

  // coalescent
  if (const json* init = v.find("coalescent.initial")) {
    try {
      cfg.coalescent_initial = partition_from_json(init->dump());
    } catch (const Error& e) {
      v.fail(std::string("coalescent.initial: ") + e.what());
    }
  } else if (const auto K = v.get<int>("coalescent.K")) {
    if (*K < 1) {
      v.fail("coalescent.K must be >= 1");
    } else {
      cfg.coalescent_initial = MarkedPartition::singletons(*K);
    }
  }

  cfg.duality_target = v.get<std::string>("duality.target").value_or(cfg.duality_target);
  if (cfg.duality_target != "dual" && cfg.duality_target != "exact") {
    v.fail("duality.target must be \"dual\" or \"exact\"");
  }
  cfg.scaling_tolerance = v.get<double>("scaling.tolerance").value_or(cfg.scaling_tolerance);
  if (!(cfg.scaling_tolerance > 0.0)) v.fail("scaling.tolerance must be > 0");

  if (!v.errors().empty()) {
    std::string message;
    for (const auto& e : v.errors()) {
      message += (message.empty() ? "" : "; ") + e;
    }
    throw Error(ErrorCode::validation_error, message);
  }

  json measure{{"kind", resolved_kind}};
  if (cfg.measure.kind == SeedBankMeasure::Kind::discrete) {
    json atoms = json::array();
    for (const auto& a : cfg.measure.atoms) {
      atoms.push_back({a.rate, a.mass});
    }
    measure["atoms"] = atoms;
  } else {
    measure["gamma"] = {{"shape", cfg.measure.gamma.shape},
                        {"scale", cfg.measure.gamma.scale},
                        {"mass", cfg.measure.gamma.mass}};
  }
  if (cfg.measure.bins) {
    measure["bins"] = *cfg.measure.bins;
    measure["cutoff"] = *cfg.measure.cutoff;
  }
  cfg.resolved = {
      {"measure", measure},
      {"init", {{"x", cfg.x0}, {"y", cfg.y0}}},
      {"sim",
       {{"dt", cfg.sim.dt},
        {"t_max", cfg.sim.t_max},
        {"reps", cfg.sim.reps},
        {"seed", cfg.sim.seed},
        {"record_stride", cfg.sim.record_stride},
        {"threads", cfg.sim.threads},
        {"mode", cfg.sim.mode}}},
      {"wf", {{"N", cfg.wf.N}, {"t_max", cfg.wf.t_max}, {"reps", cfg.wf.reps}}},
      {"dual", {{"initial", dual_state_json(cfg.dual_initial)}}},
      {"duality", {{"target", cfg.duality_target}}},
      {"scaling", {{"tolerance", cfg.scaling_tolerance}}},
  };
  if (cfg.coalescent_initial) {
    cfg.resolved["coalescent"]["initial"] = json::parse(to_json(*cfg.coalescent_initial));
  }
  // A list-valued y with no bank count (gamma without bins) cannot occur
  // here; a scalar y for an unbinned gamma measure resolves to an empty list.
  if (cfg.y0.empty()) {
    cfg.resolved["init"]["y"] = v.find("init.y") ? *v.find("init.y") : json(cfg.x0);
  }
  return cfg;
}

RunConfig parse_config(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  json doc;
  if (first != std::string::npos && text[first] == '{') {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::parse_error,
                  "line " + std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
    }
    // A report embeds its resolved config under "config".
    if (doc.is_object() && doc.contains("config") && doc["config"].is_object()) {
      doc = json(doc["config"]);
    }
  } else {
    doc = parse_key_values(text);
  }
  return config_from_json(doc);
}

std::string config_hash(const RunConfig& cfg) {
  const std::string canonical = cfg.resolved.dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

}  // namespace seedbank
