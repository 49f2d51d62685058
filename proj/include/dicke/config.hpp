#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dicke/model.hpp"
#include "dicke/presets.hpp"
#include "dicke/qpt.hpp"
#include "dicke/tomography.hpp"

namespace dicke {

enum class Analysis { Ground, Sweep, Separatrix, Wigner, Entropy, Variational, Classify };

inline std::string analysis_name(Analysis a) {
  switch (a) {
    case Analysis::Ground: return "ground";
    case Analysis::Sweep: return "sweep";
    case Analysis::Separatrix: return "separatrix";
    case Analysis::Wigner: return "wigner";
    case Analysis::Entropy: return "entropy";
    case Analysis::Variational: return "variational";
    case Analysis::Classify: return "classify";
  }
  return "?";
}

inline std::optional<Analysis> parse_analysis(std::string_view s) {
  if (s == "ground") return Analysis::Ground;
  if (s == "sweep") return Analysis::Sweep;
  if (s == "separatrix") return Analysis::Separatrix;
  if (s == "wigner") return Analysis::Wigner;
  if (s == "entropy") return Analysis::Entropy;
  if (s == "variational") return Analysis::Variational;
  if (s == "classify") return Analysis::Classify;
  return std::nullopt;
}

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct TrajectorySpec {
  ParamPoint from{0.0, 0.0};
  ParamPoint to{0.0, 0.0};
  int points = 0;  ///< 0 = no trajectory configured
};

struct ClassifySpec {
  ParamPoint location{0.0, 0.0};
  ParamPoint direction{1.0, 0.0};
  std::vector<int> na_list{1, 2, 3, 4};
  int half_steps = 4;
  double slope_stable = -0.05;
  double slope_unstable = -0.5;
};

struct RunConfig {
  ModelParams params = *find_preset("lambda-fig3");
  std::string preset;  ///< echo of the preset name, empty if explicit
  std::optional<Analysis> analysis;
  TrajectorySpec trajectory;
  SurfaceGrid grid;
  QuadratureGrid quad;
  ClassifySpec classify;
  double tol = 1e-10;
  double delta = 0.01;
  double eps_f = 1e-8;
  std::string out_dir = "out";
  int workers = 0;  ///< 0 = all hardware threads
  int wigner_mode = 0;  ///< 0 = both, 1, 2 = single mode
};

namespace detail {

struct RawEntry {
  std::string value;
  int line = -1;
  bool used = false;
};

using RawMap = std::map<std::string, RawEntry>;

inline std::string location_of(const RawEntry& e) {
  return e.line >= 0 ? " (line " + std::to_string(e.line) + ")" : "";
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline void insert_raw(RawMap& map, const std::string& key, const std::string& value, int line) {
  auto [it, fresh] = map.try_emplace(key, RawEntry{value, line});
  if (!fresh)
    throw ConfigError("duplicate key '" + key + "'" +
                      (line >= 0 ? " (line " + std::to_string(line) + ")" : ""));
}

inline RawMap parse_text_entries(const std::string& text) {
  RawMap map;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value' (line " + std::to_string(lineno) + ")");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("empty key (line " + std::to_string(lineno) + ")");
    if (value.empty())
      throw ConfigError("empty value for '" + key + "' (line " + std::to_string(lineno) + ")");
    insert_raw(map, key, value, lineno);
  }
  return map;
}

inline void flatten_json(const nlohmann::json& node, const std::string& prefix, RawMap& map) {
  if (node.is_object()) {
    for (const auto& [k, v] : node.items())
      flatten_json(v, prefix.empty() ? k : prefix + "." + k, map);
    return;
  }
  if (node.is_array()) {
    std::string joined;
    for (const auto& v : node) {
      if (!joined.empty()) joined += ",";
      if (v.is_string())
        joined += v.get<std::string>();
      else
        joined += v.dump();
    }
    insert_raw(map, prefix, joined, -1);
    return;
  }
  if (node.is_string()) {
    insert_raw(map, prefix, node.get<std::string>(), -1);
    return;
  }
  insert_raw(map, prefix, node.dump(), -1);
}

inline RawMap parse_json_entries(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("top-level JSON value must be an object");
  RawMap map;
  flatten_json(doc, "", map);
  return map;
}

class ConfigReader {
 public:
  explicit ConfigReader(RawMap map) : map_(std::move(map)) {}

  bool has(const std::string& key) const { return map_.count(key) != 0; }

  std::optional<std::string> get_string(const std::string& key) {
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    it->second.used = true;
    return it->second.value;
  }

  std::optional<double> get_double(const std::string& key) {
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    it->second.used = true;
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second.value, &pos);
      if (pos != it->second.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected a number, got '" + it->second.value + "'" +
                        location_of(it->second));
    }
  }

  std::optional<int> get_int(const std::string& key) {
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    it->second.used = true;
    try {
      std::size_t pos = 0;
      int v = std::stoi(it->second.value, &pos);
      if (pos != it->second.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected an integer, got '" + it->second.value + "'" +
                        location_of(it->second));
    }
  }

  std::optional<std::vector<int>> get_int_list(const std::string& key) {
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    it->second.used = true;
    std::vector<int> out;
    std::istringstream in(it->second.value);
    std::string item;
    while (std::getline(in, item, ',')) {
      std::string t = trim(item);
      try {
        std::size_t pos = 0;
        out.push_back(std::stoi(t, &pos));
        if (pos != t.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a comma-separated integer list" +
                          location_of(it->second));
      }
    }
    if (out.empty())
      throw ConfigError("key '" + key + "': empty list" + location_of(it->second));
    return out;
  }

  void check_all_used() const {
    for (const auto& [key, entry] : map_)
      if (!entry.used) throw ConfigError("unknown key '" + key + "'" + location_of(entry));
  }

 private:
  RawMap map_;
};

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  std::size_t first = text.find_first_not_of(" \t\r\n");
  detail::RawMap raw = (first != std::string::npos && text[first] == '{')
                           ? detail::parse_json_entries(text)
                           : detail::parse_text_entries(text);
  detail::ConfigReader r(std::move(raw));
  RunConfig cfg;

  const bool has_preset = r.has("preset");
  const bool has_model = r.has("model.config");
  for (const char* key : {"model.omega2", "model.Omega1", "model.Omega2"})
    if (r.has(key) && !has_model)
      throw ConfigError(std::string("'") + key + "' requires 'model.config'");
  if (has_preset && has_model)
    throw ConfigError("give either 'preset' or an explicit 'model.*' block, not both");
  if (!has_preset && !has_model)
    throw ConfigError("missing model parameters: set 'preset' or a 'model.*' block");

  int Na = r.get_int("model.Na").value_or(1);
  if (has_preset) {
    cfg.preset = *r.get_string("preset");
    auto p = find_preset(cfg.preset, Na);
    if (!p) {
      std::string known;
      for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
      throw ConfigError("unknown preset '" + cfg.preset + "' (known: " + known + ")");
    }
    cfg.params = *p;
  } else {
    std::string kind_s = *r.get_string("model.config");
    auto kind = parse_config_kind(kind_s);
    if (!kind) throw ConfigError("model.config must be one of xi, lambda, v; got '" + kind_s + "'");
    auto omega2 = r.get_double("model.omega2");
    auto O1 = r.get_double("model.Omega1");
    auto O2 = r.get_double("model.Omega2");
    if (!omega2 || !O1 || !O2)
      throw ConfigError("explicit model needs model.omega2, model.Omega1, model.Omega2");
    try {
      cfg.params = ModelParams::make(*kind, *omega2, {*O1, *O2}, {0.0, 0.0}, Na);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("invalid model parameters: ") + e.what());
    }
  }

  double x1 = r.get_double("x1").value_or(0.0);
  double x2 = r.get_double("x2").value_or(0.0);
  if (x1 < 0.0 || x2 < 0.0) throw ConfigError("couplings x1, x2 must be nonnegative");
  cfg.params = cfg.params.with_x({x1, x2});

  if (auto a = r.get_string("analysis")) {
    auto parsed = parse_analysis(*a);
    if (!parsed) throw ConfigError("unknown analysis '" + *a + "'");
    cfg.analysis = parsed;
  }

  if (auto v = r.get_double("tol")) cfg.tol = *v;
  if (auto v = r.get_double("delta")) cfg.delta = *v;
  if (auto v = r.get_double("eps_f")) cfg.eps_f = *v;
  if (!(cfg.tol > 0.0)) throw ConfigError("tol must be positive");
  if (!(cfg.delta > 0.0)) throw ConfigError("delta must be positive");
  if (!(cfg.eps_f > 0.0)) throw ConfigError("eps_f must be positive");

  if (auto v = r.get_string("out")) cfg.out_dir = *v;
  if (auto v = r.get_int("workers")) {
    if (*v < 0) throw ConfigError("workers must be >= 0");
    cfg.workers = *v;
  }

  cfg.trajectory.from = {r.get_double("trajectory.from.x1").value_or(0.0),
                         r.get_double("trajectory.from.x2").value_or(0.0)};
  cfg.trajectory.to = {r.get_double("trajectory.to.x1").value_or(0.0),
                       r.get_double("trajectory.to.x2").value_or(0.0)};
  cfg.trajectory.points = r.get_int("trajectory.points").value_or(0);
  if (cfg.trajectory.points < 0) throw ConfigError("trajectory.points must be >= 0");
  for (double c : {cfg.trajectory.from[0], cfg.trajectory.from[1], cfg.trajectory.to[0],
                   cfg.trajectory.to[1]})
    if (c < 0.0) throw ConfigError("trajectory couplings must be nonnegative");

  if (auto v = r.get_double("grid.x1_min")) cfg.grid.x1_min = *v;
  if (auto v = r.get_double("grid.x1_max")) cfg.grid.x1_max = *v;
  if (auto v = r.get_int("grid.n1")) cfg.grid.n1 = *v;
  if (auto v = r.get_double("grid.x2_min")) cfg.grid.x2_min = *v;
  if (auto v = r.get_double("grid.x2_max")) cfg.grid.x2_max = *v;
  if (auto v = r.get_int("grid.n2")) cfg.grid.n2 = *v;
  if (cfg.grid.n1 < 2 || cfg.grid.n2 < 2) throw ConfigError("grid.n1 and grid.n2 must be >= 2");
  if (!(cfg.grid.x1_max > cfg.grid.x1_min) || !(cfg.grid.x2_max > cfg.grid.x2_min))
    throw ConfigError("grid bounds must satisfy max > min");
  if (cfg.grid.x1_min < 0.0 || cfg.grid.x2_min < 0.0)
    throw ConfigError("grid bounds must be nonnegative");

  if (auto v = r.get_double("quad.q_min")) cfg.quad.q_min = *v;
  if (auto v = r.get_double("quad.q_max")) cfg.quad.q_max = *v;
  if (auto v = r.get_int("quad.nq")) cfg.quad.nq = *v;
  if (auto v = r.get_double("quad.p_min")) cfg.quad.p_min = *v;
  if (auto v = r.get_double("quad.p_max")) cfg.quad.p_max = *v;
  if (auto v = r.get_int("quad.np")) cfg.quad.np = *v;
  if (cfg.quad.nq < 2 || cfg.quad.np < 2) throw ConfigError("quad.nq and quad.np must be >= 2");
  if (!(cfg.quad.q_max > cfg.quad.q_min) || !(cfg.quad.p_max > cfg.quad.p_min))
    throw ConfigError("quad bounds must satisfy max > min");

  cfg.classify.location = {r.get_double("classify.x1").value_or(0.0),
                           r.get_double("classify.x2").value_or(0.0)};
  cfg.classify.direction = {r.get_double("classify.dir1").value_or(1.0),
                            r.get_double("classify.dir2").value_or(0.0)};
  if (auto v = r.get_int_list("classify.na_list")) {
    for (std::size_t i = 0; i < v->size(); ++i) {
      if ((*v)[i] < 1) throw ConfigError("classify.na_list entries must be >= 1");
      if (i && (*v)[i] <= (*v)[i - 1]) throw ConfigError("classify.na_list must be ascending");
    }
    cfg.classify.na_list = *v;
  }
  if (auto v = r.get_int("classify.half_steps")) {
    if (*v < 1) throw ConfigError("classify.half_steps must be >= 1");
    cfg.classify.half_steps = *v;
  }
  if (auto v = r.get_double("classify.slope_stable")) cfg.classify.slope_stable = *v;
  if (auto v = r.get_double("classify.slope_unstable")) cfg.classify.slope_unstable = *v;
  if (cfg.classify.slope_unstable >= cfg.classify.slope_stable)
    throw ConfigError("classify.slope_unstable must lie below classify.slope_stable");

  if (auto v = r.get_string("wigner.mode")) {
    if (*v == "both")
      cfg.wigner_mode = 0;
    else if (*v == "1")
      cfg.wigner_mode = 1;
    else if (*v == "2")
      cfg.wigner_mode = 2;
    else
      throw ConfigError("wigner.mode must be 1, 2 or both; got '" + *v + "'");
  }

  r.check_all_used();
  return cfg;
}

/// Combines the CLI subcommand with the config's optional analysis field;
/// they must agree when both are present.
inline Analysis resolve_analysis(RunConfig& cfg, std::optional<Analysis> from_cli) {
  if (from_cli && cfg.analysis && *from_cli != *cfg.analysis)
    throw ConfigError("analysis mismatch: command line says '" + analysis_name(*from_cli) +
                      "', config says '" + analysis_name(*cfg.analysis) + "'");
  if (from_cli) cfg.analysis = from_cli;
  if (!cfg.analysis) throw ConfigError("no analysis selected");
  return *cfg.analysis;
}

}  // namespace dicke
