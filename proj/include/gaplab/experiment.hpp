// Copyright 2026 The gaplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file experiment.hpp
 * @brief Experiment configuration, the potential -> IDS -> gaps -> labels
 *        pipeline, and CSV/JSON emission.
 *
 * Config schema (JSON):
 * @code
 * {
 *   "system":   {"type": "periodic",     "values": [0, 3]}
 *             | {"type": "rotation",     "alpha": [0.618...]}
 *             | {"type": "affine",       "matrix": [[2,1],[1,1]], "shift": [0, 0]}
 *             | {"type": "substitution", "preset": "fibonacci"}
 *             | {"type": "substitution", "alphabet": "ab", "rules": {"a": "ab", "b": "a"}}
 *             | {"type": "bernoulli",    "values": [0, 8], "weights": [0.5, 0.5], "seed": 1},
 *   "sampling": {"type": "cosine", "coefficients": [2], "coupling": 1}
 *             | {"type": "letters", "values": {"0": 0, "1": 1}}
 *             | {"type": "direct"},
 *   "numerics": {"N": 2000, "phases": 8, "seed": 1,
 *                "grid": {"min": -3, "max": 3, "points": 800},
 *                "min_gap_width": 0.01, "match_tolerance": 5e-3,
 *                "coefficient_cap": 40, "max_power": 8, "eigen_tolerance": 1e-10,
 *                "certify_steps": 1000, "growth_threshold": 0.02},
 *   "output":   {"dir": "out"}
 * }
 * @endcode
 * Only "system" is required.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gaplab/dynamics.hpp"
#include "gaplab/error.hpp"
#include "gaplab/ids.hpp"
#include "gaplab/label_groups.hpp"
#include "json.hpp"

namespace gaplab {

struct GridSpec {
  std::optional<double> min, max;  // default: hull of min V - 2 .. max V + 2
  std::size_t points = 800;
};

struct ExperimentConfig {
  SystemDescriptor system = PeriodicSystem{{0.0}};
  SamplingFunction sampling = Direct{};
  std::size_t n = 2000;
  std::size_t phases = 8;
  std::uint64_t seed = 1;
  GridSpec grid;
  std::optional<double> min_gap_width;  // default 20 * range / N
  double match_tolerance = 5e-3;
  LabelCaps caps;
  double eigen_tolerance = 1e-10;
  std::size_t certify_steps = 1000;
  double growth_threshold = 0.02;
  std::string output_dir = ".";
};

struct ExperimentSummary {
  std::size_t gaps_found = 0;
  std::size_t gaps_matched = 0;
  double max_residual = 0.0;
  bool verified() const noexcept { return gaps_matched == gaps_found; }
};

struct ExperimentReport {
  std::string system_kind;
  LabelGroup group;
  std::string group_description;
  IDSProfile profile;
  std::vector<Gap> gaps;
  double min_gap_width = 0.0;
  ExperimentSummary summary;
  std::vector<std::string> warnings;
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) config_fail(path + "." + key, "missing required field");
  return obj.at(key);
}

inline double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) config_fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) config_fail(path, "must be finite");
  return x;
}

inline std::int64_t get_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) config_fail(path, "expected an integer");
  return v.get<std::int64_t>();
}

inline std::size_t get_positive(const json& v, const std::string& path, std::int64_t min_value = 1) {
  const auto x = get_integer(v, path);
  if (x < min_value) config_fail(path, "must be >= " + std::to_string(min_value));
  return static_cast<std::size_t>(x);
}

inline std::vector<double> get_numbers(const json& v, const std::string& path) {
  if (!v.is_array()) config_fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) config_fail(path, "expected a string");
  return v.get<std::string>();
}

inline char get_symbol(const std::string& key, const std::string& path) {
  if (key.size() != 1) config_fail(path, "symbols must be single characters, got '" + key + "'");
  return key[0];
}

inline Substitution parse_substitution(const json& sys) {
  if (sys.contains("preset")) {
    const auto name = get_string(sys.at("preset"), "system.preset");
    if (name == "fibonacci") return substitutions::fibonacci();
    if (name == "thue_morse" || name == "thue-morse") return substitutions::thue_morse();
    if (name == "period_doubling" || name == "period-doubling") return substitutions::period_doubling();
    config_fail("system.preset", "unknown preset '" + name + "'");
  }
  const auto alphabet = get_string(require(sys, "alphabet", "system"), "system.alphabet");
  const auto& rules_json = require(sys, "rules", "system");
  if (!rules_json.is_object()) config_fail("system.rules", "expected an object mapping symbols to words");
  std::map<char, std::string> rules;
  for (const auto& [key, value] : rules_json.items()) {
    const std::string path = "system.rules." + key;
    rules[get_symbol(key, path)] = get_string(value, path);
  }
  try {
    return Substitution(alphabet, std::move(rules));
  } catch (const ConfigError& e) {
    config_fail("system.rules", e.what());
  }
}

inline SystemDescriptor parse_system(const json& sys) {
  if (!sys.is_object()) config_fail("system", "expected an object");
  const auto type = get_string(require(sys, "type", "system"), "system.type");
  if (type == "periodic") return PeriodicSystem{get_numbers(require(sys, "values", "system"), "system.values")};
  if (type == "rotation") return RotationSystem{get_numbers(require(sys, "alpha", "system"), "system.alpha")};
  if (type == "affine") {
    const auto& m = require(sys, "matrix", "system");
    if (!m.is_array() || m.empty()) config_fail("system.matrix", "expected a non-empty array of rows");
    IntMatrix a(m.size(), m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::string row = "system.matrix[" + std::to_string(i) + "]";
      if (!m[i].is_array() || m[i].size() != m.size()) config_fail(row, "matrix must be square");
      for (std::size_t j = 0; j < m.size(); ++j) a(i, j) = get_integer(m[i][j], row + "[" + std::to_string(j) + "]");
    }
    std::vector<double> shift(m.size(), 0.0);
    if (sys.contains("shift")) shift = get_numbers(sys.at("shift"), "system.shift");
    return AffineSystem{std::move(a), std::move(shift)};
  }
  if (type == "substitution") return SubstitutionSystem{parse_substitution(sys)};
  if (type == "bernoulli") {
    BernoulliSystem b;
    b.values = get_numbers(require(sys, "values", "system"), "system.values");
    b.weights = get_numbers(require(sys, "weights", "system"), "system.weights");
    if (sys.contains("seed")) b.seed = static_cast<std::uint64_t>(get_integer(sys.at("seed"), "system.seed"));
    return b;
  }
  config_fail("system.type", "unknown system type '" + type + "'");
}

inline std::size_t torus_dimension(const SystemDescriptor& s) {
  if (const auto* r = std::get_if<RotationSystem>(&s)) return r->alpha.size();
  if (const auto* a = std::get_if<AffineSystem>(&s)) return a->matrix.rows();
  return 0;
}

inline SamplingFunction default_sampling(const SystemDescriptor& s) {
  if (const auto* sub = std::get_if<SubstitutionSystem>(&s)) {
    LetterValues lv;
    const auto& alphabet = sub->substitution.alphabet();
    for (std::size_t i = 0; i < alphabet.size(); ++i) lv.values[alphabet[i]] = static_cast<double>(i);
    return lv;
  }
  if (const auto d = torus_dimension(s)) return CosineSum{std::vector<double>(d, 1.0), 1.0};
  return Direct{};
}

inline SamplingFunction parse_sampling(const json& f, const SystemDescriptor& system) {
  if (!f.is_object()) config_fail("sampling", "expected an object");
  const auto type = get_string(require(f, "type", "sampling"), "sampling.type");
  if (type == "direct") return Direct{};
  if (type == "cosine") {
    CosineSum cs;
    cs.coefficients = f.contains("coefficients") ? get_numbers(f.at("coefficients"), "sampling.coefficients")
                                                 : std::vector<double>(torus_dimension(system), 1.0);
    if (f.contains("coupling")) cs.coupling = get_number(f.at("coupling"), "sampling.coupling");
    return cs;
  }
  if (type == "letters") {
    const auto& vals = require(f, "values", "sampling");
    if (!vals.is_object()) config_fail("sampling.values", "expected an object mapping symbols to numbers");
    LetterValues lv;
    for (const auto& [key, value] : vals.items()) {
      const std::string path = "sampling.values." + key;
      lv.values[get_symbol(key, path)] = get_number(value, path);
    }
    return lv;
  }
  config_fail("sampling.type", "unknown sampling type '" + type + "'");
}

}  // namespace detail

/// Parses and validates a config document. ConfigError messages start with
/// the offending field path.
inline ExperimentConfig parse_config_json(const nlohmann::json& doc) {
  using namespace detail;
  if (!doc.is_object()) config_fail("(root)", "expected a JSON object");
  ExperimentConfig cfg;
  cfg.system = parse_system(require(doc, "system", "(root)"));
  cfg.sampling = doc.contains("sampling") ? parse_sampling(doc.at("sampling"), cfg.system) : default_sampling(cfg.system);

  if (doc.contains("numerics")) {
    const auto& num = doc.at("numerics");
    if (!num.is_object()) config_fail("numerics", "expected an object");
    if (num.contains("N")) cfg.n = get_positive(num.at("N"), "numerics.N", 2);
    if (num.contains("phases")) cfg.phases = get_positive(num.at("phases"), "numerics.phases");
    if (num.contains("seed")) cfg.seed = static_cast<std::uint64_t>(get_integer(num.at("seed"), "numerics.seed"));
    if (num.contains("grid")) {
      const auto& g = num.at("grid");
      if (!g.is_object()) config_fail("numerics.grid", "expected an object");
      if (g.contains("min")) cfg.grid.min = get_number(g.at("min"), "numerics.grid.min");
      if (g.contains("max")) cfg.grid.max = get_number(g.at("max"), "numerics.grid.max");
      if (g.contains("points")) cfg.grid.points = get_positive(g.at("points"), "numerics.grid.points", 2);
      if (cfg.grid.min && cfg.grid.max && !(*cfg.grid.min < *cfg.grid.max))
        config_fail("numerics.grid", "grid min must be < grid max");
    }
    if (num.contains("min_gap_width")) {
      cfg.min_gap_width = get_number(num.at("min_gap_width"), "numerics.min_gap_width");
      if (!(*cfg.min_gap_width > 0.0)) config_fail("numerics.min_gap_width", "must be > 0");
    }
    if (num.contains("match_tolerance")) {
      cfg.match_tolerance = get_number(num.at("match_tolerance"), "numerics.match_tolerance");
      if (!(cfg.match_tolerance > 0.0)) config_fail("numerics.match_tolerance", "must be > 0");
    }
    if (num.contains("coefficient_cap"))
      cfg.caps.coefficient = static_cast<std::int64_t>(get_positive(num.at("coefficient_cap"), "numerics.coefficient_cap"));
    if (num.contains("max_power"))
      cfg.caps.power = static_cast<unsigned>(get_positive(num.at("max_power"), "numerics.max_power", 0));
    if (num.contains("eigen_tolerance")) {
      cfg.eigen_tolerance = get_number(num.at("eigen_tolerance"), "numerics.eigen_tolerance");
      if (!(cfg.eigen_tolerance > 0.0)) config_fail("numerics.eigen_tolerance", "must be > 0");
    }
    if (num.contains("certify_steps"))
      cfg.certify_steps = get_positive(num.at("certify_steps"), "numerics.certify_steps", 100);
    if (num.contains("growth_threshold"))
      cfg.growth_threshold = get_number(num.at("growth_threshold"), "numerics.growth_threshold");
  }
  if (doc.contains("output")) {
    const auto& out = doc.at("output");
    if (!out.is_object()) config_fail("output", "expected an object");
    if (out.contains("dir")) cfg.output_dir = get_string(out.at("dir"), "output.dir");
    if (out.contains("format") && get_string(out.at("format"), "output.format") != "csv")
      config_fail("output.format", "only \"csv\" is supported");
  }

  try {
    (void)validate_system(cfg.system);
    (void)sample_potential(cfg.system, cfg.sampling, default_phase(cfg.system), 0, 1);
  } catch (const ConfigError& e) {
    config_fail(doc.contains("sampling") ? "system/sampling" : "system", e.what());
  }
  return cfg;
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: (root): invalid JSON: ") + e.what());
  }
  return parse_config_json(doc);
}

enum class Stage { kIds, kGaps, kLabels, kVerify };

/// Runs the pipeline up to `stage`. Deterministic for a fixed config.
inline ExperimentReport run(const ExperimentConfig& cfg, Stage stage = Stage::kVerify) {
  ExperimentReport rep;
  rep.system_kind = system_kind(cfg.system);
  rep.warnings = validate_system(cfg.system);
  rep.group = group_for_system(cfg.system, cfg.caps);
  rep.group_description = describe(rep.group);
  rep.warnings.insert(rep.warnings.end(), rep.group.notes.begin(), rep.group.notes.end());
  if (stage == Stage::kLabels) return rep;

  double lo, hi;
  if (cfg.grid.min && cfg.grid.max) {
    lo = *cfg.grid.min;
    hi = *cfg.grid.max;
  } else {
    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
    for (const auto& ph : phase_ensemble(cfg.system, cfg.phases, cfg.seed)) {
      const auto v = sample_potential(cfg.system, cfg.sampling, ph, 1, cfg.n);
      vmin = std::min(vmin, *std::min_element(v.begin(), v.end()));
      vmax = std::max(vmax, *std::max_element(v.begin(), v.end()));
    }
    lo = cfg.grid.min.value_or(vmin - 2.0);
    hi = cfg.grid.max.value_or(vmax + 2.0);
    if (!(lo < hi)) throw ConfigError("config: numerics.grid: grid min must be < grid max");
  }
  rep.profile = ids_profile(cfg.system, cfg.sampling, energy_grid(lo, hi, cfg.grid.points), cfg.n, cfg.phases,
                            cfg.seed);
  if (stage == Stage::kIds) return rep;

  EigenOptions eopts;
  eopts.abs_tol = cfg.eigen_tolerance;
  const auto dos = empirical_dos(cfg.system, cfg.sampling, cfg.n, cfg.phases, cfg.seed, eopts);
  rep.min_gap_width = cfg.min_gap_width.value_or(default_min_width(dos));
  rep.gaps = detect_gaps(dos, rep.min_gap_width);

  const LabelSet labels(rep.group, cfg.caps);
  CertifyOptions copts;
  copts.steps = cfg.certify_steps;
  copts.growth_threshold = cfg.growth_threshold;
  copts.seed = cfg.seed;
  for (auto& g : rep.gaps) {
    g.certified = certify_gap(cfg.system, cfg.sampling, g.midpoint(), cfg.phases, copts);
    g.match = labels.match(g.label, cfg.match_tolerance);
  }
  rep.summary.gaps_found = rep.gaps.size();
  for (const auto& g : rep.gaps) {
    if (!g.match) continue;
    ++rep.summary.gaps_matched;
    rep.summary.max_residual = std::max(rep.summary.max_residual, g.match->residual);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_representation(const std::vector<std::int64_t>& r) {
  std::string s;
  for (std::size_t i = 0; i < r.size(); ++i) s += (i ? ";" : "") + std::to_string(r[i]);
  return s;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace detail

inline std::string ids_csv(const IDSProfile& p) {
  std::string s = "E,k\n";
  for (std::size_t i = 0; i < p.energies.size(); ++i)
    s += detail::format_double(p.energies[i]) + "," + detail::format_double(p.values[i]) + "\n";
  return s;
}

inline std::string gaps_csv(const std::vector<Gap>& gaps) {
  std::string s = "left,right,width,label,match_repr,residual,certified\n";
  for (const auto& g : gaps) {
    s += detail::format_double(g.left) + "," + detail::format_double(g.right) + "," +
         detail::format_double(g.width()) + "," + detail::format_double(g.label) + ",";
    if (g.match) s += detail::format_representation(g.match->representation) + "," + detail::format_double(g.match->residual);
    else s += ",";
    s += g.certified ? ",true\n" : ",false\n";
  }
  return s;
}

inline nlohmann::json report_json(const ExperimentReport& rep, const ExperimentConfig& cfg, Stage stage) {
  using nlohmann::json;
  json j;
  j["system"] = rep.system_kind;
  j["numerics"] = {{"N", cfg.n},
                   {"phases", cfg.phases},
                   {"seed", cfg.seed},
                   {"match_tolerance", cfg.match_tolerance},
                   {"coefficient_cap", cfg.caps.coefficient},
                   {"max_power", cfg.caps.power}};
  j["group"] = {{"tag", rep.group.tag()}, {"description", rep.group_description}, {"notes", rep.group.notes}};
  j["warnings"] = rep.warnings;
  if (stage == Stage::kLabels) return j;
  j["ids"] = {{"points", rep.profile.energies.size()},
              {"denominator", rep.profile.denominator},
              {"energies", rep.profile.energies},
              {"values", rep.profile.values}};
  if (stage == Stage::kIds) return j;
  j["min_gap_width"] = rep.min_gap_width;
  json gaps = json::array();
  for (const auto& g : rep.gaps) {
    json e = {{"left", g.left},
              {"right", g.right},
              {"width", g.width()},
              {"label", g.label},
              {"label_count", g.label_count},
              {"label_total", g.label_total},
              {"certified", g.certified}};
    if (g.match) {
      e["match"] = {{"representation", g.match->representation},
                    {"value", g.match->value},
                    {"residual", g.match->residual}};
    } else {
      e["match"] = nullptr;
    }
    gaps.push_back(std::move(e));
  }
  j["gaps"] = std::move(gaps);
  j["summary"] = {{"gaps_found", rep.summary.gaps_found},
                  {"gaps_matched", rep.summary.gaps_matched},
                  {"max_residual", rep.summary.max_residual},
                  {"verified", rep.summary.verified()}};
  return j;
}

/// Writes ids.csv, gaps.csv and report.json (as far as the stage produced
/// them) into the output directory.
inline void write_outputs(const ExperimentReport& rep, const ExperimentConfig& cfg, Stage stage) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  if (stage != Stage::kLabels) detail::write_file(dir / "ids.csv", ids_csv(rep.profile));
  if (stage == Stage::kGaps || stage == Stage::kVerify) detail::write_file(dir / "gaps.csv", gaps_csv(rep.gaps));
  detail::write_file(dir / "report.json", report_json(rep, cfg, stage).dump(2) + "\n");
}

}  // namespace gaplab
