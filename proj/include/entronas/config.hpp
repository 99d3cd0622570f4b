// Copyright 2026 The entronas Authors.
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

#pragma once

// Search configuration documents.
//
//   {
//     "format_version": 1,
//     "search":  {"population", "iterations", "max_depth", "seed",
//                 "seed_population", "jobs", "block_types"},
//     "budget":  {"flops" | "flops_factor", "params" | "params_factor",
//                 "resolution"},
//     "score":   {"alpha", "resolution", "repeats", "weight_init"},
//     "initial_arch": "<path relative to this file>" | {architecture},
//     "output":  {"dir", "best", "log", "manifest"}
//   }
//
// Every key is optional except the FLOPs budget and the initial
// architecture. Factors multiply the initial architecture's own cost.
// Precedence: file < ENTRONAS_* environment variables < command-line flags.

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "entronas/arch.hpp"
#include "entronas/arch_io.hpp"
#include "entronas/cost.hpp"
#include "entronas/entropy.hpp"
#include "entronas/search.hpp"

namespace entronas {

inline constexpr int kConfigFormatVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OutputPaths {
  std::filesystem::path dir = "entronas-run";
  std::string best = "best_arch.json";
  std::string log = "search_log.tsv";
  std::string manifest = "manifest.json";

  std::filesystem::path best_path() const { return dir / best; }
  std::filesystem::path log_path() const { return dir / log; }
  std::filesystem::path manifest_path() const { return dir / manifest; }
};

/// A budget given either as an absolute count or as a multiple of the
/// initial architecture's cost.
struct BudgetSpec {
  std::optional<std::int64_t> absolute;
  std::optional<double> factor;

  bool set() const noexcept { return absolute.has_value() || factor.has_value(); }

  std::int64_t resolve(std::int64_t initial_cost) const {
    if (absolute) {
      return *absolute;
    }
    return static_cast<std::int64_t>(std::floor(*factor * static_cast<double>(initial_cost)));
  }
};

struct RunConfig {
  SearchConfig search;
  BudgetSpec flops;
  BudgetSpec params;
  OutputPaths output;

  /// Fills the absolute budgets in `search` from the budget specs.
  void resolve_budgets() {
    if (!flops.set()) {
      throw ConfigError("budget: a FLOPs budget (flops or flops_factor) is required");
    }
    require_valid(search.initial_arch);
    const CostReport initial = analyze(search.initial_arch, search.budget_resolution);
    search.flops_budget = flops.resolve(initial.flops);
    search.params_budget.reset();
    if (params.set()) {
      search.params_budget = params.resolve(initial.params);
    }
  }
};

// ---- small parsers shared with the CLI ------------------------------------

/// "N" (square) or "WxH".
inline Resolution parse_resolution(std::string_view text) {
  auto to_int = [&](std::string_view part) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size() || value <= 0) {
      throw ConfigError("bad resolution '" + std::string(text) + "' (expected N or WxH)");
    }
    return value;
  };
  const auto x = text.find_first_of("xX");
  if (x == std::string_view::npos) {
    return Resolution::square(to_int(text));
  }
  const int width = to_int(text.substr(0, x));
  const int height = to_int(text.substr(x + 1));
  return {height, width};
}

inline std::string format_resolution(Resolution r) {
  if (r.height == r.width) {
    return std::to_string(r.height);
  }
  return std::to_string(r.width) + "x" + std::to_string(r.height);
}

inline MsepWeights parse_alpha(std::string_view text) {
  MsepWeights w;
  std::size_t count = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto part = std::string(text.substr(start, comma == std::string_view::npos
                                                         ? std::string_view::npos
                                                         : comma - start));
    if (count >= static_cast<std::size_t>(kNumStages)) {
      throw ConfigError("alpha needs exactly 5 values");
    }
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(part.c_str(), &end);
    if (part.empty() || end != part.c_str() + part.size() || errno != 0) {
      throw ConfigError("bad alpha value '" + part + "'");
    }
    w.alpha[count++] = v;
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  if (count != static_cast<std::size_t>(kNumStages)) {
    throw ConfigError("alpha needs exactly 5 values");
  }
  if (!w.valid()) {
    throw ConfigError("alpha must be non-negative with at least one positive entry");
  }
  return w;
}

inline WeightInit parse_weight_init(std::string_view text) {
  if (text == "gaussian") return WeightInit::Gaussian;
  if (text == "constant") return WeightInit::Constant;
  throw ConfigError("weight_init must be 'gaussian' or 'constant'");
}

constexpr const char* to_string(WeightInit init) noexcept {
  return init == WeightInit::Constant ? "constant" : "gaussian";
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("bad value for " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return value;
}

/// Integer count or scientific literal such as 8.99e10.
inline std::int64_t parse_count(std::string_view text, std::string_view what) {
  const std::string s(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno != 0 || !(v > 0.0) ||
      v != std::floor(v) || v > 9.0e18) {
    throw ConfigError("bad value for " + std::string(what) + ": '" + s + "'");
  }
  return static_cast<std::int64_t>(v);
}

// ---- JSON document -------------------------------------------------------

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) {
    throw ConfigError(where + ": expected an object");
  }
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto key : allowed) {
      known = known || item.key() == key;
    }
    if (!known) {
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "/" + key + ": wrong type");
  }
}

inline std::int64_t get_count(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (v.is_number_integer() && v.get<std::int64_t>() > 0) {
    return v.get<std::int64_t>();
  }
  if (v.is_number_float()) {
    return parse_count(v.dump(), where + "/" + key);
  }
  throw ConfigError(where + "/" + key + ": expected a positive count");
}

inline Resolution get_resolution(const json& v, const std::string& where) {
  if (v.is_number_integer()) {
    return parse_resolution(std::to_string(v.get<long long>()));
  }
  if (v.is_string()) {
    return parse_resolution(v.get<std::string>());
  }
  throw ConfigError(where + ": expected N or \"WxH\"");
}

inline BudgetSpec get_budget(const json& obj, const char* abs_key, const char* factor_key,
                             const std::string& where) {
  BudgetSpec b;
  if (obj.contains(abs_key) && obj.contains(factor_key)) {
    throw ConfigError(where + ": give either " + abs_key + " or " + factor_key + ", not both");
  }
  if (obj.contains(abs_key)) {
    b.absolute = get_count(obj, abs_key, where);
  }
  if (obj.contains(factor_key)) {
    const double f = get<double>(obj, factor_key, where);
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw ConfigError(where + "/" + factor_key + ": must be positive");
    }
    b.factor = f;
  }
  return b;
}

}  // namespace detail

/// Parses a config document. `base_dir` anchors a relative initial_arch path.
/// A run manifest is accepted too: its "config" member is used.
inline RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: syntax error at byte " + std::to_string(e.byte));
  }
  if (doc.is_object() && doc.contains("manifest_version") && doc.contains("config")) {
    doc = doc.at("config");
  }
  detail::check_keys(doc, "config",
                     {"format_version", "search", "budget", "score", "initial_arch", "output"});
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer() ||
      doc["format_version"].get<int>() != kConfigFormatVersion) {
    throw ConfigError("config: format_version must be " + std::to_string(kConfigFormatVersion));
  }

  RunConfig cfg;
  SearchConfig& s = cfg.search;

  if (doc.contains("search")) {
    const auto& j = doc["search"];
    const std::string w = "/search";
    detail::check_keys(j, w,
                       {"population", "iterations", "max_depth", "seed", "seed_population", "jobs",
                        "block_types"});
    if (j.contains("population")) s.population_size = detail::get<int>(j, "population", w);
    if (j.contains("iterations")) s.iterations = detail::get<int>(j, "iterations", w);
    if (j.contains("max_depth")) s.max_depth = detail::get<int>(j, "max_depth", w);
    if (j.contains("seed")) s.seed = detail::get<std::uint64_t>(j, "seed", w);
    if (j.contains("seed_population")) {
      s.seed_population = detail::get<bool>(j, "seed_population", w);
    }
    if (j.contains("jobs")) s.jobs = detail::get<int>(j, "jobs", w);
    if (j.contains("block_types")) {
      s.block_types.clear();
      for (const auto& name : detail::get<std::vector<std::string>>(j, "block_types", w)) {
        const auto type = block_type_from_string(name);
        if (!type) {
          throw ConfigError(w + "/block_types: unknown block type '" + name + "'");
        }
        s.block_types.push_back(*type);
      }
    }
  }

  if (doc.contains("score")) {
    const auto& j = doc["score"];
    const std::string w = "/score";
    detail::check_keys(j, w, {"alpha", "resolution", "repeats", "weight_init"});
    if (j.contains("alpha")) {
      const auto values = detail::get<std::vector<double>>(j, "alpha", w);
      if (values.size() != static_cast<std::size_t>(kNumStages)) {
        throw ConfigError(w + "/alpha: needs exactly 5 values");
      }
      std::copy(values.begin(), values.end(), s.alpha.alpha.begin());
    }
    if (j.contains("resolution")) {
      const Resolution r = detail::get_resolution(j["resolution"], w + "/resolution");
      if (r.height != r.width) {
        throw ConfigError(w + "/resolution: scoring uses square inputs");
      }
      s.resolution = r.height;
    }
    if (j.contains("repeats")) s.repeats = detail::get<int>(j, "repeats", w);
    if (j.contains("weight_init")) {
      s.init = parse_weight_init(detail::get<std::string>(j, "weight_init", w));
    }
  }

  bool budget_resolution_set = false;
  if (doc.contains("budget")) {
    const auto& j = doc["budget"];
    const std::string w = "/budget";
    detail::check_keys(j, w, {"flops", "flops_factor", "params", "params_factor", "resolution"});
    cfg.flops = detail::get_budget(j, "flops", "flops_factor", w);
    cfg.params = detail::get_budget(j, "params", "params_factor", w);
    if (j.contains("resolution")) {
      s.budget_resolution = detail::get_resolution(j["resolution"], w + "/resolution");
      budget_resolution_set = true;
    }
  }
  if (!budget_resolution_set) {
    s.budget_resolution = Resolution::square(s.resolution);
  }

  if (!doc.contains("initial_arch")) {
    throw ConfigError("config: initial_arch is required");
  }
  const auto& init = doc["initial_arch"];
  try {
    if (init.is_string()) {
      std::filesystem::path p = init.get<std::string>();
      if (p.is_relative()) {
        p = base_dir / p;
      }
      s.initial_arch = load_architecture(p);
    } else {
      s.initial_arch = parse(init.dump());
    }
  } catch (const ParseError& e) {
    throw ConfigError(std::string("/initial_arch: ") + e.what());
  } catch (const FileError& e) {
    throw ConfigError(std::string("/initial_arch: ") + e.what());
  }

  if (doc.contains("output")) {
    const auto& j = doc["output"];
    const std::string w = "/output";
    detail::check_keys(j, w, {"dir", "best", "log", "manifest"});
    if (j.contains("dir")) {
      std::filesystem::path dir = detail::get<std::string>(j, "dir", w);
      cfg.output.dir = dir.is_relative() ? base_dir / dir : dir;
    }
    if (j.contains("best")) cfg.output.best = detail::get<std::string>(j, "best", w);
    if (j.contains("log")) cfg.output.log = detail::get<std::string>(j, "log", w);
    if (j.contains("manifest")) cfg.output.manifest = detail::get<std::string>(j, "manifest", w);
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read config '" + path.string() + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

/// Applies ENTRONAS_* overrides. `lookup` returns the variable's value or
/// nullptr; it defaults to std::getenv.
template <typename Lookup>
void apply_env_overrides(RunConfig& cfg, Lookup lookup) {
  auto var = [&](const char* name) -> std::optional<std::string> {
    const char* v = lookup(name);
    if (v == nullptr || *v == '\0') {
      return std::nullopt;
    }
    return std::string(v);
  };
  SearchConfig& s = cfg.search;
  if (auto v = var("ENTRONAS_SEED")) s.seed = parse_number<std::uint64_t>(*v, "ENTRONAS_SEED");
  if (auto v = var("ENTRONAS_ITERATIONS")) {
    s.iterations = parse_number<int>(*v, "ENTRONAS_ITERATIONS");
  }
  if (auto v = var("ENTRONAS_POPULATION")) {
    s.population_size = parse_number<int>(*v, "ENTRONAS_POPULATION");
  }
  if (auto v = var("ENTRONAS_MAX_DEPTH")) {
    s.max_depth = parse_number<int>(*v, "ENTRONAS_MAX_DEPTH");
  }
  if (auto v = var("ENTRONAS_JOBS")) s.jobs = parse_number<int>(*v, "ENTRONAS_JOBS");
  if (auto v = var("ENTRONAS_RESOLUTION")) {
    const Resolution r = parse_resolution(*v);
    if (r.height != r.width) {
      throw ConfigError("ENTRONAS_RESOLUTION: scoring uses square inputs");
    }
    s.resolution = r.height;
  }
  if (auto v = var("ENTRONAS_ALPHA")) s.alpha = parse_alpha(*v);
  if (auto v = var("ENTRONAS_FLOPS_BUDGET")) {
    cfg.flops = {parse_count(*v, "ENTRONAS_FLOPS_BUDGET"), std::nullopt};
  }
  if (auto v = var("ENTRONAS_PARAMS_BUDGET")) {
    cfg.params = {parse_count(*v, "ENTRONAS_PARAMS_BUDGET"), std::nullopt};
  }
  if (auto v = var("ENTRONAS_OUTPUT_DIR")) cfg.output.dir = *v;
}

inline void apply_env_overrides(RunConfig& cfg) {
  apply_env_overrides(cfg, [](const char* name) { return std::getenv(name); });
}

/// Fully resolved document: absolute budgets, inline initial architecture.
/// Loading it back yields the same SearchConfig.
inline nlohmann::ordered_json config_snapshot(const RunConfig& cfg) {
  const SearchConfig& s = cfg.search;
  nlohmann::ordered_json doc;
  doc["format_version"] = kConfigFormatVersion;
  auto& search = doc["search"];
  search["population"] = s.population_size;
  search["iterations"] = s.iterations;
  search["max_depth"] = s.max_depth;
  search["seed"] = s.seed;
  search["seed_population"] = s.seed_population;
  search["jobs"] = s.jobs;
  search["block_types"] = nlohmann::ordered_json::array();
  for (BlockType t : s.block_types) {
    search["block_types"].push_back(std::string(to_string(t)));
  }
  auto& budget = doc["budget"];
  budget["flops"] = s.flops_budget;
  if (s.params_budget) {
    budget["params"] = *s.params_budget;
  }
  budget["resolution"] = format_resolution(s.budget_resolution);
  auto& score = doc["score"];
  score["alpha"] = s.alpha.alpha;
  score["resolution"] = s.resolution;
  score["repeats"] = s.repeats;
  score["weight_init"] = to_string(s.init);
  doc["initial_arch"] = nlohmann::ordered_json::parse(serialize(s.initial_arch));
  return doc;
}

}  // namespace entronas
