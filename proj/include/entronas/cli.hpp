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

// The `entronas` command line: search | score | analyze | export.
// Exit codes: 0 success, 1 runtime or domain failure, 2 usage or config error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "entronas/arch.hpp"
#include "entronas/arch_io.hpp"
#include "entronas/config.hpp"
#include "entronas/cost.hpp"
#include "entronas/entropy.hpp"
#include "entronas/search.hpp"

#ifndef ENTRONAS_VERSION
#define ENTRONAS_VERSION "0.0.0"
#endif

namespace entronas {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kManifestVersion = 1;

namespace cli {

struct ScoreArgs {
  std::string arch;
  std::string alpha;
  std::string resolution = "384";
  std::uint64_t seed = 0;
  int repeats = 1;
  std::string weight_init = "gaussian";
  std::string format = "text";
};

struct AnalyzeArgs {
  std::string arch;
  std::string resolution = "384";
  std::string format = "text";
};

struct ExportArgs {
  std::string arch;
  std::string format = "json";
  std::string output;
};

struct SearchArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> resolution;
  std::optional<std::string> alpha;
  std::optional<std::string> flops_budget;
  std::optional<std::string> params_budget;
  std::optional<int> max_depth;
  std::optional<int> population;
  std::optional<int> iterations;
  std::optional<int> jobs;
  std::optional<std::string> output_dir;
  int progress = 0;
};

// Usage-class failure (bad flag value, unreadable input): exit 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline ArchitectureSpec read_arch(const std::string& path) {
  try {
    return load_architecture(path);
  } catch (const ParseError& e) {
    throw UsageError(path + ": " + e.what());
  } catch (const FileError& e) {
    throw UsageError(e.what());
  }
}

inline std::string num(double v) { return format_score(v); }

inline int cmd_score(const ScoreArgs& a, std::ostream& out) {
  const ArchitectureSpec arch = read_arch(a.arch);
  EntropyScorerOptions opts;
  if (!a.alpha.empty()) {
    opts.weights = parse_alpha(a.alpha);
  }
  const Resolution res = parse_resolution(a.resolution);
  if (res.height != res.width) {
    throw UsageError("score: resolution must be square");
  }
  opts.resolution = res;
  opts.repeats = a.repeats;
  opts.init = parse_weight_init(a.weight_init);
  if (a.format != "text" && a.format != "json") {
    throw UsageError("score: unknown format '" + a.format + "'");
  }
  if (res.height % 32 != 0) {
    throw UsageError("score: resolution must be a multiple of 32");
  }
  if (a.repeats < 1) {
    throw UsageError("score: repeats must be >= 1");
  }
  const EntropyScorer scorer(opts);
  const EntropyReport report = scorer.evaluate(arch, a.seed);

  if (a.format == "json") {
    nlohmann::ordered_json doc;
    doc["resolution"] = res.height;
    doc["seed"] = a.seed;
    doc["repeats"] = a.repeats;
    doc["alpha"] = opts.weights.alpha;
    doc["stage_entropy"] = report.stage_entropy;
    doc["gammas_logsum"] = report.gammas_logsum;
    doc["score"] = report.score;
    out << doc.dump(2) << '\n';
    return kExitOk;
  }
  out << "resolution\t" << res.height << '\n';
  out << "seed\t" << a.seed << '\n';
  out << "repeats\t" << a.repeats << '\n';
  out << "alpha";
  for (double v : opts.weights.alpha) {
    out << '\t' << num(v);
  }
  out << '\n';
  for (int i = 0; i < kNumStages; ++i) {
    out << "H(C" << i + 1 << ")\t" << num(report.stage_entropy[i]) << '\n';
  }
  out << "score\t" << num(report.score) << '\n';
  return kExitOk;
}

inline int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const ArchitectureSpec arch = read_arch(a.arch);
  const Resolution res = parse_resolution(a.resolution);
  if (a.format != "text" && a.format != "json") {
    throw UsageError("analyze: unknown format '" + a.format + "'");
  }
  const CostReport cost = analyze(arch, res);
  if (a.format == "json") {
    nlohmann::ordered_json doc;
    doc["resolution"] = format_resolution(res);
    doc["flops"] = cost.flops;
    doc["params"] = cost.params;
    doc["depth"] = cost.depth;
    out << doc.dump(2) << '\n';
    return kExitOk;
  }
  auto scaled = [](std::int64_t v, double unit) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << static_cast<double>(v) / unit;
    return s.str();
  };
  out << "resolution\t" << format_resolution(res) << '\n';
  out << "flops\t" << cost.flops << "\t(" << scaled(cost.flops, 1e9) << "G)\n";
  out << "params\t" << cost.params << "\t(" << scaled(cost.params, 1e6) << "M)\n";
  out << "depth\t" << cost.depth << '\n';
  return kExitOk;
}

inline int cmd_export(const ExportArgs& a, std::ostream& out) {
  if (a.format != "json") {
    throw UsageError("export: unknown format '" + a.format + "' (supported: json)");
  }
  const ArchitectureSpec arch = read_arch(a.arch);
  require_valid(arch);
  const std::string text = export_json(arch);
  if (a.output.empty()) {
    out << text;
  } else {
    save_text(a.output, text);
  }
  return kExitOk;
}

inline RunConfig build_run_config(const SearchArgs& a) {
  RunConfig cfg = load_config(a.config);
  apply_env_overrides(cfg);
  SearchConfig& s = cfg.search;
  if (a.seed) s.seed = *a.seed;
  if (a.resolution) {
    const Resolution r = parse_resolution(*a.resolution);
    if (r.height != r.width) {
      throw ConfigError("--resolution: scoring uses square inputs");
    }
    s.resolution = r.height;
  }
  if (a.alpha) s.alpha = parse_alpha(*a.alpha);
  if (a.flops_budget) cfg.flops = {parse_count(*a.flops_budget, "--flops-budget"), std::nullopt};
  if (a.params_budget) {
    cfg.params = {parse_count(*a.params_budget, "--params-budget"), std::nullopt};
  }
  if (a.max_depth) s.max_depth = *a.max_depth;
  if (a.population) s.population_size = *a.population;
  if (a.iterations) s.iterations = *a.iterations;
  if (a.jobs) s.jobs = *a.jobs;
  if (a.output_dir) cfg.output.dir = *a.output_dir;
  cfg.resolve_budgets();
  if (auto problem = s.check(); !problem.empty()) {
    throw ConfigError(problem);
  }
  return cfg;
}

inline int cmd_search(const SearchArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = build_run_config(a);
  const auto start = std::chrono::steady_clock::now();
  SearchObserver observer;
  if (a.progress > 0) {
    observer = [&](int t, const Population& pop, bool) {
      if (t % a.progress == 0) {
        err << "iteration " << t << " population " << pop.size() << " best "
            << num(pop.max_score()) << '\n';
      }
    };
  }
  const SearchResult result = search(cfg.search, observer);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::filesystem::create_directories(cfg.output.dir);
  save_text(cfg.output.best_path(), serialize(result.best_arch));
  {
    std::ofstream log(cfg.output.log_path(), std::ios::binary | std::ios::trunc);
    if (!log) {
      throw FileError("cannot write " + cfg.output.log_path().string());
    }
    write_search_log(log, result.records);
  }
  const CostReport cost = analyze(result.best_arch, cfg.search.budget_resolution);
  nlohmann::ordered_json manifest;
  manifest["manifest_version"] = kManifestVersion;
  manifest["engine"] = "entronas";
  manifest["version"] = ENTRONAS_VERSION;
  manifest["seed"] = cfg.search.seed;
  manifest["config"] = config_snapshot(cfg);
  auto& res = manifest["result"];
  res["best_score"] = result.best_score;
  res["best_hash"] = format_hash(structural_hash(result.best_arch));
  res["initial_score"] = result.score_trajectory.front();
  res["iterations_run"] = result.iterations_run;
  res["best_flops"] = cost.flops;
  res["best_params"] = cost.params;
  res["best_depth"] = cost.depth;
  manifest["outputs"] = {{"best_arch", cfg.output.best_path().string()},
                         {"log", cfg.output.log_path().string()},
                         {"manifest", cfg.output.manifest_path().string()}};
  manifest["wall_clock_seconds"] = seconds;
  save_text(cfg.output.manifest_path(), manifest.dump(2) + "\n");

  out << "best_score\t" << num(result.best_score) << '\n';
  out << "initial_score\t" << num(result.score_trajectory.front()) << '\n';
  out << "iterations\t" << result.iterations_run << '\n';
  out << "best_arch\t" << cfg.output.best_path().string() << '\n';
  out << "log\t" << cfg.output.log_path().string() << '\n';
  out << "manifest\t" << cfg.output.manifest_path().string() << '\n';
  return kExitOk;
}

}  // namespace cli

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Training-free entropy-driven backbone search", "entronas"};
  app.set_version_flag("--version", std::string(ENTRONAS_VERSION));
  app.require_subcommand(1);

  cli::SearchArgs search_args;
  auto* search_cmd = app.add_subcommand("search", "Run the evolutionary search");
  search_cmd->add_option("--config", search_args.config, "Search config (JSON)")->required();
  search_cmd->add_option("--seed", search_args.seed, "Global seed");
  search_cmd->add_option("--resolution", search_args.resolution, "Scoring resolution N");
  search_cmd->add_option("--alpha", search_args.alpha, "Stage weights a1,a2,a3,a4,a5");
  search_cmd->add_option("--flops-budget", search_args.flops_budget, "FLOPs budget (MACs)");
  search_cmd->add_option("--params-budget", search_args.params_budget, "Parameter budget");
  search_cmd->add_option("--max-depth", search_args.max_depth, "Maximal depth L");
  search_cmd->add_option("--population", search_args.population, "Population size N");
  search_cmd->add_option("--iterations", search_args.iterations, "Iterations T");
  search_cmd->add_option("--jobs", search_args.jobs, "Mutants scored per iteration, in parallel");
  search_cmd->add_option("--output-dir", search_args.output_dir, "Directory for run artifacts");
  search_cmd->add_option("--progress", search_args.progress,
                         "Report to stderr every K iterations (0: silent)");

  cli::ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "Multi-scale entropy of an architecture");
  score_cmd->add_option("arch", score_args.arch, "Architecture file")->required();
  score_cmd->add_option("--alpha", score_args.alpha, "Stage weights a1,a2,a3,a4,a5");
  score_cmd->add_option("--resolution", score_args.resolution, "Input resolution N")
      ->capture_default_str();
  score_cmd->add_option("--seed", score_args.seed, "Seed")->capture_default_str();
  score_cmd->add_option("--repeats", score_args.repeats, "Independent draws averaged")
      ->capture_default_str();
  score_cmd->add_option("--weight-init", score_args.weight_init, "gaussian | constant")
      ->capture_default_str();
  score_cmd->add_option("--format", score_args.format, "text | json")->capture_default_str();

  cli::AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "FLOPs, parameters and depth");
  analyze_cmd->add_option("arch", analyze_args.arch, "Architecture file")->required();
  analyze_cmd->add_option("--resolution", analyze_args.resolution, "N or WxH")
      ->capture_default_str();
  analyze_cmd->add_option("--format", analyze_args.format, "text | json")->capture_default_str();

  cli::ExportArgs export_args;
  auto* export_cmd = app.add_subcommand("export", "Versioned JSON for model builders");
  export_cmd->add_option("arch", export_args.arch, "Architecture file")->required();
  export_cmd->add_option("--format", export_args.format, "json")->capture_default_str();
  export_cmd->add_option("--output,-o", export_args.output, "Write to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*search_cmd) return cli::cmd_search(search_args, out, err);
    if (*score_cmd) return cli::cmd_score(score_args, out);
    if (*analyze_cmd) return cli::cmd_analyze(analyze_args, out);
    if (*export_cmd) return cli::cmd_export(export_args, out);
  } catch (const cli::UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace entronas
