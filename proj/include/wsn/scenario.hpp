#pragma once

#include "wsn/metrics.hpp"
#include "wsn/strategies.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wsn {

/// Everything a `run` needs. Every field has a default, so `{"seeds":[42]}`
/// is a complete scenario file.
struct ScenarioSpec {
  SimulationParams sim;
  SummaryParams summary;
  std::vector<StrategyKind> strategies{kAllStrategies.begin(), kAllStrategies.end()};
  std::vector<std::uint64_t> seeds{42};
  std::filesystem::path output_dir = "wsn_out";
  int success_window = 50;  // trailing window reported as success_rate_trailing

  void validate() const;
};

/// Unknown keys and wrong types raise ConfigError with the dotted key path.
ScenarioSpec parse_scenario(const nlohmann::json& doc);
ScenarioSpec load_scenario(const std::filesystem::path& path);

/// One (strategy, seed) simulation.
struct RunResult {
  StrategyKind strategy = StrategyKind::FullRl;
  std::uint64_t seed = 0;
  std::vector<RoundMetrics> series;
  std::optional<RunSummary> summary;
  double trailing_success = 0.0;
  std::size_t max_table_entries = 0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

/// Runs to round_count or network death. Never throws for simulation
/// failures; they land in `error`.
RunResult run_single(const ScenarioSpec& spec, StrategyKind kind, std::uint64_t seed);

struct ScenarioReport {
  std::vector<RunResult> runs;  // ordered by (strategy, seed) as listed in the scenario
  bool all_ok() const;
};

/// Runs every (strategy, seed) pair on up to `jobs` threads and writes the
/// output files. Result order does not depend on scheduling.
ScenarioReport run_scenario(const ScenarioSpec& spec, int jobs = 1);

/// Table II layout: one row per sampled time, three columns per strategy.
struct ComparisonTable {
  std::vector<StrategyKind> strategies;
  std::vector<int> time_pct;
  /// rows[r][3*s + {0,1,2}] = active sensors, variance, cumulative reward
  std::vector<std::vector<double>> rows;
};

/// Means over all summaries of the same strategy.
ComparisonTable compare_table(std::span<const RunSummary> summaries);
void write_comparison_csv(std::ostream& os, const ComparisonTable& table);

nlohmann::json summary_to_json(const RunSummary& s);
RunSummary summary_from_json(const nlohmann::json& j);

/// Reads every `*_summary.json` under `dir`, sorted by file name.
std::vector<RunSummary> load_summaries(const std::filesystem::path& dir);

/// Writes run files, comparison.csv, figdata_*.csv and, when anything failed,
/// errors.json. Throws IoError when a file cannot be written.
void write_outputs(const ScenarioSpec& spec, const ScenarioReport& report);

}  // namespace wsn
