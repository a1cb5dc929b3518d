// wsn_lab: run WSN clustering scenarios and tabulate the results.

#include "wsn/errors.hpp"
#include "wsn/scenario.hpp"

#include "CLI11.hpp"

#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

void setup_logging(bool quiet) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("wsn_lab"));
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);
  if (const char* env = std::getenv("WSN_LAB_LOG")) spdlog::cfg::helpers::load_levels(env);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-stage WSN clustering simulator"};
  app.require_subcommand(1);

  std::string config;
  std::vector<std::string> strategies;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  bool quiet = false;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run every (strategy, seed) pair of a scenario");
  run->add_option("--config", config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--strategy", strategies, "full_rl, full_gt, gt_rl, rl_gt or baseline (repeatable)");
  run->add_option("--seed", seeds, "Network seed (repeatable)");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--quiet", quiet, "Only log warnings and errors");
  run->add_option("--jobs", jobs, "Concurrent simulations")->check(CLI::PositiveNumber);

  std::string in_dir;
  auto* compare = app.add_subcommand("compare", "Print the comparison table of an output directory");
  compare->add_option("--in", in_dir, "Directory written by `run`")->required();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("--config", validate_path, "Scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);
  setup_logging(quiet);

  try {
    if (*run) {
      wsn::ScenarioSpec spec = wsn::load_scenario(config);
      if (!strategies.empty()) {
        spec.strategies.clear();
        for (const auto& name : strategies) {
          const auto kind = wsn::parse_strategy(name);
          if (!kind) throw wsn::ConfigError("strategies", "unknown strategy '" + name + "'");
          spec.strategies.push_back(*kind);
        }
      }
      if (!seeds.empty()) spec.seeds = seeds;
      if (!out_dir.empty()) spec.output_dir = out_dir;
      spec.validate();
      const auto report = wsn::run_scenario(spec, jobs);
      if (!report.all_ok()) {
        spdlog::error("some runs failed; see {}", (spec.output_dir / "errors.json").string());
        return 1;
      }
      if (!quiet) {
        std::vector<wsn::RunSummary> summaries;
        for (const auto& r : report.runs) summaries.push_back(*r.summary);
        wsn::write_comparison_csv(std::cout, wsn::compare_table(summaries));
      }
      return 0;
    }
    if (*compare) {
      const auto summaries = wsn::load_summaries(in_dir);
      if (summaries.empty()) throw wsn::IoError("no *_summary.json files in " + in_dir);
      wsn::write_comparison_csv(std::cout, wsn::compare_table(summaries));
      return 0;
    }
    if (*validate) {
      const auto spec = wsn::load_scenario(validate_path);
      std::cout << "ok: " << spec.strategies.size() << " strategies x " << spec.seeds.size() << " seeds\n";
      return 0;
    }
  } catch (const wsn::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
