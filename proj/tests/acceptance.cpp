// Acceptance run: one PASS/FAIL line per criterion. Exit code 0 only when
// every criterion passes.

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "wsn/metrics.hpp"
#include "wsn/scenario.hpp"

#include <spdlog/spdlog.h>

#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace wsn;

namespace {

struct Line {
  bool pass;
  std::string name;
  std::string detail;
};

std::vector<Line> lines;

void report(bool pass, std::string name, std::string detail) {
  std::printf("%s  %s\n      %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  lines.push_back({pass, std::move(name), std::move(detail)});
}

bool run_suite(const char* suite, int argc, char** argv, int& failed_cases) {
  doctest::Context ctx;
  ctx.applyCommandLine(argc, argv);
  ctx.setOption("test-suite", suite);
  ctx.setOption("minimal", true);
  ctx.setOption("no-intro", true);
  const int rc = ctx.run();
  failed_cases = rc;
  return rc == 0;
}

void unit_criterion(const char* suite, const char* name, int argc, char** argv) {
  int failed = 0;
  const bool ok = run_suite(suite, argc, argv, failed);
  report(ok, name, std::string("doctest suite '") + suite + "'" + (ok ? " all cases passed" : " has failures"));
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Number of adjacent pairs in `order` that break `holds(a, b)`.
template <class F>
int inversions(const std::vector<StrategyKind>& order, const std::map<StrategyKind, double>& v, F holds) {
  int bad = 0;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) bad += holds(v.at(order[i]), v.at(order[i + 1])) ? 0 : 1;
  return bad;
}

std::string listing(const std::vector<StrategyKind>& order, const std::map<StrategyKind, double>& v) {
  std::string s;
  for (auto k : order) s += std::string(to_string(k)) + "=" + num(v.at(k)) + " ";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);

  unit_criterion("formulas", "Equation exactness (update rule, exploration, adaptive rate, decay, utility)", argc,
                 argv);
  unit_criterion("oracles", "Oracle equivalence on small instances (equilibria, energy-only game, reward deltas)",
                 argc, argv);
  unit_criterion("invariants", "Structural invariants (>=1000 randomised cases, byte-identical reruns)", argc, argv);

  // Ensemble on the default scenario.
  ScenarioSpec spec;
  spec.seeds.clear();
  for (std::uint64_t s = 1; s <= 10; ++s) spec.seeds.push_back(s);
  const int T = spec.sim.network.round_count;
  const int N = spec.sim.network.node_count;

  std::map<StrategyKind, std::vector<RunResult>> runs;
  std::size_t worst_table = 0;
  bool all_ok = true;
  for (auto kind : kAllStrategies) {
    for (auto seed : spec.seeds) {
      auto r = run_single(spec, kind, seed);
      all_ok = all_ok && r.ok();
      worst_table = std::max(worst_table, r.max_table_entries);
      runs[kind].push_back(std::move(r));
    }
  }
  if (!all_ok) {
    report(false, "Qualitative reproduction", "a simulation failed");
    return 1;
  }

  auto mean_at = [&](StrategyKind k, double frac, auto field) {
    double sum = 0.0;
    for (const auto& r : runs[k]) sum += field(r.series[sample_index(r.series, frac, T)]);
    return sum / static_cast<double>(runs[k].size());
  };
  std::map<StrategyKind, double> alive90, reward90, variance, end_alive, trailing;
  for (auto k : kAllStrategies) {
    alive90[k] = mean_at(k, 0.9, [](const RoundMetrics& m) { return double(m.alive_count); });
    reward90[k] = mean_at(k, 0.9, [](const RoundMetrics& m) { return m.cumulative_reward; });
    double v = 0.0;
    for (int f = 1; f <= 9; ++f) v += mean_at(k, f / 10.0, [](const RoundMetrics& m) { return m.soc_variance; });
    variance[k] = v / 9.0;
    double e = 0.0, tr = 0.0;
    for (const auto& r : runs[k]) {
      e += r.series.back().alive_count;
      tr += r.trailing_success;
    }
    end_alive[k] = e / runs[k].size();
    trailing[k] = tr / runs[k].size();
  }

  const std::vector<StrategyKind> order{StrategyKind::FullRl, StrategyKind::GtClusterRlHead,
                                        StrategyKind::RlClusterGtHead, StrategyKind::FullGt};
  const std::vector<StrategyKind> clustered{StrategyKind::FullRl, StrategyKind::FullGt,
                                            StrategyKind::GtClusterRlHead, StrategyKind::RlClusterGtHead};
  bool qual = true;
  auto sub = [&](bool ok, const std::string& name, const std::string& detail) {
    qual = qual && ok;
    std::printf("  %s  - %s: %s\n", ok ? "ok  " : "FAIL", name.c_str(), detail.c_str());
  };
  std::printf("Qualitative reproduction, %zu seeds, %d nodes, %d rounds:\n", spec.seeds.size(), N, T);

  const int alive_inv = inversions(order, alive90, [](double a, double b) { return a >= b; });
  sub(alive_inv <= 1, "active sensors at 90% (full_rl >= gt_rl >= rl_gt >= full_gt, <=1 inversion)",
      listing(order, alive90) + "inversions=" + std::to_string(alive_inv));

  int var_bad = 0;
  for (auto k : clustered) {
    if (k != StrategyKind::FullRl && variance[k] < variance[StrategyKind::FullRl]) ++var_bad;
    if (k != StrategyKind::FullGt && variance[k] > variance[StrategyKind::FullGt]) ++var_bad;
  }
  sub(var_bad <= 1, "energy variance, mean of 10%..90% marks (full_rl lowest, full_gt highest, <=1 violation)",
      listing(order, variance) + "violations=" + std::to_string(var_bad));

  const int rew_inv = inversions(order, reward90, [](double a, double b) { return a > b; });
  sub(rew_inv <= 1, "cumulative reward at 90% (full_rl > gt_rl > rl_gt > full_gt, <=1 inversion)",
      listing(order, reward90) + "inversions=" + std::to_string(rew_inv));

  const double base_end = end_alive[StrategyKind::BaselineMultiHop];
  const bool base_loses = base_end <= 0.6 * N;
  bool all_outlive = true;
  std::string gap = "baseline_end=" + num(base_end) + " ";
  for (auto k : clustered) {
    all_outlive = all_outlive && end_alive[k] > base_end;
    gap += std::string(to_string(k)) + "_end=" + num(end_alive[k]) + " ";
  }
  int rl_early_deaths = 0;
  for (const auto& r : runs[StrategyKind::FullRl]) {
    const auto& m = r.series[sample_index(r.series, 0.6, T)];
    rl_early_deaths += N - m.alive_count;
  }
  gap += "full_rl_eliminated_by_60%=" + std::to_string(rl_early_deaths) + " (summed over seeds)";
  sub(base_loses && all_outlive && rl_early_deaths == 0,
      "longevity gap (baseline loses >=40%, every clustered strategy ends with more alive, full_rl intact to 60%)",
      gap);

  sub(trailing[StrategyKind::FullRl] > trailing[StrategyKind::FullGt],
      "trailing success rate at run end, window " + std::to_string(spec.success_window) + " (full_rl > full_gt)",
      "full_rl=" + num(trailing[StrategyKind::FullRl]) + " full_gt=" + num(trailing[StrategyKind::FullGt]) +
          " gt_rl=" + num(trailing[StrategyKind::GtClusterRlHead]) +
          " rl_gt=" + num(trailing[StrategyKind::RlClusterGtHead]));

  report(qual, "Qualitative reproduction of the comparisons", "see sub-checks above");

  // Convergence on the default scenario (seed 42).
  ScenarioSpec dflt;
  const auto rl = run_single(dflt, StrategyKind::FullRl, dflt.seeds.front());
  const auto conv = convergence_round(rl.series, dflt.summary.convergence_tolerance, dflt.summary.convergence_window);
  int longest = 0, run = 0;
  for (std::size_t i = 1; i < rl.series.size(); ++i) {
    run = rl.series[i].max_q_delta < dflt.summary.convergence_tolerance ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  int ensemble_conv = 0;
  for (const auto& r : runs[StrategyKind::FullRl]) ensemble_conv += r.summary->convergence_round ? 1 : 0;
  worst_table = std::max(worst_table, rl.max_table_entries);
  const std::size_t bound = state_action_bound(dflt.sim.learning.neighbor_cap, dflt.sim.network.stage_count);
  std::ostringstream cd;
  cd << "seed " << dflt.seeds.front() << ": "
     << (conv ? "converged at round " + std::to_string(*conv) : std::string("no 20-round run below 0.01"))
     << ", longest quiet run " << longest << " rounds; ensemble " << ensemble_conv << "/" << spec.seeds.size()
     << " converged; largest q-table " << worst_table << " <= bound " << bound;
  report(conv.has_value() && worst_table <= bound, "Convergence of full RL and bounded Q-tables", cd.str());

  int passed = 0;
  for (const auto& l : lines) passed += l.pass ? 1 : 0;
  std::printf("\n%d/%zu criteria passed\n", passed, lines.size());
  return passed == static_cast<int>(lines.size()) ? 0 : 1;
}
