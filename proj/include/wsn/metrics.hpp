#pragma once

#include "wsn/strategies.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace wsn {

/// One row of the per-round trace. Round 0 is the untouched network.
struct RoundMetrics {
  int round = 0;
  double mean_soc_pct = 100.0;   // dead nodes count as 0
  double soc_variance = 0.0;     // population variance of energy / initial, dead nodes at 0
  int alive_count = 0;
  double cumulative_reward = 0.0;
  double round_reward = 0.0;
  double mean_delay = 0.0;
  bool success = false;
  double max_q_delta = 0.0;
  double epsilon = 0.0;
  int out_of_range_links = 0;
};

/// Sampled values at 0%, 10%, ..., 90% of the horizon (comparison table rows).
struct TimeSample {
  int time_pct = 0;
  int round = 0;
  double alive = 0.0;
  double variance = 0.0;
  double cumulative_reward = 0.0;
  double mean_soc_pct = 0.0;
};

struct RunSummary {
  StrategyKind strategy = StrategyKind::FullRl;
  std::uint64_t seed = 0;
  int rounds_run = 0;
  std::array<double, 5> soc_at_fractions{};  // at T/10, 3T/10, 5T/10, 7T/10, 9T/10
  int eliminated_nodes = 0;
  double longevity_pct = 100.0;
  std::optional<int> convergence_round;
  double success_rate = 0.0;
  double mean_delay = 0.0;
  double cumulative_reward = 0.0;
  std::vector<TimeSample> samples;
};

struct SummaryParams {
  double convergence_tolerance = 0.01;
  int convergence_window = 20;
};

inline constexpr std::array<double, 5> kSocFractions{0.1, 0.3, 0.5, 0.7, 0.9};

/// Stats of the energy snapshot; `round` fields default to zero.
RoundMetrics initial_metrics(const World& world);

/// Metrics after `outcome` has been applied to `world`. `previous` is the
/// preceding row of the same series (for cumulative reward).
RoundMetrics record_round(const World& world, const RoundOutcome& outcome, StrategyKind kind,
                          const RoundMetrics& previous);

/// Throws EmptySeries.
RunSummary summarize(std::span<const RoundMetrics> series, StrategyKind kind, std::uint64_t seed,
                     int round_count, const SummaryParams& params = {});

/// First round r >= 1 from which max_q_delta stays below `tolerance` for `window` rounds.
std::optional<int> convergence_round(std::span<const RoundMetrics> series, double tolerance, int window);

/// Success fraction over the last `window` rounds (excluding round 0).
double trailing_success_rate(std::span<const RoundMetrics> series, int window);

/// Index used for fraction f of the horizon, clamped to the series.
std::size_t sample_index(std::span<const RoundMetrics> series, double fraction, int round_count);

void write_rounds_csv(std::ostream& os, std::span<const RoundMetrics> series);
std::vector<RoundMetrics> read_rounds_csv(std::istream& is);

}  // namespace wsn
