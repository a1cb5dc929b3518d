#include "wsn/metrics.hpp"

#include "wsn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace wsn {

namespace {

void fill_energy_stats(const World& w, RoundMetrics& m) {
  const Eigen::VectorXd soc = energies(w.nodes) / w.initial_energy();
  const double mean = soc.mean();
  m.mean_soc_pct = 100.0 * mean;
  m.soc_variance = (soc.array() - mean).square().mean();
  m.alive_count = alive_count(w.nodes);
}

}  // namespace

RoundMetrics initial_metrics(const World& world) {
  RoundMetrics m;
  fill_energy_stats(world, m);
  return m;
}

RoundMetrics record_round(const World& world, const RoundOutcome& outcome, StrategyKind kind,
                          const RoundMetrics& previous) {
  RoundMetrics m;
  m.round = outcome.round + 1;
  fill_energy_stats(world, m);
  m.round_reward = outcome.reward ? outcome.reward->total() : 0.0;
  m.cumulative_reward = previous.cumulative_reward + m.round_reward;
  m.mean_delay = measure_delay(outcome, world.params.routing.processing_per_hop);
  m.max_q_delta = outcome.learning.max_q_delta;
  m.epsilon = outcome.learning.epsilon;
  m.out_of_range_links = outcome.out_of_range_links;

  const bool all_delivered = outcome.all_delivered;
  if (uses_learning(kind)) {
    m.success = outcome.reward && outcome.reward->total() == RewardBreakdown::kMax;
  } else if (kind == StrategyKind::FullGt) {
    m.success = all_delivered && outcome.heads_energy_max;
  } else {
    m.success = all_delivered;
  }
  return m;
}

std::size_t sample_index(std::span<const RoundMetrics> series, double fraction, int round_count) {
  const auto idx = static_cast<std::size_t>(std::floor(fraction * round_count + 1e-9));
  return std::min(idx, series.size() - 1);
}

std::optional<int> convergence_round(std::span<const RoundMetrics> series, double tolerance, int window) {
  int run = 0;
  for (std::size_t i = 1; i < series.size(); ++i) {
    run = series[i].max_q_delta < tolerance ? run + 1 : 0;
    if (run >= window) return series[i + 1 - static_cast<std::size_t>(window)].round;
  }
  return std::nullopt;
}

double trailing_success_rate(std::span<const RoundMetrics> series, int window) {
  if (series.size() <= 1 || window <= 0) return 0.0;
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(window), series.size() - 1);
  const auto tail = series.last(n);
  return static_cast<double>(std::count_if(tail.begin(), tail.end(), [](const auto& m) { return m.success; })) /
         static_cast<double>(n);
}

RunSummary summarize(std::span<const RoundMetrics> series, StrategyKind kind, std::uint64_t seed,
                     int round_count, const SummaryParams& params) {
  if (series.empty()) throw EmptySeries();
  RunSummary s;
  s.strategy = kind;
  s.seed = seed;
  s.rounds_run = series.back().round;
  for (std::size_t i = 0; i < kSocFractions.size(); ++i)
    s.soc_at_fractions[i] = series[sample_index(series, kSocFractions[i], round_count)].mean_soc_pct;

  const int start_alive = series.front().alive_count;
  const int end_alive = series.back().alive_count;
  s.eliminated_nodes = start_alive - end_alive;
  s.longevity_pct = start_alive > 0 ? 100.0 * end_alive / start_alive : 0.0;
  if (uses_learning(kind))
    s.convergence_round = convergence_round(series, params.convergence_tolerance, params.convergence_window);

  const std::size_t rounds = series.size() - 1;
  if (rounds > 0) {
    int successes = 0;
    double delay = 0.0;
    for (std::size_t i = 1; i < series.size(); ++i) {
      successes += series[i].success ? 1 : 0;
      delay += series[i].mean_delay;
    }
    s.success_rate = static_cast<double>(successes) / static_cast<double>(rounds);
    s.mean_delay = delay / static_cast<double>(rounds);
  }
  s.cumulative_reward = series.back().cumulative_reward;

  auto sample = [&](int pct, std::size_t idx) {
    const auto& m = series[idx];
    return TimeSample{pct, m.round, static_cast<double>(m.alive_count), m.soc_variance, m.cumulative_reward,
                      m.mean_soc_pct};
  };
  if (round_count < 10) {
    s.samples.push_back(sample(100, series.size() - 1));
  } else {
    for (int pct = 0; pct < 100; pct += 10)
      s.samples.push_back(sample(pct, sample_index(series, pct / 100.0, round_count)));
  }
  return s;
}

static constexpr const char* kRoundsHeader =
    "round,mean_soc_pct,soc_variance,alive_count,cumulative_reward,round_reward,mean_delay,success,max_q_delta,"
    "epsilon,out_of_range_links";

void write_rounds_csv(std::ostream& os, std::span<const RoundMetrics> series) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf.precision(12);
  buf << kRoundsHeader << '\n';
  for (const auto& m : series) {
    buf << m.round << ',' << m.mean_soc_pct << ',' << m.soc_variance << ',' << m.alive_count << ','
        << m.cumulative_reward << ',' << m.round_reward << ',' << m.mean_delay << ',' << (m.success ? 1 : 0)
        << ',' << m.max_q_delta << ',' << m.epsilon << ',' << m.out_of_range_links << '\n';
  }
  os << buf.str();
}

std::vector<RoundMetrics> read_rounds_csv(std::istream& is) {
  std::vector<RoundMetrics> out;
  std::string line;
  if (!std::getline(is, line) || line != kRoundsHeader) throw IoError("unexpected rounds CSV header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    row.imbue(std::locale::classic());
    RoundMetrics m;
    char c;
    int success = 0;
    row >> m.round >> c >> m.mean_soc_pct >> c >> m.soc_variance >> c >> m.alive_count >> c >>
        m.cumulative_reward >> c >> m.round_reward >> c >> m.mean_delay >> c >> success >> c >> m.max_q_delta >>
        c >> m.epsilon >> c >> m.out_of_range_links;
    if (!row) throw IoError("malformed rounds CSV row: " + line);
    m.success = success != 0;
    out.push_back(m);
  }
  return out;
}

}  // namespace wsn
