#include "doctest.h"

#include "fixtures.hpp"
#include "wsn/errors.hpp"
#include "wsn/metrics.hpp"

#include <sstream>

using namespace wsn;

namespace {

// Charge is measured against the fixture's unit initial energy.
SimulationParams unit_params(int nodes) {
  auto p = fixtures::small_params(nodes, 1);
  p.network.initial_energy = 1.0;
  return p;
}

std::vector<RoundMetrics> synthetic(int rounds) {
  std::vector<RoundMetrics> s(rounds + 1);
  for (int r = 0; r <= rounds; ++r) {
    s[r].round = r;
    s[r].alive_count = 10;
    s[r].mean_soc_pct = 100.0 - r * 0.1;
  }
  return s;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("fresh network: full charge, no spread, everyone alive") {
  auto p = fixtures::small_params(25, 3);
  const World w = World::create(p);
  const auto m = initial_metrics(w);
  CHECK(m.round == 0);
  CHECK(m.mean_soc_pct == doctest::Approx(100.0));
  CHECK(m.soc_variance == 0.0);
  CHECK(m.alive_count == 25);
}

TEST_CASE("variance of two nodes at full and half charge") {
  auto net = fixtures::points({{0, 0}, {1, 1}}, 10.0);
  fixtures::set_energies(net.nodes, {1.0, 0.5});
  const World w = World::from_network(unit_params(2), net);
  const auto m = initial_metrics(w);
  CHECK(m.soc_variance == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(m.mean_soc_pct == doctest::Approx(75.0).epsilon(1e-12));
}

TEST_CASE("dead nodes count as empty") {
  auto net = fixtures::points({{0, 0}, {1, 1}, {2, 2}}, 10.0);
  fixtures::set_energies(net.nodes, {0.0, 0.0, 0.0});
  const World w = World::from_network(unit_params(3), net);
  const auto m = initial_metrics(w);
  CHECK(m.mean_soc_pct == 0.0);
  CHECK(m.alive_count == 0);
  CHECK(m.soc_variance == 0.0);

  fixtures::set_energies(net.nodes, {1.0, 0.0, 1.0});
  const World w2 = World::from_network(unit_params(3), net);
  // {1, 0, 1}: mean 2/3, variance 2/9
  CHECK(initial_metrics(w2).soc_variance == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("success flag per strategy family") {
  auto p = fixtures::small_params(20, 4);
  World w = World::create(p);
  RoundOutcome o;
  o.round = 0;
  o.delivered.assign(20, 1);
  o.hop_counts.assign(20, 1);
  o.reward = RewardBreakdown{2, 3, 2, 3, 2};
  o.all_delivered = true;
  o.heads_energy_max = false;
  RoundMetrics prev;
  prev.cumulative_reward = 5.0;
  auto m = record_round(w, o, StrategyKind::FullRl, prev);
  CHECK(m.round == 1);
  CHECK(m.success);
  CHECK(m.round_reward == 12);
  CHECK(m.cumulative_reward == 17);
  CHECK_FALSE(record_round(w, o, StrategyKind::FullGt, prev).success);
  o.heads_energy_max = true;
  CHECK(record_round(w, o, StrategyKind::FullGt, prev).success);
  o.reward->data_forwarding = 0;
  CHECK_FALSE(record_round(w, o, StrategyKind::GtClusterRlHead, prev).success);

  RoundOutcome b;
  b.delivered.assign(20, 1);
  b.hop_counts.assign(20, 2);
  b.all_delivered = true;
  m = record_round(w, b, StrategyKind::BaselineMultiHop, prev);
  CHECK(m.success);
  CHECK(m.round_reward == 0.0);
  CHECK(m.mean_delay == doctest::Approx(4.0));
  b.all_delivered = false;
  CHECK_FALSE(record_round(w, b, StrategyKind::BaselineMultiHop, prev).success);
}

TEST_CASE("convergence is the first round of a long enough quiet run") {
  auto s = synthetic(100);
  for (auto& m : s) m.max_q_delta = 0.5;
  for (int r = 37; r <= 100; ++r) s[r].max_q_delta = 0.001;
  s[20].max_q_delta = 0.0;  // a short dip does not count
  CHECK(convergence_round(s, 0.01, 20) == 37);
  CHECK(summarize(s, StrategyKind::FullRl, 1, 100).convergence_round == 37);

  s[50].max_q_delta = 0.02;  // broken before 20 rounds: restart at 51
  CHECK(convergence_round(s, 0.01, 20) == 51);

  for (int r = 51; r <= 100; ++r) s[r].max_q_delta = 0.5;
  CHECK_FALSE(convergence_round(s, 0.01, 20));
  // not a learning strategy: no convergence reported
  CHECK_FALSE(summarize(synthetic(100), StrategyKind::FullGt, 1, 100).convergence_round);
}

TEST_CASE("summary of a quiet run") {
  auto s = synthetic(100);
  for (int r = 1; r <= 100; ++r) {
    s[r].success = r % 4 == 0;
    s[r].round_reward = 10;
    s[r].cumulative_reward = 10.0 * r;
    s[r].mean_delay = 3.0;
  }
  const auto sum = summarize(s, StrategyKind::FullRl, 9, 100);
  CHECK(sum.seed == 9);
  CHECK(sum.rounds_run == 100);
  CHECK(sum.success_rate == doctest::Approx(0.25));
  CHECK(sum.longevity_pct == 100.0);
  CHECK(sum.eliminated_nodes == 0);
  CHECK(sum.mean_delay == doctest::Approx(3.0));
  CHECK(sum.cumulative_reward == 1000.0);
  // fractions sample floor(f * T)
  CHECK(sum.soc_at_fractions[0] == doctest::Approx(100.0 - 10 * 0.1));
  CHECK(sum.soc_at_fractions[4] == doctest::Approx(100.0 - 90 * 0.1));
  REQUIRE(sum.samples.size() == 10);
  CHECK(sum.samples[0].time_pct == 0);
  CHECK(sum.samples[9].time_pct == 90);
  CHECK(sum.samples[9].round == 90);
  CHECK(sum.samples[3].cumulative_reward == 300.0);
}

TEST_CASE("summary of a dying run") {
  auto s = synthetic(40);
  for (int r = 25; r <= 40; ++r) s[r].alive_count = 4;
  const auto sum = summarize(s, StrategyKind::BaselineMultiHop, 1, 100);
  CHECK(sum.eliminated_nodes == 6);
  CHECK(sum.longevity_pct == doctest::Approx(40.0));
  // fractions past the end hold the last row
  CHECK(sum.samples.back().round == 40);
  CHECK(sum.samples.back().alive == 4);
}

TEST_CASE("short horizons keep only the final row") {
  const auto s = synthetic(6);
  const auto sum = summarize(s, StrategyKind::FullGt, 1, 6);
  REQUIRE(sum.samples.size() == 1);
  CHECK(sum.samples[0].round == 6);
}

TEST_CASE("empty series is an error") {
  std::vector<RoundMetrics> none;
  CHECK_THROWS_AS(summarize(none, StrategyKind::FullRl, 1, 10), EmptySeries);
}

TEST_CASE("trailing success window") {
  auto s = synthetic(10);
  for (int r = 1; r <= 10; ++r) s[r].success = r > 6;
  CHECK(trailing_success_rate(s, 4) == 1.0);
  CHECK(trailing_success_rate(s, 8) == doctest::Approx(0.5));
  CHECK(trailing_success_rate(s, 100) == doctest::Approx(0.4));
  CHECK(trailing_success_rate(synthetic(0), 5) == 0.0);
}

TEST_CASE("rounds csv round-trips") {
  auto s = synthetic(3);
  s[2].success = true;
  s[2].max_q_delta = 0.125;
  s[3].out_of_range_links = 2;
  std::stringstream io;
  write_rounds_csv(io, s);
  const auto back = read_rounds_csv(io);
  REQUIRE(back.size() == 4);
  CHECK(back[2].success);
  CHECK(back[2].max_q_delta == 0.125);
  CHECK(back[3].out_of_range_links == 2);
  CHECK(back[3].mean_soc_pct == doctest::Approx(99.7));
  std::istringstream bad("nope\n");
  CHECK_THROWS_AS(read_rounds_csv(bad), IoError);
}

}  // TEST_SUITE
