#include "doctest.h"

#include "fixtures.hpp"
#include "wsn/metrics.hpp"
#include "wsn/scenario.hpp"

#include <set>
#include <sstream>

using namespace wsn;

namespace {

struct Case {
  SimulationParams params;
  StrategyKind kind;
  int rounds;
};

Case random_case(std::uint64_t i) {
  Rng rng = derive_stream(0x5eed, {i});
  Case c;
  auto& p = c.params;
  p.network.node_count = 1 + static_cast<int>(uniform_index(rng, 40));
  p.network.rng_seed = rng();
  p.network.comm_range_fraction = 0.15 + 0.85 * uniform01(rng);
  p.network.stage_count = 1 + static_cast<int>(uniform_index(rng, 4));
  p.network.initial_energy = 0.001 + 0.02 * uniform01(rng);  // deaths within a few rounds
  p.clustering.stage_target_sizes = {2 + static_cast<int>(uniform_index(rng, 5)),
                                     2 + static_cast<int>(uniform_index(rng, 5))};
  p.weights = {uniform01(rng) + 0.01, uniform01(rng), uniform01(rng)};
  p.learning.shared_table = uniform01(rng) < 0.2;
  c.kind = kAllStrategies[uniform_index(rng, kAllStrategies.size())];
  c.rounds = 1 + static_cast<int>(uniform_index(rng, 15));
  p.network.round_count = c.rounds;
  return c;
}

// Returns the first broken invariant, or an empty string.
std::string check_round(const std::vector<SensorNode>& before, const World& after, const RoundOutcome& out,
                        StrategyKind kind) {
  const int n = static_cast<int>(before.size());
  for (int i = 0; i < n; ++i) {
    if (after.nodes[i].energy > before[i].energy) return "energy rose";
    if (after.nodes[i].alive && !before[i].alive) return "node revived";
    if (after.nodes[i].alive != (after.nodes[i].energy > 0.0)) return "alive flag out of sync";
    if (!before[i].alive) {
      if (out.energy_spent(i) != 0.0) return "dead node spent energy";
      if (out.delivered[i]) return "dead node delivered";
    }
  }
  if (alive_count(after.nodes) > alive_count(before)) return "alive count rose";
  if (!is_clustered(kind)) return {};

  const auto& h = *out.hierarchy;
  if (!stages_disjoint(h)) return "overlapping clusters";
  if (!hierarchy_pure(h)) return "impure hierarchy";
  if (h.stages.front().participants() != alive_ids(before)) return "stage 0 is not the alive set";
  for (std::size_t k = 0; k < h.stages.size(); ++k) {
    for (const auto& c : h.stages[k].clusters) {
      if (c.members.empty()) return "empty cluster";
      if (!c.head || !c.contains(*c.head)) return "head outside its cluster";
      for (NodeId m : c.members)
        if (!before[m].alive) return "dead node clustered";
    }
    const auto heads = h.stages[k].heads();
    if (k + 1 < h.stages.size() && heads.size() > 1 && h.stages[k + 1].heads().size() >= heads.size())
      return "no contraction at stage " + std::to_string(k);
  }
  const auto& last = h.stages.back();
  if (last.clusters.size() != 1) return "last stage has several clusters";
  if (!h.final_transmitter || h.final_transmitter != last.clusters[0].head) return "final transmitter mismatch";
  return {};
}

}  // namespace

TEST_SUITE("invariants") {

TEST_CASE("randomised rounds keep every structural invariant") {
  int cases = 0, rounds = 0, with_deaths = 0;
  for (std::uint64_t i = 0; i < 1200; ++i) {
    const Case c = random_case(i);
    Simulation sim(c.params, c.kind);
    bool died = false;
    const std::size_t bound = state_action_bound(c.params.learning.neighbor_cap, c.params.network.stage_count);
    while (!sim.finished()) {
      const auto before = sim.world().nodes;
      const auto out = sim.step();
      const auto broken = check_round(before, sim.world(), out, c.kind);
      if (!broken.empty()) FAIL_CHECK("case " << i << " round " << out.round << ": " << broken);
      if (!out.deaths_this_round.empty()) died = true;
      if (sim.learning() && sim.learning()->agents.max_entries() > bound) FAIL_CHECK("q-table over bound, case " << i);
      ++rounds;
    }
    with_deaths += died ? 1 : 0;
    ++cases;
  }
  CHECK(cases >= 1000);
  CHECK(with_deaths > 100);  // the death path is exercised
  MESSAGE(cases << " cases, " << rounds << " rounds, " << with_deaths << " with deaths");
}

TEST_CASE("series-level invariants") {
  for (std::uint64_t i = 0; i < 200; ++i) {
    const Case c = random_case(10'000 + i);
    ScenarioSpec spec;
    spec.sim = c.params;
    const auto r = run_single(spec, c.kind, c.params.network.rng_seed);
    REQUIRE(r.ok());
    for (std::size_t k = 1; k < r.series.size(); ++k) {
      CHECK(r.series[k].alive_count <= r.series[k - 1].alive_count);
      CHECK(r.series[k].mean_soc_pct <= r.series[k - 1].mean_soc_pct + 1e-9);
      CHECK(r.series[k].cumulative_reward >= r.series[k - 1].cumulative_reward);
      CHECK(r.series[k].soc_variance >= 0.0);
    }
  }
}

TEST_CASE("fixed seed gives a byte-identical round csv") {
  for (std::uint64_t i = 0; i < 25; ++i) {
    const Case c = random_case(20'000 + i);
    ScenarioSpec spec;
    spec.sim = c.params;
    spec.sim.network.round_count = 40;
    spec.sim.network.initial_energy = 0.05;
    std::ostringstream a, b;
    write_rounds_csv(a, run_single(spec, c.kind, i).series);
    write_rounds_csv(b, run_single(spec, c.kind, i).series);
    CHECK(a.str() == b.str());
  }
}

}  // TEST_SUITE
