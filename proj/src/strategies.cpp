#include "wsn/strategies.hpp"

#include "wsn/errors.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace wsn {

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::FullRl: return "full_rl";
    case StrategyKind::FullGt: return "full_gt";
    case StrategyKind::GtClusterRlHead: return "gt_rl";
    case StrategyKind::RlClusterGtHead: return "rl_gt";
    case StrategyKind::BaselineMultiHop: return "baseline";
  }
  return "unknown";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) {
  for (auto k : kAllStrategies)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

bool uses_learning(StrategyKind k) {
  return k == StrategyKind::FullRl || k == StrategyKind::GtClusterRlHead || k == StrategyKind::RlClusterGtHead;
}

bool is_clustered(StrategyKind k) { return k != StrategyKind::BaselineMultiHop; }

void SimulationParams::validate() const {
  network.validate();
  energy.validate();
  learning.validate();
  weights.validate();
  game.validate();
  clustering.validate();
  if (routing.processing_per_hop < 0.0) throw ConfigError("routing.processing_per_hop", "must be >= 0");
}

World World::create(const SimulationParams& params) {
  params.validate();
  return from_network(params, generate_network(params.network));
}

World World::from_network(const SimulationParams& params, Network net) {
  World w;
  w.params = params;
  w.params.network.node_count = static_cast<int>(net.nodes.size());
  w.nodes = std::move(net.nodes);
  w.topology = std::move(net.topology);
  const double half = params.network.area_side / 2.0;
  w.sink = params.routing.sink.value_or(Point2(half, half));
  return w;
}

AgentPool::AgentPool(int node_count, bool shared) : shared_(shared) {
  if (shared) {
    tables_.emplace_back(-1);
  } else {
    tables_.reserve(static_cast<std::size_t>(node_count));
    for (int i = 0; i < node_count; ++i) tables_.emplace_back(i);
  }
}

std::size_t AgentPool::max_entries() const {
  std::size_t m = 0;
  for (const auto& t : tables_) m = std::max(m, t.size());
  return m;
}

std::size_t AgentPool::prune(const LearningParams& params, int t) {
  std::size_t removed = 0;
  for (auto& table : tables_) removed += wsn::prune(table, params, t);
  return removed;
}

LearningState::LearningState(const LearningParams& params, int node_count, Rng stream)
    : agents(node_count, params.shared_table), replay(params.replay_capacity), rng(std::move(stream)) {}

Rng clustering_stream(const World& world, int t) {
  return derive_stream(world.params.network.rng_seed, {0x636c7573ULL, static_cast<std::uint64_t>(t)});
}

namespace {

// Energy charged this round before draining, plus routing bookkeeping.
struct Transmission {
  Eigen::VectorXd cost;
  std::vector<char> delivered;
  std::vector<int> hops;
  int out_of_range = 0;
  bool all_delivered = true;
};

Transmission make_transmission(const World& w) {
  const auto n = w.nodes.size();
  Transmission tx;
  tx.cost = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  tx.delivered.assign(n, 0);
  tx.hops.assign(n, 0);
  return tx;
}

// Members send one packet to their head; heads aggregate everything they hold
// into one packet for the next stage; the final head sends to the sink.
Transmission transmit_hierarchy(const World& w, const ClusterHierarchy& h) {
  Transmission tx = make_transmission(w);
  const long long bits = w.packet_bits();
  const auto& model = w.params.energy;
  const double range = w.topology.range;
  const auto n = w.nodes.size();

  std::vector<std::vector<NodeId>> head_of(h.stages.size(), std::vector<NodeId>(n, -1));
  for (std::size_t k = 0; k < h.stages.size(); ++k) {
    for (const auto& c : h.stages[k].clusters) {
      const NodeId head = *c.head;
      for (NodeId m : c.members) {
        head_of[k][m] = head;
        if (m == head) continue;
        const double d = w.topology.distance(m, head);
        tx.cost(m) += tx_cost(bits, d, model);
        tx.cost(head) += rx_cost(bits, model);
        if (d > range) ++tx.out_of_range;
      }
      tx.cost(head) += aggregation_cost(bits, model) * static_cast<double>(c.members.size());
    }
  }
  const NodeId final_head = *h.final_transmitter;
  const double d_sink = w.sink_distance(final_head);
  tx.cost(final_head) += tx_cost(bits, d_sink, model);
  if (d_sink > range) ++tx.out_of_range;

  for (NodeId i : h.stages.front().participants()) {
    NodeId holder = i;
    int hops = 1;  // final head -> sink
    for (std::size_t k = 0; k < h.stages.size(); ++k) {
      const NodeId head = head_of[k][holder];
      if (head >= 0 && head != holder) {
        ++hops;
        holder = head;
      }
    }
    tx.delivered[i] = 1;
    tx.hops[i] = hops;
  }
  return tx;
}

// Minimum-hop routing towards the sink over alive nodes. Ties on the next hop
// go to the lowest id. Relays forward without aggregation.
Transmission transmit_shortest_path(const World& w) {
  Transmission tx = make_transmission(w);
  const long long bits = w.packet_bits();
  const auto& model = w.params.energy;
  const int n = static_cast<int>(w.nodes.size());
  const double range = w.topology.range;

  std::vector<int> level(n, -1);
  std::deque<NodeId> queue;
  for (int i = 0; i < n; ++i) {
    if (w.nodes[i].alive && w.sink_distance(i) <= range) {
      level[i] = 1;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : w.topology.adjacency[u]) {
      if (w.nodes[v].alive && level[v] < 0) {
        level[v] = level[u] + 1;
        queue.push_back(v);
      }
    }
  }
  std::vector<NodeId> next(n, -1);  // -1: the sink
  for (int i = 0; i < n; ++i) {
    if (level[i] <= 1) continue;
    for (NodeId j : w.topology.adjacency[i]) {  // ascending ids
      if (w.nodes[j].alive && level[j] == level[i] - 1) {
        next[i] = j;
        break;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!w.nodes[i].alive) continue;
    if (level[i] < 0) {
      tx.all_delivered = false;
      continue;
    }
    NodeId holder = i;
    while (true) {
      const NodeId to = next[holder];
      if (to < 0) {
        tx.cost(holder) += tx_cost(bits, w.sink_distance(holder), model);
        break;
      }
      tx.cost(holder) += tx_cost(bits, w.topology.distance(holder, to), model);
      tx.cost(to) += rx_cost(bits, model);
      holder = to;
    }
    tx.delivered[i] = 1;
    tx.hops[i] = level[i];
  }
  return tx;
}

// Idle drain, clamped draining and death bookkeeping.
void settle_energy(World& w, const Transmission& tx, RoundOutcome& out) {
  const auto n = w.nodes.size();
  out.energy_spent = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    auto& node = w.nodes[i];
    if (!node.alive) continue;
    const double before = node.energy;
    node = drain(node, tx.cost(static_cast<Eigen::Index>(i)) + w.params.energy.e_idle);
    out.energy_spent(static_cast<Eigen::Index>(i)) = before - node.energy;
    if (!node.alive) out.deaths_this_round.push_back(node.id);
  }
  out.delivered = tx.delivered;
  out.hop_counts = tx.hops;
  out.out_of_range_links = tx.out_of_range;
  out.all_delivered = tx.all_delivered;
}

std::vector<int> neighbor_counts(const World& w) {
  std::vector<int> counts(w.nodes.size(), 0);
  for (const auto& node : w.nodes)
    if (node.alive) counts[node.id] = alive_neighbor_count(node.id, w.nodes, w.topology);
  return counts;
}

void require_alive(const World& w) {
  if (alive_count(w.nodes) == 0) throw NoAliveNodes();
}

struct Decision {
  NodeId agent;
  int stage;
  AgentState s;
  RlAction a;
};

// Q-learning bookkeeping for one round: decisions are logged while the
// hierarchy is built, then credited with the round reward.
class RoundLearner {
 public:
  RoundLearner(const World& w, LearningState& ls, int t)
      : w_(w), ls_(ls), params_(w.params.learning), epsilon_(decay_epsilon(params_, t)),
        neighbors_(neighbor_counts(w)) {}

  AgentState observe(NodeId id, int stage, double reference_max) const {
    StateContext ctx{w_.initial_energy(), reference_max, stage, stage > 0, params_.neighbor_cap};
    return observe_state(w_.nodes[id], neighbors_[id], ctx);
  }

  RlAction decide(NodeId id, int stage, const AgentState& s, std::span<const RlAction> legal) {
    const RlAction a = select_action(ls_.agents.table(id), s, epsilon_, ls_.rng, legal);
    log_.push_back({id, stage, s, a});
    return a;
  }

  // Members vote; the electing member with the highest Q(s, ElectSelf) leads.
  // Nobody electing falls back to the energy argmax.
  HeadSelector head_selector(std::span<const RlAction> legal) {
    return [this, legal](const Cluster& c, int stage) {
      double ref = 0.0;
      for (NodeId m : c.members) ref = std::max(ref, w_.nodes[m].energy);
      std::optional<NodeId> best;
      double best_q = -std::numeric_limits<double>::infinity();
      for (NodeId m : c.members) {
        const AgentState s = observe(m, stage, ref);
        const RlAction a = decide(m, stage, s, legal);
        if (!a.elects_self()) continue;
        const double q = ls_.agents.table(m).q(s, a);
        if (q > best_q) {
          best_q = q;
          best = m;
        }
      }
      return best.value_or(select_head_by_energy(c, w_.nodes));
    };
  }

  LearningTelemetry learn(const RoundOutcome& out, const std::vector<SensorNode>& snapshot, int t) {
    LearningTelemetry tel;
    tel.epsilon = epsilon_;
    tel.decisions = static_cast<int>(log_.size());
    for (const auto& d : log_) {
      // Each decision is its own episode: the round reward is its whole return.
      const double r = decision_reward(*out.reward, *out.hierarchy, snapshot, d.stage, d.agent).total();
      const Experience e{d.s, d.a, r, d.s, true};
      tel.max_q_delta = std::max(tel.max_q_delta, q_update(ls_.agents.table(d.agent), e, params_));
      ls_.replay.push(d.agent, e);
    }
    tel.max_q_delta = std::max(
        tel.max_q_delta,
        replay_step([this](NodeId owner) -> QTable& { return ls_.agents.table(owner); }, ls_.replay, params_,
                    ls_.rng));
    ls_.agents.prune(params_, t + 1);
    tel.max_table_entries = ls_.agents.max_entries();
    return tel;
  }

 private:
  const World& w_;
  LearningState& ls_;
  const LearningParams& params_;
  double epsilon_;
  std::vector<int> neighbors_;
  std::vector<Decision> log_;
};

RoundOutcome finish_clustered(World& w, ClusterHierarchy hierarchy, const std::vector<SensorNode>& snapshot,
                              int t) {
  RoundOutcome out;
  out.round = t;
  const Transmission tx = transmit_hierarchy(w, hierarchy);
  out.reward = compute_round_reward(hierarchy, snapshot, tx.all_delivered);
  out.heads_energy_max = all_heads_energy_max(hierarchy, snapshot);
  settle_energy(w, tx, out);
  out.hierarchy = std::move(hierarchy);
  return out;
}

UtilityFeatures features_of(const World& w) {
  return utility_features(w.nodes, w.topology, w.initial_energy(), w.params.game.load_cap);
}

HeadSelector utility_selector(const UtilityFeatures& f, const UtilityWeights& weights) {
  return [&f, &weights](const Cluster& c, int) { return select_head_by_utility(c, f, weights); };
}

std::vector<Cluster> gt_first_stage(const World& w, const UtilityFeatures& f) {
  const auto players = alive_ids(w.nodes);
  return best_response_dynamics(players, w.nodes, w.topology, w.params.weights, f, w.params.game.max_iters)
      .clusters();
}

}  // namespace

RoundOutcome run_round_full_rl(World& w, LearningState& ls, int t) {
  require_alive(w);
  const std::vector<SensorNode> snapshot = w.nodes;
  RoundLearner learner(w, ls, t);
  Rng rng = clustering_stream(w, t);
  auto hierarchy = build_hierarchy(w.nodes, w.topology, learner.head_selector(actions::kAll),
                                   w.params.network.stage_count, w.params.clustering, rng);
  RoundOutcome out = finish_clustered(w, std::move(hierarchy), snapshot, t);
  out.learning = learner.learn(out, snapshot, t);
  return out;
}

RoundOutcome run_round_full_gt(World& w, int t) {
  require_alive(w);
  const std::vector<SensorNode> snapshot = w.nodes;
  const UtilityFeatures f = features_of(w);
  Rng rng = clustering_stream(w, t);
  auto hierarchy = build_hierarchy(w.nodes, w.topology, utility_selector(f, w.params.weights),
                                   w.params.network.stage_count, w.params.clustering, rng, gt_first_stage(w, f));
  return finish_clustered(w, std::move(hierarchy), snapshot, t);
}

RoundOutcome run_round_gt_rl(World& w, LearningState& ls, int t) {
  require_alive(w);
  const std::vector<SensorNode> snapshot = w.nodes;
  const UtilityFeatures f = features_of(w);
  auto first = gt_first_stage(w, f);
  for (auto& c : first) c.head.reset();  // membership only; heads come from the agents
  RoundLearner learner(w, ls, t);
  Rng rng = clustering_stream(w, t);
  auto hierarchy = build_hierarchy(w.nodes, w.topology, learner.head_selector(actions::kHeadChoice),
                                   w.params.network.stage_count, w.params.clustering, rng, std::move(first));
  RoundOutcome out = finish_clustered(w, std::move(hierarchy), snapshot, t);
  out.learning = learner.learn(out, snapshot, t);
  return out;
}

RoundOutcome run_round_rl_gt(World& w, LearningState& ls, int t) {
  require_alive(w);
  const std::vector<SensorNode> snapshot = w.nodes;
  const UtilityFeatures f = features_of(w);
  RoundLearner learner(w, ls, t);
  const auto players = alive_ids(w.nodes);

  // Each agent either founds a cluster or joins the nearest founder in range.
  std::vector<NodeId> founders;
  for (NodeId p : players) {
    double ref = w.nodes[p].energy;
    for (NodeId j : w.topology.adjacency[p])
      if (w.nodes[j].alive) ref = std::max(ref, w.nodes[j].energy);
    const RlAction a = learner.decide(p, 0, learner.observe(p, 0, ref), actions::kClusterChoice);
    if (a == actions::kClustering) founders.push_back(p);
  }
  std::vector<Cluster> first;
  std::vector<int> cluster_of(w.nodes.size(), -1);
  for (NodeId fnd : founders) {
    cluster_of[fnd] = static_cast<int>(first.size());
    first.push_back(Cluster{static_cast<int>(first.size()), {fnd}, std::nullopt});
  }
  for (NodeId p : players) {
    if (cluster_of[p] >= 0) continue;
    NodeId nearest = -1;
    for (NodeId fnd : founders) {
      const double d = w.topology.distance(p, fnd);
      if (d <= w.topology.range && (nearest < 0 || d < w.topology.distance(p, nearest))) nearest = fnd;
    }
    if (nearest >= 0) {
      first[cluster_of[nearest]].members.push_back(p);
    } else {
      cluster_of[p] = static_cast<int>(first.size());
      first.push_back(Cluster{static_cast<int>(first.size()), {p}, std::nullopt});
    }
  }
  for (auto& c : first) std::sort(c.members.begin(), c.members.end());

  Rng rng = clustering_stream(w, t);
  auto hierarchy = build_hierarchy(w.nodes, w.topology, utility_selector(f, w.params.weights),
                                   w.params.network.stage_count, w.params.clustering, rng, std::move(first));
  RoundOutcome out = finish_clustered(w, std::move(hierarchy), snapshot, t);
  out.learning = learner.learn(out, snapshot, t);
  return out;
}

RoundOutcome run_round_baseline(World& w, int t) {
  require_alive(w);
  RoundOutcome out;
  out.round = t;
  const Transmission tx = transmit_shortest_path(w);
  settle_energy(w, tx, out);
  return out;
}

double measure_delay(const RoundOutcome& outcome, double processing_per_hop) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < outcome.delivered.size(); ++i) {
    if (!outcome.delivered[i]) continue;
    sum += outcome.hop_counts[i] * (1.0 + processing_per_hop);
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

Simulation::Simulation(const SimulationParams& params, StrategyKind kind)
    : Simulation(params, kind, (params.validate(), generate_network(params.network))) {}

Simulation::Simulation(const SimulationParams& params, StrategyKind kind, Network net)
    : kind_(kind), world_(World::from_network(params, std::move(net))) {
  world_.params.validate();
  if (uses_learning(kind)) {
    learning_ = std::make_unique<LearningState>(
        world_.params.learning, static_cast<int>(world_.nodes.size()),
        derive_stream(world_.params.network.rng_seed, {0x6167656e7473ULL, static_cast<std::uint64_t>(kind)}));
  }
}

bool Simulation::finished() const {
  return round_ >= world_.params.network.round_count || alive_count(world_.nodes) == 0;
}

RoundOutcome Simulation::step() {
  const int t = round_;
  RoundOutcome out;
  switch (kind_) {
    case StrategyKind::FullRl: out = run_round_full_rl(world_, *learning_, t); break;
    case StrategyKind::FullGt: out = run_round_full_gt(world_, t); break;
    case StrategyKind::GtClusterRlHead: out = run_round_gt_rl(world_, *learning_, t); break;
    case StrategyKind::RlClusterGtHead: out = run_round_rl_gt(world_, *learning_, t); break;
    case StrategyKind::BaselineMultiHop: out = run_round_baseline(world_, t); break;
  }
  ++round_;
  return out;
}

}  // namespace wsn
