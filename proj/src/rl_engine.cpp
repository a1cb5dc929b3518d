#include "wsn/rl_engine.hpp"

#include "wsn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace wsn {

const char* to_string(RlAction a) {
  switch (a.index()) {
    case 0: return "clustering";
    case 1: return "ch_select_self";
    case 2: return "ch_select_join";
    default: return "single_hop";
  }
}

void LearningParams::validate() const {
  if (!(alpha0 > 0.0 && alpha0 <= 1.0)) throw ConfigError("learning.alpha0", "must be in (0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("learning.gamma", "must be in [0, 1)");
  if (!(epsilon0 >= 0.0 && epsilon0 <= 1.0)) throw ConfigError("learning.epsilon0", "must be in [0, 1]");
  if (!(lambda > 0.0)) throw ConfigError("learning.lambda", "must be > 0");
  if (replay_capacity < 0) throw ConfigError("learning.replay_capacity", "must be >= 0");
  if (replay_batch < 0) throw ConfigError("learning.replay_batch", "must be >= 0");
  if (prune_min_visits < 0) throw ConfigError("learning.prune_min_visits", "must be >= 0");
  if (prune_window_rounds < 1) throw ConfigError("learning.prune_window_rounds", "must be >= 1");
  if (neighbor_cap < 0 || neighbor_cap > 255) throw ConfigError("learning.neighbor_cap", "must be in [0, 255]");
}

// Byte-packed key: E | C | N | R | H | action.
std::uint64_t QTable::key(const AgentState& s, RlAction a) {
  return (static_cast<std::uint64_t>(s.energy_level) << 40) | (static_cast<std::uint64_t>(s.is_head) << 32) |
         (static_cast<std::uint64_t>(s.neighbor_count) << 24) |
         (static_cast<std::uint64_t>(s.energy_ratio_bucket) << 16) |
         (static_cast<std::uint64_t>(s.stage_level) << 8) | static_cast<std::uint64_t>(a.index());
}

std::pair<AgentState, RlAction> QTable::decode(std::uint64_t k) {
  AgentState s;
  s.energy_level = static_cast<int>((k >> 40) & 0xff);
  s.is_head = ((k >> 32) & 0xff) != 0;
  s.neighbor_count = static_cast<int>((k >> 24) & 0xff);
  s.energy_ratio_bucket = static_cast<int>((k >> 16) & 0xff);
  s.stage_level = static_cast<int>((k >> 8) & 0xff);
  return {s, RlAction::from_index(static_cast<int>(k & 0xff))};
}

double QTable::q(const AgentState& s, RlAction a) const {
  auto it = entries_.find(key(s, a));
  return it == entries_.end() ? 0.0 : it->second.q;
}

int QTable::visits(const AgentState& s, RlAction a) const {
  auto it = entries_.find(key(s, a));
  return it == entries_.end() ? 0 : it->second.visits;
}

double QTable::max_q(const AgentState& s) const {
  double best = q(s, actions::kAll[0]);
  for (std::size_t i = 1; i < actions::kAll.size(); ++i) best = std::max(best, q(s, actions::kAll[i]));
  return best;
}

void QTable::dump_csv(std::ostream& os) const {
  std::vector<std::uint64_t> keys;
  keys.reserve(entries_.size());
  for (const auto& kv : entries_) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  os << "energy_level,is_head,neighbor_count,energy_ratio_bucket,stage_level,action,q,visits\n";
  for (auto k : keys) {
    const auto [s, a] = decode(k);
    const auto& e = entries_.at(k);
    os << s.energy_level << ',' << int(s.is_head) << ',' << s.neighbor_count << ',' << s.energy_ratio_bucket << ','
       << s.stage_level << ',' << to_string(a) << ',' << e.q << ',' << e.visits << '\n';
  }
}

std::size_t state_action_bound(int neighbor_cap, int max_stage_level) {
  return std::size_t{10} * 2 * static_cast<std::size_t>(neighbor_cap + 1) * 10 *
         static_cast<std::size_t>(max_stage_level + 1) * RlAction::kCount;
}

void ReplayBuffer::push(NodeId owner, const Experience& e) {
  if (capacity_ == 0) return;
  if (items_.size() < capacity_) {
    items_.push_back({owner, e});
  } else {
    items_[start_] = {owner, e};
    start_ = (start_ + 1) % capacity_;
  }
}

std::vector<std::size_t> ReplayBuffer::sample(int batch, Rng& rng) const {
  const std::size_t n = items_.size();
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(std::max(0, batch)), n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  return idx;
}

int energy_ratio_bucket(double energy, double reference_max) {
  if (!(reference_max > 0.0) || energy >= reference_max) return 9;
  const int b = static_cast<int>(std::floor(9.0 * energy / reference_max));
  return std::clamp(b, 0, 8);
}

AgentState observe_state(const SensorNode& node, int alive_neighbors, const StateContext& ctx) {
  AgentState s;
  s.energy_level = std::clamp(static_cast<int>(std::floor(10.0 * node.energy / ctx.initial_energy)), 0, 9);
  s.is_head = ctx.is_head;
  s.neighbor_count = std::clamp(alive_neighbors, 0, ctx.neighbor_cap);
  s.energy_ratio_bucket = energy_ratio_bucket(node.energy, ctx.reference_max_energy);
  s.stage_level = ctx.stage_level;
  return s;
}

AgentState observe_state(const SensorNode& node, std::span<const SensorNode> nodes, const Topology& topology,
                         const StateContext& ctx) {
  return observe_state(node, alive_neighbor_count(node.id, nodes, topology), ctx);
}

RlAction greedy_action(const QTable& q, const AgentState& s, std::span<const RlAction> legal) {
  RlAction best = legal.front();
  double best_q = q.q(s, best);
  for (std::size_t i = 1; i < legal.size(); ++i) {
    const double v = q.q(s, legal[i]);
    if (v > best_q) {
      best_q = v;
      best = legal[i];
    }
  }
  return best;
}

RlAction select_action(const QTable& q, const AgentState& s, double epsilon, Rng& rng,
                       std::span<const RlAction> legal) {
  if (uniform01(rng) < epsilon) return legal[uniform_index(rng, legal.size())];
  return greedy_action(q, s, legal);
}

double q_update(QTable& q, const Experience& e, const LearningParams& params) {
  const double next = e.terminal ? 0.0 : q.max_q(e.s_next);
  auto& entry = q.at(e.s, e.a);
  const double alpha = params.adaptive_alpha ? 1.0 / (1.0 + entry.visits) : params.alpha0;
  const double updated = (1.0 - alpha) * entry.q + alpha * (e.r + params.gamma * next);
  const double delta = std::abs(updated - entry.q);
  entry.q = updated;
  ++entry.visits;
  return delta;
}

double replay_step(QTable& q, const ReplayBuffer& buffer, const LearningParams& params, Rng& rng) {
  return replay_step([&q](NodeId) -> QTable& { return q; }, buffer, params, rng);
}

double decay_epsilon(const LearningParams& params, int t) {
  return params.epsilon0 * std::exp(-params.lambda * static_cast<double>(std::max(0, t)));
}

bool all_heads_energy_max(const ClusterHierarchy& hierarchy, std::span<const SensorNode> nodes) {
  for (const auto& stage : hierarchy.stages) {
    for (const auto& c : stage.clusters) {
      if (!c.head) return false;
      const double head_energy = nodes[*c.head].energy;
      for (NodeId m : c.members)
        if (nodes[m].energy > head_energy) return false;
    }
  }
  return true;
}

RewardBreakdown compute_round_reward(const ClusterHierarchy& hierarchy, std::span<const SensorNode> nodes,
                                     bool forwarding_ok) {
  RewardBreakdown r;
  r.valid_clustering = stages_disjoint(hierarchy) ? 2 : 0;
  r.ch_selection = all_heads_energy_max(hierarchy, nodes) ? 3 : 1;
  r.hierarchy_purity = hierarchy_pure(hierarchy) ? 2 : 0;

  bool final_is_max = hierarchy.final_transmitter.has_value();
  if (final_is_max) {
    const double fe = nodes[*hierarchy.final_transmitter].energy;
    for (const auto& n : nodes)
      if (n.alive && n.energy > fe) final_is_max = false;
  }
  r.final_transmitter = final_is_max ? 3 : 1;
  r.data_forwarding = forwarding_ok ? 2 : 0;
  return r;
}

RewardBreakdown decision_reward(const RewardBreakdown& round, const ClusterHierarchy& hierarchy,
                                std::span<const SensorNode> nodes, int stage, NodeId agent) {
  RewardBreakdown r = round;
  if (stage < 0 || stage >= static_cast<int>(hierarchy.stages.size())) return r;
  for (const auto& c : hierarchy.stages[stage].clusters) {
    if (!c.contains(agent)) continue;
    bool ok = c.head.has_value();
    for (NodeId m : c.members)
      if (ok && nodes[m].energy > nodes[*c.head].energy) ok = false;
    r.ch_selection = ok ? 3 : 1;
    break;
  }
  return r;
}

std::size_t prune(QTable& q, const LearningParams& params, int t) {
  if (params.prune_min_visits <= 0 || t <= 0 || t % params.prune_window_rounds != 0) return 0;
  return q.erase_if([&](const QTable::Entry& e) { return e.visits < params.prune_min_visits; });
}

}  // namespace wsn
