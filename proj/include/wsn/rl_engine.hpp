#pragma once

#include "wsn/clustering.hpp"
#include "wsn/net_model.hpp"
#include "wsn/rng.hpp"

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

namespace wsn {

/// Discretised per-node observation (E, C, N, R, H).
struct AgentState {
  int energy_level = 0;         // floor(10 * energy / initial), clamped to 0..9
  bool is_head = false;         // currently a cluster head (participating above stage 0)
  int neighbor_count = 0;       // alive in-range neighbours, clamped to the neighbour cap
  int energy_ratio_bucket = 0;  // energy relative to the reference maximum, 0..9
  int stage_level = 0;          // hierarchy stage the decision is made at

  auto operator<=>(const AgentState&) const = default;
};

enum class ActionKind : std::uint8_t { Clustering, ChSelect, SingleHop };
enum class ChChoice : std::uint8_t { ElectSelf, JoinNeighborCh };

/// One of the four concrete actions. `choice` is meaningful only for ChSelect.
struct RlAction {
  ActionKind kind = ActionKind::Clustering;
  ChChoice choice = ChChoice::ElectSelf;

  static constexpr int kCount = 4;

  /// Dense index in enum order: Clustering, ChSelect/ElectSelf, ChSelect/Join, SingleHop.
  constexpr int index() const {
    switch (kind) {
      case ActionKind::Clustering: return 0;
      case ActionKind::ChSelect: return choice == ChChoice::ElectSelf ? 1 : 2;
      case ActionKind::SingleHop: return 3;
    }
    return 0;
  }
  static constexpr RlAction from_index(int i) {
    switch (i) {
      case 0: return {ActionKind::Clustering, ChChoice::ElectSelf};
      case 1: return {ActionKind::ChSelect, ChChoice::ElectSelf};
      case 2: return {ActionKind::ChSelect, ChChoice::JoinNeighborCh};
      default: return {ActionKind::SingleHop, ChChoice::ElectSelf};
    }
  }
  constexpr bool elects_self() const { return kind == ActionKind::ChSelect && choice == ChChoice::ElectSelf; }
  constexpr bool operator==(const RlAction& o) const { return index() == o.index(); }
};

namespace actions {
inline constexpr RlAction kClustering = RlAction::from_index(0);
inline constexpr RlAction kElectSelf = RlAction::from_index(1);
inline constexpr RlAction kJoinNeighborCh = RlAction::from_index(2);
inline constexpr RlAction kSingleHop = RlAction::from_index(3);
inline constexpr std::array<RlAction, 4> kAll{kClustering, kElectSelf, kJoinNeighborCh, kSingleHop};
inline constexpr std::array<RlAction, 2> kHeadChoice{kElectSelf, kJoinNeighborCh};
inline constexpr std::array<RlAction, 2> kClusterChoice{kClustering, kJoinNeighborCh};
}  // namespace actions

const char* to_string(RlAction a);

struct LearningParams {
  double alpha0 = 0.7;
  double gamma = 0.9;
  double epsilon0 = 1.0;
  double lambda = 0.01;
  bool adaptive_alpha = true;
  int replay_capacity = 1000;
  int replay_batch = 16;
  int prune_min_visits = 2;
  int prune_window_rounds = 100;
  int neighbor_cap = 10;
  bool shared_table = false;

  void validate() const;
};

struct Experience {
  AgentState s;
  RlAction a;
  double r = 0.0;
  AgentState s_next;
  bool terminal = false;  // no successor decision; the bootstrap term is zero
};

/// Sparse Q-table. Absent entries read as q = 0, visits = 0.
class QTable {
 public:
  struct Entry {
    double q = 0.0;
    int visits = 0;
  };

  explicit QTable(NodeId owner = -1) : owner_(owner) {}

  NodeId owner() const { return owner_; }
  double q(const AgentState& s, RlAction a) const;
  int visits(const AgentState& s, RlAction a) const;
  double max_q(const AgentState& s) const;
  std::size_t size() const { return entries_.size(); }

  Entry& at(const AgentState& s, RlAction a) { return entries_[key(s, a)]; }
  /// Removes entries matching `pred(entry)`; returns how many were removed.
  template <typename Pred>
  std::size_t erase_if(Pred pred) {
    return std::erase_if(entries_, [&](const auto& kv) { return pred(kv.second); });
  }

  /// CSV rows "energy_level,is_head,neighbor_count,energy_ratio_bucket,stage_level,action,q,visits", sorted.
  void dump_csv(std::ostream& os) const;

  static std::uint64_t key(const AgentState& s, RlAction a);
  static std::pair<AgentState, RlAction> decode(std::uint64_t key);

 private:
  NodeId owner_;
  std::unordered_map<std::uint64_t, Entry> entries_;
};

/// Upper bound on distinct (state, action) entries for a discretisation.
std::size_t state_action_bound(int neighbor_cap, int max_stage_level);

/// Bounded FIFO of experiences tagged with the agent that produced them.
class ReplayBuffer {
 public:
  struct Item {
    NodeId owner;
    Experience exp;
  };

  explicit ReplayBuffer(int capacity = 1000) : capacity_(static_cast<std::size_t>(std::max(0, capacity))) {}

  void push(NodeId owner, const Experience& e);
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Item& operator[](std::size_t i) const { return items_[(start_ + i) % items_.size()]; }

  /// min(batch, size) distinct indices, uniformly without replacement.
  std::vector<std::size_t> sample(int batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t start_ = 0;
  std::vector<Item> items_;
};

struct RewardBreakdown {
  int valid_clustering = 0;   // 2 or 0
  int ch_selection = 0;       // 3 or 1
  int hierarchy_purity = 0;   // 2 or 0
  int final_transmitter = 0;  // 3 or 1
  int data_forwarding = 0;    // 2 or 0

  int total() const {
    return valid_clustering + ch_selection + hierarchy_purity + final_transmitter + data_forwarding;
  }
  static constexpr int kMax = 12;
};

struct StateContext {
  double initial_energy = 1.0;
  double reference_max_energy = 1.0;  // highest energy in the group the node is compared against
  int stage_level = 0;
  bool is_head = false;
  int neighbor_cap = 10;
};

/// Energy relative to the reference maximum: 9 for the maximum itself,
/// otherwise floor(9 * ratio) in 0..8.
int energy_ratio_bucket(double energy, double reference_max);

AgentState observe_state(const SensorNode& node, int alive_neighbors, const StateContext& ctx);
AgentState observe_state(const SensorNode& node, std::span<const SensorNode> nodes, const Topology& topology,
                         const StateContext& ctx);

/// Epsilon-greedy over `legal`. Greedy ties go to the earliest legal action.
RlAction select_action(const QTable& q, const AgentState& s, double epsilon, Rng& rng,
                       std::span<const RlAction> legal = actions::kAll);

/// Greedy action over `legal`, earliest on ties.
RlAction greedy_action(const QTable& q, const AgentState& s, std::span<const RlAction> legal = actions::kAll);

/// One Bellman update; returns |delta Q|. With adaptive_alpha the rate is
/// 1 / (1 + visits) using the count before this visit.
double q_update(QTable& q, const Experience& e, const LearningParams& params);

/// Replays a batch into the table chosen by `table_for(owner)`; returns the largest |delta Q|.
template <typename TableFor>
double replay_step(TableFor&& table_for, const ReplayBuffer& buffer, const LearningParams& params, Rng& rng) {
  double max_delta = 0.0;
  for (std::size_t i : buffer.sample(params.replay_batch, rng)) {
    const auto& item = buffer[i];
    max_delta = std::max(max_delta, q_update(table_for(item.owner), item.exp, params));
  }
  return max_delta;
}

/// Single-table replay: every sampled experience updates `q`.
double replay_step(QTable& q, const ReplayBuffer& buffer, const LearningParams& params, Rng& rng);

double decay_epsilon(const LearningParams& params, int t);

/// Scores a complete hierarchy against the five round criteria using the
/// energies in `nodes` (the start-of-round snapshot).
RewardBreakdown compute_round_reward(const ClusterHierarchy& hierarchy, std::span<const SensorNode> nodes,
                                     bool forwarding_ok);

/// Reward credited to one decision: the round reward with the CH criterion
/// judged on the decider's own cluster at `stage` only.
RewardBreakdown decision_reward(const RewardBreakdown& round, const ClusterHierarchy& hierarchy,
                                std::span<const SensorNode> nodes, int stage, NodeId agent);

/// Every head holds the maximum energy of its cluster.
bool all_heads_energy_max(const ClusterHierarchy& hierarchy, std::span<const SensorNode> nodes);

/// Drops entries with fewer than prune_min_visits visits every
/// prune_window_rounds rounds (t > 0). Returns the number removed.
std::size_t prune(QTable& q, const LearningParams& params, int t);

}  // namespace wsn
