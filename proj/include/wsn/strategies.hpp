#pragma once

#include "wsn/clustering.hpp"
#include "wsn/gt_engine.hpp"
#include "wsn/net_model.hpp"
#include "wsn/rl_engine.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace wsn {

enum class StrategyKind { FullRl, FullGt, GtClusterRlHead, RlClusterGtHead, BaselineMultiHop };

inline constexpr std::array<StrategyKind, 5> kAllStrategies{
    StrategyKind::FullRl, StrategyKind::FullGt, StrategyKind::GtClusterRlHead, StrategyKind::RlClusterGtHead,
    StrategyKind::BaselineMultiHop};

/// CLI / file names: full_rl, full_gt, gt_rl, rl_gt, baseline.
std::string_view to_string(StrategyKind k);
std::optional<StrategyKind> parse_strategy(std::string_view name);
bool uses_learning(StrategyKind k);
bool is_clustered(StrategyKind k);

struct RoutingParams {
  std::optional<Point2> sink;       // defaults to the centre of the area
  double processing_per_hop = 1.0;  // delay units added per hop
};

struct SimulationParams {
  NetworkConfig network;
  EnergyModel energy;
  LearningParams learning;
  UtilityWeights weights;
  GameParams game;
  ClusteringParams clustering;
  RoutingParams routing;

  void validate() const;
};

struct World {
  SimulationParams params;
  std::vector<SensorNode> nodes;
  Topology topology;
  Point2 sink = Point2::Zero();

  static World create(const SimulationParams& params);
  /// Wraps an explicit network (fixtures).
  static World from_network(const SimulationParams& params, Network net);

  long long packet_bits() const { return params.network.packet_size_bits; }
  double initial_energy() const { return params.network.initial_energy; }
  double sink_distance(NodeId i) const { return (topology.positions.col(i) - sink).norm(); }
};

/// Per-agent Q-tables, or one table shared by every agent.
class AgentPool {
 public:
  AgentPool(int node_count, bool shared);

  QTable& table(NodeId id) { return shared_ ? tables_.front() : tables_[static_cast<std::size_t>(id)]; }
  const QTable& table(NodeId id) const {
    return shared_ ? tables_.front() : tables_[static_cast<std::size_t>(id)];
  }
  std::size_t max_entries() const;
  std::size_t prune(const LearningParams& params, int t);
  bool shared() const { return shared_; }

 private:
  std::vector<QTable> tables_;
  bool shared_;
};

struct LearningState {
  AgentPool agents;
  ReplayBuffer replay;
  Rng rng;

  LearningState(const LearningParams& params, int node_count, Rng stream);
};

struct LearningTelemetry {
  double max_q_delta = 0.0;
  double epsilon = 0.0;
  int decisions = 0;
  std::size_t max_table_entries = 0;
};

struct RoundOutcome {
  int round = 0;
  std::optional<ClusterHierarchy> hierarchy;  // absent for the baseline
  std::optional<RewardBreakdown> reward;      // absent for the baseline
  std::vector<char> delivered;                // per node id
  std::vector<int> hop_counts;                // per node id, 0 when undelivered
  Eigen::VectorXd energy_spent;               // per node id, actually drained
  std::vector<NodeId> deaths_this_round;
  bool all_delivered = true;   // every node alive at round start reached the sink
  int out_of_range_links = 0;  // single-hop links longer than the radio range (still charged)
  bool heads_energy_max = false;
  LearningTelemetry learning;
};

/// Stream used for geometric clustering in round `t`.
Rng clustering_stream(const World& world, int t);

RoundOutcome run_round_full_rl(World& world, LearningState& learning, int t);
RoundOutcome run_round_full_gt(World& world, int t);
RoundOutcome run_round_gt_rl(World& world, LearningState& learning, int t);
RoundOutcome run_round_rl_gt(World& world, LearningState& learning, int t);
RoundOutcome run_round_baseline(World& world, int t);

/// Mean over delivered packets of hops * (1 + processing_per_hop); 0 if none delivered.
double measure_delay(const RoundOutcome& outcome, double processing_per_hop);

/// One strategy over one network, round by round.
class Simulation {
 public:
  Simulation(const SimulationParams& params, StrategyKind kind);
  Simulation(const SimulationParams& params, StrategyKind kind, Network net);

  /// Runs the next round. Throws NoAliveNodes once the network is dead.
  RoundOutcome step();
  bool finished() const;

  StrategyKind kind() const { return kind_; }
  int round() const { return round_; }
  const World& world() const { return world_; }
  const LearningState* learning() const { return learning_.get(); }

 private:
  StrategyKind kind_;
  World world_;
  std::unique_ptr<LearningState> learning_;
  int round_ = 0;
};

}  // namespace wsn
