#pragma once

#include "wsn/clustering.hpp"
#include "wsn/net_model.hpp"

#include <span>
#include <vector>

namespace wsn {

/// Weights of U = alpha*E - beta*d - gamma*N. Distinct from the learning-rate
/// and discount symbols of the Q-learning side.
struct UtilityWeights {
  double alpha = 1.0;  // residual energy
  double beta = 0.2;   // mean neighbour distance
  double gamma = 0.1;  // prospective cluster load

  void validate() const;
  /// Comparison slack proportional to the weight scale, so argmax decisions
  /// are unchanged when all weights are multiplied by the same constant.
  double tolerance() const { return 1e-12 * (alpha + beta + gamma); }
};

struct GameParams {
  int max_iters = 50;  // best-response passes before giving up
  int load_cap = 10;   // prospective load normalisation

  void validate() const;
};

/// A node's choice: lead a cluster, or join the cluster of `target`.
struct GtChoice {
  bool become_head = true;
  NodeId target = -1;

  static GtChoice head() { return {true, -1}; }
  static GtChoice join(NodeId t) { return {false, t}; }
  bool operator==(const GtChoice&) const = default;
};

struct StrategyProfile {
  std::vector<NodeId> players;     // ascending ids
  std::vector<GtChoice> choices;   // indexed by node id; entries for non-players are unused
  bool converged = false;
  int passes = 0;

  std::vector<NodeId> heads() const;
  /// One cluster per head (head set), members = head + its joiners.
  std::vector<Cluster> clusters() const;
};

/// Normalised per-node terms of the utility, computed once per snapshot.
struct UtilityFeatures {
  Eigen::VectorXd energy;         // energy / initial_energy, in [0, 1]
  Eigen::VectorXd mean_distance;  // mean distance to alive in-range neighbours / range, 0 if none
  int load_cap = 10;              // load is normalised by this and clamped to [0, 1]
};

UtilityFeatures utility_features(std::span<const SensorNode> nodes, const Topology& topology,
                                 double initial_energy, int load_cap);

/// U for node `i` leading a cluster of `load` prospective joiners.
double utility(NodeId i, int load, const UtilityFeatures& f, const UtilityWeights& w);

/// Payoff `i` gets from `choice` when the other players' choices are fixed
/// at `choices`. Joining j yields j's utility with i counted in j's load.
double choice_payoff(NodeId i, const GtChoice& choice, std::span<const GtChoice> choices,
                     std::span<const NodeId> players, const UtilityFeatures& f, const UtilityWeights& w);

/// Legal choices for `i` under `choices`: becoming a head, or joining any
/// in-range player currently heading.
std::vector<GtChoice> legal_choices(NodeId i, std::span<const GtChoice> choices, std::span<const NodeId> players,
                                    const Topology& topology);

/// Sequential best response in ascending id order until a full pass changes
/// nothing or `max_iters` passes elapse. Starts from everyone heading.
/// Without convergence, heads fall back to neighbourhood utility argmaxes
/// and every other node takes its best reply to them.
StrategyProfile best_response_dynamics(std::span<const NodeId> players, std::span<const SensorNode> nodes,
                                       const Topology& topology, const UtilityWeights& weights,
                                       const UtilityFeatures& features, int max_iters);

/// Convenience overload over all alive nodes.
StrategyProfile best_response_dynamics(std::span<const SensorNode> nodes, const Topology& topology,
                                       const UtilityWeights& weights, double initial_energy, int load_cap,
                                       int max_iters);

/// Member maximising U with load = |cluster| - 1; lowest id on ties.
NodeId select_head_by_utility(const Cluster& cluster, const UtilityFeatures& f, const UtilityWeights& w);

}  // namespace wsn
