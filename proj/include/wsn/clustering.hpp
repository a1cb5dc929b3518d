#pragma once

#include "wsn/net_model.hpp"
#include "wsn/rng.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace wsn {

struct Cluster {
  int id = 0;
  std::vector<NodeId> members;  // ascending ids
  std::optional<NodeId> head;

  bool contains(NodeId n) const;
};

struct ClusterStage {
  std::vector<Cluster> clusters;

  std::vector<NodeId> participants() const;  // sorted
  std::vector<NodeId> heads() const;         // sorted
};

/// Stage 0 clusters all alive nodes; stage k+1 re-clusters the heads of stage k.
/// The last stage holds a single cluster whose head is the final transmitter.
struct ClusterHierarchy {
  std::vector<ClusterStage> stages;
  std::optional<NodeId> final_transmitter;
};

struct ClusteringParams {
  /// Target cluster size for stages 0 .. n-1; missing entries reuse the last
  /// value. The final stage (index stage_count-1) always forms one cluster.
  std::vector<int> stage_target_sizes{5, 4};

  int target_size(int stage) const;
  void validate() const;
};

/// Picks a head for a cluster at the given stage. Must return a member.
using HeadSelector = std::function<NodeId(const Cluster&, int stage)>;

/// Balanced k-means partition of `participants` into ceil(n / target_size)
/// clusters of at most ceil(n / K) members. Farthest-point seeding from a
/// random first centre.
std::vector<Cluster> form_clusters(std::span<const NodeId> participants, const Topology& topology,
                                   int target_size, Rng& rng);

/// Highest energy member, lowest id on ties.
NodeId select_head_by_energy(const Cluster& cluster, std::span<const SensorNode> nodes);

/// Builds up to `stage_count` stages over the alive nodes. When `first_stage`
/// is given it replaces geometric clustering at stage 0; clusters that carry
/// a head keep it. Throws NoAliveNodes.
ClusterHierarchy build_hierarchy(std::span<const SensorNode> nodes, const Topology& topology,
                                 const HeadSelector& select_head, int stage_count,
                                 const ClusteringParams& params, Rng& rng,
                                 std::optional<std::vector<Cluster>> first_stage = std::nullopt);

// Structural checks shared by rewards and tests.
bool stages_disjoint(const ClusterHierarchy& h);
bool hierarchy_pure(const ClusterHierarchy& h);

}  // namespace wsn
