#include "wsn/net_model.hpp"

#include "wsn/errors.hpp"
#include "wsn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wsn {

void NetworkConfig::validate() const {
  if (!(area_side > 0.0)) throw ConfigError("network.area_side", "must be > 0");
  if (node_count < 1) throw ConfigError("network.node_count", "must be >= 1");
  if (packet_size_bits < 1) throw ConfigError("network.packet_size_bits", "must be >= 1");
  if (!(comm_range_fraction > 0.0 && comm_range_fraction <= 1.0))
    throw ConfigError("network.comm_range_fraction", "must be in (0, 1]");
  if (!(initial_energy > 0.0)) throw ConfigError("network.initial_energy", "must be > 0");
  if (round_count < 1) throw ConfigError("network.round_count", "must be >= 1");
  if (stage_count < 1) throw ConfigError("network.stage_count", "must be >= 1");
}

void EnergyModel::validate() const {
  if (e_elec < 0.0) throw ConfigError("energy.e_elec", "must be >= 0");
  if (e_amp < 0.0) throw ConfigError("energy.e_amp", "must be >= 0");
  if (e_idle < 0.0) throw ConfigError("energy.e_idle", "must be >= 0");
  if (e_agg < 0.0) throw ConfigError("energy.e_agg", "must be >= 0");
}

Topology build_topology(const Eigen::Matrix2Xd& positions, double range) {
  Topology topo;
  topo.positions = positions;
  topo.distances = pairwise_distances(positions);
  topo.range = range;
  const int n = static_cast<int>(positions.cols());
  topo.adjacency.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && topo.distances(i, j) <= range) topo.adjacency[i].push_back(j);
    }
  }
  return topo;
}

Network make_network(const Eigen::Matrix2Xd& positions, double range, double initial_energy) {
  Network net;
  net.topology = build_topology(positions, range);
  net.nodes.resize(positions.cols());
  for (int i = 0; i < static_cast<int>(positions.cols()); ++i) {
    net.nodes[i] = SensorNode{i, positions.col(i), initial_energy, range, initial_energy > 0.0};
  }
  return net;
}

Network generate_network(const NetworkConfig& config) {
  config.validate();
  Rng rng = derive_stream(config.rng_seed, {0x6e6f646573ULL});
  Eigen::Matrix2Xd positions(2, config.node_count);
  for (int i = 0; i < config.node_count; ++i) {
    positions(0, i) = uniform01(rng) * config.area_side;
    positions(1, i) = uniform01(rng) * config.area_side;
  }
  return make_network(positions, config.range(), config.initial_energy);
}

SensorNode drain(SensorNode node, double amount) {
  node.energy = std::max(0.0, node.energy - amount);
  node.alive = node.alive && node.energy > 0.0;
  return node;
}

Eigen::VectorXd energies(std::span<const SensorNode> nodes) {
  Eigen::VectorXd e(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) e(static_cast<Eigen::Index>(i)) = nodes[i].energy;
  return e;
}

double total_energy(std::span<const SensorNode> nodes) {
  return std::accumulate(nodes.begin(), nodes.end(), 0.0,
                         [](double acc, const SensorNode& n) { return acc + n.energy; });
}

std::vector<NodeId> alive_ids(std::span<const SensorNode> nodes) {
  std::vector<NodeId> ids;
  for (const auto& n : nodes)
    if (n.alive) ids.push_back(n.id);
  return ids;
}

int alive_count(std::span<const SensorNode> nodes) {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const SensorNode& n) { return n.alive; }));
}

int alive_neighbor_count(NodeId id, std::span<const SensorNode> nodes, const Topology& topology) {
  const auto& adj = topology.adjacency[id];
  return static_cast<int>(std::count_if(adj.begin(), adj.end(), [&](NodeId j) { return nodes[j].alive; }));
}

}  // namespace wsn
