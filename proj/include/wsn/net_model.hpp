#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace wsn {

using NodeId = int;
using Point2 = Eigen::Vector2d;

struct NetworkConfig {
  double area_side = 100.0;
  int node_count = 100;
  int packet_size_bits = 4000;
  double comm_range_fraction = 0.5;  // communication range as a fraction of area_side
  double initial_energy = 0.8;
  std::uint64_t rng_seed = 42;
  int round_count = 1000;
  int stage_count = 3;

  double range() const { return comm_range_fraction * area_side; }

  /// Throws ConfigError naming the first violated field.
  void validate() const;
};

/// First-order radio model plus a flat per-round drain.
struct EnergyModel {
  double e_elec = 50e-9;   // per bit, TX or RX electronics
  double e_amp = 100e-12;  // per bit per distance^2, TX amplifier
  double e_idle = 5e-5;    // per alive node per round
  double e_agg = 5e-9;     // per bit aggregated at a cluster head

  void validate() const;
};

struct SensorNode {
  NodeId id = 0;
  Point2 position = Point2::Zero();
  double energy = 0.0;
  double range = 0.0;
  bool alive = false;
};

/// Static geometric connectivity. Adjacency ignores liveness; callers filter
/// dead nodes where it matters.
struct Topology {
  Eigen::Matrix2Xd positions;
  Eigen::MatrixXd distances;
  std::vector<std::vector<NodeId>> adjacency;
  double range = 0.0;

  int size() const { return static_cast<int>(positions.cols()); }
  double distance(NodeId a, NodeId b) const { return distances(a, b); }
};

struct Network {
  std::vector<SensorNode> nodes;
  Topology topology;
};

/// Euclidean distance matrix between the columns of a 2xN point set.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> pairwise_distances(
    const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = points.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    d(j, j) = Scalar(0);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      d(i, j) = (points.col(i) - points.col(j)).norm();
      d(j, i) = d(i, j);
    }
  }
  return d;
}

Topology build_topology(const Eigen::Matrix2Xd& positions, double range);

/// Uniformly scattered nodes over [0, area_side]^2, drawn from config.rng_seed.
Network generate_network(const NetworkConfig& config);

/// Network from explicit coordinates (tests, fixtures).
Network make_network(const Eigen::Matrix2Xd& positions, double range, double initial_energy);

template <typename Scalar>
Scalar tx_cost(long long bits, Scalar distance, const EnergyModel& model) {
  const auto k = static_cast<Scalar>(bits);
  return Scalar(model.e_elec) * k + Scalar(model.e_amp) * k * distance * distance;
}

inline double rx_cost(long long bits, const EnergyModel& model) {
  return model.e_elec * static_cast<double>(bits);
}

inline double aggregation_cost(long long bits, const EnergyModel& model) {
  return model.e_agg * static_cast<double>(bits);
}

/// Removes up to `amount` energy. Energy clamps at zero and a node at zero is
/// permanently dead.
SensorNode drain(SensorNode node, double amount);

Eigen::VectorXd energies(std::span<const SensorNode> nodes);
double total_energy(std::span<const SensorNode> nodes);
std::vector<NodeId> alive_ids(std::span<const SensorNode> nodes);
int alive_count(std::span<const SensorNode> nodes);

/// Alive in-range neighbours of `id`.
int alive_neighbor_count(NodeId id, std::span<const SensorNode> nodes, const Topology& topology);

}  // namespace wsn
