#pragma once

#include "wsn/strategies.hpp"

#include <initializer_list>
#include <utility>
#include <vector>

namespace fixtures {

inline wsn::Network points(std::initializer_list<std::pair<double, double>> xy, double range, double e0 = 1.0) {
  Eigen::Matrix2Xd pos(2, static_cast<Eigen::Index>(xy.size()));
  Eigen::Index i = 0;
  for (const auto& [x, y] : xy) pos.col(i++) = wsn::Point2(x, y);
  return wsn::make_network(pos, range, e0);
}

inline void set_energies(std::vector<wsn::SensorNode>& nodes, std::initializer_list<double> e) {
  std::size_t i = 0;
  for (double v : e) {
    nodes[i].energy = v;
    nodes[i].alive = v > 0.0;
    ++i;
  }
}

/// Small but complete scenario parameters for fast runs.
inline wsn::SimulationParams small_params(int nodes, std::uint64_t seed, int rounds = 50) {
  wsn::SimulationParams p;
  p.network.node_count = nodes;
  p.network.rng_seed = seed;
  p.network.round_count = rounds;
  return p;
}

/// Writes `q` into every state reachable with the default discretisation.
inline void fill_table(wsn::QTable& table, wsn::RlAction a, double q, int neighbor_cap = 10, int max_stage = 3) {
  for (int e = 0; e < 10; ++e)
    for (int h = 0; h < 2; ++h)
      for (int n = 0; n <= neighbor_cap; ++n)
        for (int r = 0; r < 10; ++r)
          for (int s = 0; s <= max_stage; ++s) table.at({e, h == 1, n, r, s}, a).q = q;
}

}  // namespace fixtures
