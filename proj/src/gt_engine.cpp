#include "wsn/gt_engine.hpp"

#include "wsn/errors.hpp"

#include <algorithm>
#include <cmath>

namespace wsn {

void UtilityWeights::validate() const {
  if (alpha < 0.0) throw ConfigError("weights.alpha", "must be >= 0");
  if (beta < 0.0) throw ConfigError("weights.beta", "must be >= 0");
  if (gamma < 0.0) throw ConfigError("weights.gamma", "must be >= 0");
  if (alpha + beta + gamma <= 0.0) throw ConfigError("weights", "at least one weight must be positive");
}

void GameParams::validate() const {
  if (max_iters < 1) throw ConfigError("game.max_iters", "must be >= 1");
  if (load_cap < 0) throw ConfigError("game.load_cap", "must be >= 0");
}

std::vector<NodeId> StrategyProfile::heads() const {
  std::vector<NodeId> out;
  for (NodeId p : players)
    if (choices[p].become_head) out.push_back(p);
  return out;
}

std::vector<Cluster> StrategyProfile::clusters() const {
  std::vector<Cluster> out;
  std::vector<int> index_of(choices.size(), -1);
  for (NodeId h : heads()) {
    index_of[h] = static_cast<int>(out.size());
    out.push_back(Cluster{static_cast<int>(out.size()), {h}, h});
  }
  for (NodeId p : players) {
    if (!choices[p].become_head) out[index_of[choices[p].target]].members.push_back(p);
  }
  for (auto& c : out) std::sort(c.members.begin(), c.members.end());
  return out;
}

UtilityFeatures utility_features(std::span<const SensorNode> nodes, const Topology& topology,
                                 double initial_energy, int load_cap) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  UtilityFeatures f;
  f.energy = Eigen::VectorXd::Zero(n);
  f.mean_distance = Eigen::VectorXd::Zero(n);
  f.load_cap = load_cap;
  for (const auto& node : nodes) {
    if (!node.alive) continue;
    f.energy(node.id) = std::clamp(node.energy / initial_energy, 0.0, 1.0);
    double sum = 0.0;
    int count = 0;
    for (NodeId j : topology.adjacency[node.id]) {
      if (!nodes[j].alive) continue;
      sum += topology.distance(node.id, j);
      ++count;
    }
    if (count > 0 && topology.range > 0.0) f.mean_distance(node.id) = std::min(1.0, sum / count / topology.range);
  }
  return f;
}

double utility(NodeId i, int load, const UtilityFeatures& f, const UtilityWeights& w) {
  const double n = f.load_cap > 0 ? std::clamp(static_cast<double>(load) / f.load_cap, 0.0, 1.0) : 0.0;
  return w.alpha * f.energy(i) - w.beta * f.mean_distance(i) - w.gamma * n;
}

namespace {

int load_of(NodeId j, std::span<const GtChoice> choices, std::span<const NodeId> players) {
  int load = 0;
  for (NodeId p : players)
    if (p != j && !choices[p].become_head && choices[p].target == j) ++load;
  return load;
}

}  // namespace

double choice_payoff(NodeId i, const GtChoice& choice, std::span<const GtChoice> choices,
                     std::span<const NodeId> players, const UtilityFeatures& f, const UtilityWeights& w) {
  if (choice.become_head) return utility(i, load_of(i, choices, players), f, w);
  const NodeId j = choice.target;
  const bool already = !choices[i].become_head && choices[i].target == j;
  return utility(j, load_of(j, choices, players) + (already ? 0 : 1), f, w);
}

std::vector<GtChoice> legal_choices(NodeId i, std::span<const GtChoice> choices, std::span<const NodeId> players,
                                    const Topology& topology) {
  std::vector<GtChoice> out{GtChoice::head()};
  for (NodeId j : topology.adjacency[i]) {
    if (std::binary_search(players.begin(), players.end(), j) && choices[j].become_head)
      out.push_back(GtChoice::join(j));
  }
  return out;
}

StrategyProfile best_response_dynamics(std::span<const NodeId> players, std::span<const SensorNode> nodes,
                                       const Topology& topology, const UtilityWeights& weights,
                                       const UtilityFeatures& features, int max_iters) {
  StrategyProfile prof;
  prof.players.assign(players.begin(), players.end());
  std::sort(prof.players.begin(), prof.players.end());
  const std::size_t n = nodes.size();
  prof.choices.assign(n, GtChoice::head());
  std::vector<char> is_player(n, 0);
  for (NodeId p : prof.players) is_player[p] = 1;
  std::vector<int> load(n, 0);
  const double tol = weights.tolerance();

  auto payoff = [&](NodeId i, const GtChoice& c) {
    if (c.become_head) return utility(i, load[i], features, weights);
    const bool already = !prof.choices[i].become_head && prof.choices[i].target == c.target;
    return utility(c.target, load[c.target] + (already ? 0 : 1), features, weights);
  };
  auto is_valid = [&](NodeId i, const GtChoice& c) {
    if (c.become_head) return true;
    return c.target >= 0 && is_player[c.target] && prof.choices[c.target].become_head &&
           topology.distance(i, c.target) <= topology.range && c.target != i;
  };
  auto best_option = [&](NodeId i) {
    GtChoice best = GtChoice::head();
    double best_u = payoff(i, best);
    for (NodeId j : topology.adjacency[i]) {
      if (!is_player[j] || !prof.choices[j].become_head) continue;
      const GtChoice c = GtChoice::join(j);
      const double u = payoff(i, c);
      if (u > best_u + tol) {
        best_u = u;
        best = c;
      }
    }
    return std::pair{best, best_u};
  };
  auto set_choice = [&](NodeId i, const GtChoice& c) {
    const GtChoice old = prof.choices[i];
    if (!old.become_head) --load[old.target];
    if (!c.become_head) ++load[c.target];
    prof.choices[i] = c;
  };

  for (int pass = 1; pass <= std::max(1, max_iters); ++pass) {
    prof.passes = pass;
    bool changed = false;
    for (NodeId i : prof.players) {
      const GtChoice current = prof.choices[i];
      const auto [best, best_u] = best_option(i);
      if (best == current) continue;
      if (is_valid(i, current) && !(best_u > payoff(i, current) + tol)) continue;
      set_choice(i, best);
      changed = true;
    }
    if (!changed) {
      prof.converged = true;
      break;
    }
  }

  if (!prof.converged) {
    // Cycling: heads are the utility argmax of their closed neighbourhood
    // (at zero load, lowest id on ties), everyone else joins its best head.
    std::vector<char> lead(n, 0);
    for (NodeId i : prof.players) {
      const double ui = utility(i, 0, features, weights);
      bool top = true;
      for (NodeId j : topology.adjacency[i]) {
        if (!is_player[j]) continue;
        const double uj = utility(j, 0, features, weights);
        if (uj > ui + tol || (std::abs(uj - ui) <= tol && j < i)) top = false;
      }
      lead[i] = top ? 1 : 0;
    }
    std::fill(load.begin(), load.end(), 0);
    for (NodeId i : prof.players) prof.choices[i] = lead[i] ? GtChoice::head() : GtChoice::join(-1);
    for (NodeId i : prof.players) {
      if (lead[i]) continue;
      const GtChoice c = best_option(i).first;
      if (!c.become_head) ++load[c.target];
      prof.choices[i] = c;
    }
  }
  return prof;
}

StrategyProfile best_response_dynamics(std::span<const SensorNode> nodes, const Topology& topology,
                                       const UtilityWeights& weights, double initial_energy, int load_cap,
                                       int max_iters) {
  const auto players = alive_ids(nodes);
  if (players.empty()) throw NoAliveNodes();
  const auto f = utility_features(nodes, topology, initial_energy, load_cap);
  return best_response_dynamics(players, nodes, topology, weights, f, max_iters);
}

NodeId select_head_by_utility(const Cluster& cluster, const UtilityFeatures& f, const UtilityWeights& w) {
  const int load = static_cast<int>(cluster.members.size()) - 1;
  const double tol = w.tolerance();
  NodeId best = cluster.members.front();
  double best_u = utility(best, load, f, w);
  for (NodeId m : cluster.members) {
    const double u = utility(m, load, f, w);
    if (u > best_u + tol) {
      best_u = u;
      best = m;
    }
  }
  return best;
}

}  // namespace wsn
