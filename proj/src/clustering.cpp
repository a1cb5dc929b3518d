#include "wsn/clustering.hpp"

#include "wsn/errors.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>
#include <unordered_set>

namespace wsn {

bool Cluster::contains(NodeId n) const { return std::binary_search(members.begin(), members.end(), n); }

std::vector<NodeId> ClusterStage::participants() const {
  std::vector<NodeId> out;
  for (const auto& c : clusters) out.insert(out.end(), c.members.begin(), c.members.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodeId> ClusterStage::heads() const {
  std::vector<NodeId> out;
  for (const auto& c : clusters)
    if (c.head) out.push_back(*c.head);
  std::sort(out.begin(), out.end());
  return out;
}

int ClusteringParams::target_size(int stage) const {
  if (stage_target_sizes.empty()) return 2;
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(stage), stage_target_sizes.size() - 1);
  return stage_target_sizes[i];
}

void ClusteringParams::validate() const {
  for (int s : stage_target_sizes)
    if (s < 2) throw ConfigError("clustering.stage_target_sizes", "every target size must be >= 2");
}

namespace {

using Assignment = std::vector<int>;  // participant index -> cluster index

// Greedy capacity-limited nearest-centre assignment. Pairs are taken in
// (distance, point, centre) order so the result is deterministic.
Assignment balanced_assign(const Eigen::Matrix2Xd& pts, const Eigen::Matrix2Xd& centres, int cap,
                           const std::vector<int>& pinned) {
  const int n = static_cast<int>(pts.cols());
  const int k = static_cast<int>(centres.cols());
  Assignment assign(n, -1);
  std::vector<int> load(k, 0);
  for (int c = 0; c < static_cast<int>(pinned.size()); ++c) {
    assign[pinned[c]] = c;
    ++load[c];
  }
  // Lazy merge of each point's centre list; equivalent to sorting every
  // (distance, point, centre) triple and scanning it once.
  using Pair = std::tuple<double, int, int>;
  std::vector<std::vector<Pair>> options(n);
  std::priority_queue<Pair, std::vector<Pair>, std::greater<>> heap;
  std::vector<int> cursor(n, 0);
  for (int p = 0; p < n; ++p) {
    if (assign[p] >= 0) continue;
    auto& opts = options[p];
    opts.reserve(k);
    for (int c = 0; c < k; ++c) opts.emplace_back((pts.col(p) - centres.col(c)).squaredNorm(), p, c);
    std::sort(opts.begin(), opts.end());
    heap.push(opts.front());
  }
  while (!heap.empty()) {
    const auto [d, p, c] = heap.top();
    heap.pop();
    if (load[c] < cap) {
      assign[p] = c;
      ++load[c];
    } else if (++cursor[p] < k) {
      heap.push(options[p][cursor[p]]);
    }
  }
  return assign;
}

}  // namespace

std::vector<Cluster> form_clusters(std::span<const NodeId> participants, const Topology& topology,
                                   int target_size, Rng& rng) {
  std::vector<NodeId> ids(participants.begin(), participants.end());
  std::sort(ids.begin(), ids.end());
  const int n = static_cast<int>(ids.size());
  if (n == 0) return {};
  target_size = std::max(1, target_size);
  const int k = (n + target_size - 1) / target_size;
  if (k <= 1) return {Cluster{0, ids, std::nullopt}};
  const int cap = (n + k - 1) / k;

  Eigen::Matrix2Xd pts(2, n);
  for (int i = 0; i < n; ++i) pts.col(i) = topology.positions.col(ids[i]);

  // Farthest-point seeding.
  std::vector<int> seeds{static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n)))};
  Eigen::VectorXd nearest = (pts.colwise() - pts.col(seeds[0])).colwise().norm().transpose();
  while (static_cast<int>(seeds.size()) < k) {
    Eigen::Index far = 0;
    nearest.maxCoeff(&far);
    seeds.push_back(static_cast<int>(far));
    nearest = nearest.cwiseMin((pts.colwise() - pts.col(far)).colwise().norm().transpose());
  }

  Eigen::Matrix2Xd centres(2, k);
  for (int c = 0; c < k; ++c) centres.col(c) = pts.col(seeds[c]);
  Assignment assign = balanced_assign(pts, centres, cap, seeds);
  Assignment previous;

  for (int iter = 0; iter < 25; ++iter) {
    Eigen::Matrix2Xd sums = Eigen::Matrix2Xd::Zero(2, k);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (int p = 0; p < n; ++p) {
      sums.col(assign[p]) += pts.col(p);
      counts(assign[p]) += 1.0;
    }
    for (int c = 0; c < k; ++c) centres.col(c) = sums.col(c) / counts(c);
    Assignment next = balanced_assign(pts, centres, cap, {});
    std::vector<int> load(k, 0);
    for (int c : next) ++load[c];
    if (std::find(load.begin(), load.end(), 0) != load.end()) break;
    if (next == assign || next == previous) break;  // fixed point or 2-cycle
    previous = std::move(assign);
    assign = std::move(next);
  }

  std::vector<Cluster> clusters(k);
  for (int p = 0; p < n; ++p) clusters[assign[p]].members.push_back(ids[p]);
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.members.front() < b.members.front(); });
  for (int c = 0; c < k; ++c) clusters[c].id = c;
  return clusters;
}

NodeId select_head_by_energy(const Cluster& cluster, std::span<const SensorNode> nodes) {
  NodeId best = cluster.members.front();
  for (NodeId m : cluster.members) {
    if (nodes[m].energy > nodes[best].energy || (nodes[m].energy == nodes[best].energy && m < best)) best = m;
  }
  return best;
}

ClusterHierarchy build_hierarchy(std::span<const SensorNode> nodes, const Topology& topology,
                                 const HeadSelector& select_head, int stage_count,
                                 const ClusteringParams& params, Rng& rng,
                                 std::optional<std::vector<Cluster>> first_stage) {
  std::vector<NodeId> participants = alive_ids(nodes);
  if (participants.empty()) throw NoAliveNodes();

  ClusterHierarchy h;
  for (int stage = 0;; ++stage) {
    const bool last = stage >= stage_count - 1 || participants.size() == 1;
    ClusterStage current;
    if (stage == 0 && first_stage && !last) {
      current.clusters = std::move(*first_stage);
    } else if (last) {
      current.clusters = {Cluster{0, participants, std::nullopt}};
    } else {
      current.clusters = form_clusters(participants, topology, params.target_size(stage), rng);
    }
    for (auto& c : current.clusters) {
      if (!c.head) c.head = select_head(c, stage);
    }
    participants = current.heads();
    h.stages.push_back(std::move(current));
    if (h.stages.back().clusters.size() == 1) {
      h.final_transmitter = h.stages.back().clusters.front().head;
      break;
    }
  }
  return h;
}

bool stages_disjoint(const ClusterHierarchy& h) {
  for (const auto& stage : h.stages) {
    std::unordered_set<NodeId> seen;
    for (const auto& c : stage.clusters)
      for (NodeId m : c.members)
        if (!seen.insert(m).second) return false;
  }
  return true;
}

bool hierarchy_pure(const ClusterHierarchy& h) {
  for (std::size_t k = 0; k + 1 < h.stages.size(); ++k) {
    if (h.stages[k + 1].participants() != h.stages[k].heads()) return false;
  }
  return true;
}

}  // namespace wsn
