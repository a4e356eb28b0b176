#include "leafsev/maxflow.hpp"

#include <algorithm>
#include <stdexcept>

namespace leafsev {

FlowNetwork::FlowNetwork(int interior_nodes) {
  if (interior_nodes < 0) throw std::invalid_argument("FlowNetwork: negative node count");
  first_.assign(static_cast<std::size_t>(interior_nodes) + 2, -1);
  source_ = interior_nodes;
  sink_ = interior_nodes + 1;
}

void FlowNetwork::add_edge(int u, int v, double cap, double rev_cap) {
  if (u < 0 || v < 0 || u >= node_count() || v >= node_count() || u == v) {
    throw std::invalid_argument("FlowNetwork::add_edge: bad endpoints");
  }
  if (cap < 0.0 || rev_cap < 0.0) {
    throw std::invalid_argument("FlowNetwork::add_edge: negative capacity");
  }
  const auto a = static_cast<std::int32_t>(head_.size());
  head_.push_back(v);
  cap_.push_back(cap);
  next_.push_back(first_[u]);
  first_[u] = a;

  head_.push_back(u);
  cap_.push_back(rev_cap);
  next_.push_back(first_[v]);
  first_[v] = a + 1;
}

// Dinic: BFS level graph from the source, then iterative DFS blocking flow
// with a per-node current-arc pointer. Phase count is bounded by the node
// count whatever the capacities are, so the flow is exact on termination.
class MaxFlowSolver {
 public:
  explicit MaxFlowSolver(FlowNetwork net) : g_(std::move(net)) {}

  MinCutResult run() {
    const int n = g_.node_count();
    level_.assign(n, -1);
    cur_.assign(n, -1);
    queue_.reserve(n);
    path_.reserve(64);

    double flow = 0.0;
    while (bfs()) {
      for (int v = 0; v < n; ++v) cur_[v] = g_.first_[v];
      flow += blocking_flow();
    }

    MinCutResult res;
    res.flow = flow;
    res.source_side.assign(n, false);
    // The last BFS failed to reach the sink; its reachable set is a minimum cut.
    for (int v = 0; v < n; ++v) res.source_side[v] = (level_[v] >= 0);
    return res;
  }

 private:
  bool bfs() {
    std::fill(level_.begin(), level_.end(), -1);
    queue_.clear();
    queue_.push_back(g_.source_);
    level_[g_.source_] = 0;
    for (std::size_t qi = 0; qi < queue_.size(); ++qi) {
      const int u = queue_[qi];
      for (std::int32_t a = g_.first_[u]; a != -1; a = g_.next_[a]) {
        const int v = g_.head_[a];
        if (g_.cap_[a] > 0.0 && level_[v] < 0) {
          level_[v] = level_[u] + 1;
          queue_.push_back(v);
        }
      }
    }
    return level_[g_.sink_] >= 0;
  }

  double blocking_flow() {
    double pushed_total = 0.0;
    const int s = g_.source_;
    const int t = g_.sink_;
    while (true) {
      // Advance from the source along admissible arcs, retreating past
      // exhausted nodes, until the sink is reached or the source dries up.
      path_.clear();
      int u = s;
      while (u != t) {
        std::int32_t& a = cur_[u];
        while (a != -1 && !(g_.cap_[a] > 0.0 && level_[g_.head_[a]] == level_[u] + 1)) {
          a = g_.next_[a];
        }
        if (a == -1) {
          if (u == s) return pushed_total;
          level_[u] = -1;  // dead end for this phase
          u = g_.head_[path_.back() ^ 1];
          path_.pop_back();
          continue;
        }
        path_.push_back(a);
        u = g_.head_[a];
      }

      // The bottleneck equals one of the path capacities exactly, so at least
      // one arc saturates to exactly zero per augmentation.
      double bottleneck = g_.cap_[path_[0]];
      for (const std::int32_t a : path_) bottleneck = std::min(bottleneck, g_.cap_[a]);
      for (const std::int32_t a : path_) {
        g_.cap_[a] -= bottleneck;
        g_.cap_[a ^ 1] += bottleneck;
      }
      pushed_total += bottleneck;
    }
  }

  FlowNetwork g_;
  std::vector<int> level_;
  std::vector<std::int32_t> cur_;
  std::vector<int> queue_;
  std::vector<std::int32_t> path_;
};

MinCutResult max_flow_min_cut(FlowNetwork net) { return MaxFlowSolver(std::move(net)).run(); }

}  // namespace leafsev
