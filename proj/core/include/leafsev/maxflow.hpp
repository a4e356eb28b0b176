#pragma once

#include <cstdint>
#include <vector>

namespace leafsev {

// Capacity large enough to dominate any sum of smoothness terms; edges with
// this weight survive every minimum cut.
inline constexpr double kHardConstraint = 1e9;

// Directed s-t flow network. Nodes are dense ints; source() and sink() are
// created by the constructor. Arcs are stored in pairs so arc i's reverse is
// always i^1.
class FlowNetwork {
 public:
  explicit FlowNetwork(int interior_nodes);

  int source() const { return source_; }
  int sink() const { return sink_; }
  int node_count() const { return static_cast<int>(first_.size()); }

  // Adds capacity cap on u->v and rev_cap on v->u. Repeated calls for the
  // same pair accumulate as parallel arcs.
  void add_edge(int u, int v, double cap, double rev_cap = 0.0);

  void add_source_edge(int v, double cap) { add_edge(source_, v, cap); }
  void add_sink_edge(int u, double cap) { add_edge(u, sink_, cap); }

 private:
  friend class MaxFlowSolver;

  int source_ = 0;
  int sink_ = 0;
  std::vector<std::int32_t> first_;   // per node, head of arc list (-1 = none)
  std::vector<std::int32_t> next_;    // per arc, next arc out of same node
  std::vector<std::int32_t> head_;    // per arc, target node
  std::vector<double> cap_;           // per arc, residual capacity
};

struct MinCutResult {
  double flow = 0.0;
  // source_side[v] is true when node v stays connected to the source in the
  // residual graph. source_side[source()] is always true,
  // source_side[sink()] always false.
  std::vector<bool> source_side;
};

// Consumes the network (capacities become residuals during the solve).
MinCutResult max_flow_min_cut(FlowNetwork net);

}  // namespace leafsev
