#pragma once

#include <string>
#include <vector>

#include "qnetsim/ids.hpp"

namespace qnet {

struct LinkSpec {
  NodeIndex a = kNoNode;
  NodeIndex b = kNoNode;
  double length_km = 0.0;
};

// Static next-hop tables over the router graph, shortest path by summed fiber
// length. Among equal-length paths the one whose node-name sequence is
// lexicographically smallest wins, which makes forwarding deterministic and
// consistent hop by hop.
class ForwardingTable {
 public:
  ForwardingTable() = default;
  ForwardingTable(const std::vector<std::string>& names,
                  const std::vector<LinkSpec>& links);

  // Next hop from src toward dst; kNoNode if unreachable or src == dst.
  NodeIndex next_hop(NodeIndex src, NodeIndex dst) const;
  // Full path src..dst inclusive; empty if unreachable.
  std::vector<NodeIndex> route(NodeIndex src, NodeIndex dst) const;
  // Shortest-path fiber distance in km; negative if unreachable.
  double distance_km(NodeIndex src, NodeIndex dst) const;

  std::size_t size() const { return n_; }

 private:
  std::size_t n_ = 0;
  std::vector<NodeIndex> next_;   // n*n, row-major
  std::vector<double> dist_;      // n*n
};

// One swap assignment: `node` fuses its pairs toward `upstream` and
// `downstream`. Produced by recursively splitting the path at its midpoint,
// so end-to-end entanglement forms in ceil(log2(hops)) layers. Level 0 is
// the final (outermost) swap.
struct SwapStep {
  NodeIndex node = kNoNode;
  NodeIndex upstream = kNoNode;
  NodeIndex downstream = kNoNode;
  int level = 0;
};

// Swap assignments for every interior node of `path` (empty for paths with
// fewer than three nodes). Each interior node appears exactly once.
std::vector<SwapStep> swap_ordering(const std::vector<NodeIndex>& path);

}  // namespace qnet
