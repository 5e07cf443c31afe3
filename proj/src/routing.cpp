#include "qnetsim/routing.hpp"

#include <algorithm>
#include <limits>

#include "qnetsim/kernel.hpp"

namespace qnet {

namespace {

// Lexicographic comparison of two node paths by name sequence.
bool lex_less(const std::vector<NodeIndex>& a, const std::vector<NodeIndex>& b,
              const std::vector<std::string>& names) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (names[a[i]] != names[b[i]]) return names[a[i]] < names[b[i]];
  }
  return a.size() < b.size();
}

}  // namespace

ForwardingTable::ForwardingTable(const std::vector<std::string>& names,
                                 const std::vector<LinkSpec>& links)
    : n_(names.size()),
      next_(n_ * n_, kNoNode),
      dist_(n_ * n_, -1.0) {
  std::vector<std::vector<std::pair<NodeIndex, double>>> adj(n_);
  for (const auto& l : links) {
    if (l.a >= n_ || l.b >= n_)
      throw SimulationError("forwarding: link endpoint out of range");
    if (l.length_km <= 0.0)
      throw SimulationError("forwarding: link length must be positive");
    adj[l.a].emplace_back(l.b, l.length_km);
    adj[l.b].emplace_back(l.a, l.length_km);
  }

  // Dijkstra from each source, settling the node with the smallest
  // (distance, lexicographic path) among the frontier. Graphs here are tiny
  // (tens of routers), so the O(n^2) scan per settle is fine.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (NodeIndex src = 0; src < n_; ++src) {
    std::vector<double> d(n_, kInf);
    std::vector<std::vector<NodeIndex>> path(n_);
    std::vector<bool> settled(n_, false);
    d[src] = 0.0;
    path[src] = {src};
    for (std::size_t round = 0; round < n_; ++round) {
      NodeIndex u = kNoNode;
      for (NodeIndex v = 0; v < n_; ++v) {
        if (settled[v] || d[v] == kInf) continue;
        if (u == kNoNode || d[v] < d[u] ||
            (d[v] == d[u] && lex_less(path[v], path[u], names)))
          u = v;
      }
      if (u == kNoNode) break;
      settled[u] = true;
      for (const auto& [v, w] : adj[u]) {
        if (settled[v]) continue;
        const double nd = d[u] + w;
        std::vector<NodeIndex> np = path[u];
        np.push_back(v);
        if (nd < d[v] || (nd == d[v] && lex_less(np, path[v], names))) {
          d[v] = nd;
          path[v] = std::move(np);
        }
      }
    }
    for (NodeIndex dst = 0; dst < n_; ++dst) {
      if (dst == src || d[dst] == kInf) continue;
      dist_[src * n_ + dst] = d[dst];
      next_[src * n_ + dst] = path[dst][1];
    }
  }
}

NodeIndex ForwardingTable::next_hop(NodeIndex src, NodeIndex dst) const {
  if (src >= n_ || dst >= n_) return kNoNode;
  return next_[src * n_ + dst];
}

std::vector<NodeIndex> ForwardingTable::route(NodeIndex src, NodeIndex dst) const {
  std::vector<NodeIndex> out;
  if (src >= n_ || dst >= n_) return out;
  if (src == dst) return {src};
  NodeIndex cur = src;
  out.push_back(cur);
  while (cur != dst) {
    const NodeIndex nh = next_hop(cur, dst);
    if (nh == kNoNode) return {};
    out.push_back(nh);
    cur = nh;
    if (out.size() > n_) throw SimulationError("forwarding: next-hop cycle");
  }
  return out;
}

double ForwardingTable::distance_km(NodeIndex src, NodeIndex dst) const {
  if (src >= n_ || dst >= n_) return -1.0;
  if (src == dst) return 0.0;
  return dist_[src * n_ + dst];
}

namespace {
void split_segment(const std::vector<NodeIndex>& path, std::size_t i,
                   std::size_t j, int level, std::vector<SwapStep>& out) {
  if (j - i < 2) return;
  const std::size_t mid = (i + j) / 2;
  out.push_back(SwapStep{path[mid], path[i], path[j], level});
  split_segment(path, i, mid, level + 1, out);
  split_segment(path, mid, j, level + 1, out);
}
}  // namespace

std::vector<SwapStep> swap_ordering(const std::vector<NodeIndex>& path) {
  std::vector<SwapStep> out;
  if (path.size() >= 3) split_segment(path, 0, path.size() - 1, 0, out);
  return out;
}

}  // namespace qnet
