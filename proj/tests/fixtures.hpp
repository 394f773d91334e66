#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "walkbench/graph.hpp"
#include "walkbench/walk.hpp"

namespace fixtures {

using walkbench::Edge;
using walkbench::Graph;
using walkbench::NodeId;

// Ten nodes with mixed degrees (1..5), a triangle, a square and a pendant.
inline Graph ten_node_graph() {
  const std::vector<Edge> edges = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {2, 4}, {3, 4}, {3, 5}, {4, 6},
                                   {5, 6}, {5, 7}, {6, 8}, {7, 8}, {8, 9}, {2, 6}};
  return Graph::from_edges(10, edges);
}

// Two triangles {0,1,2} and {3,4,5} joined by the bridge 2-3.
inline Graph two_triangles() {
  const std::vector<Edge> edges = {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}};
  return Graph::from_edges(6, edges);
}

inline std::vector<double> normalized(std::vector<double> w) {
  double z = 0;
  for (double x : w) z += x;
  for (double& x : w) x /= z;
  return w;
}

// Transition law written straight from the kernel definitions, by a linear
// scan of the edge list rather than the library's adjacency.
inline std::vector<double> oracle_law(const Graph& g, const walkbench::WalkConfig& cfg, NodeId u,
                                      int previous, const std::vector<std::uint32_t>& visits) {
  using walkbench::WalkKind;
  const auto edges = g.edges();
  auto adjacent = [&](NodeId a, NodeId b) {
    return std::find(edges.begin(), edges.end(), Edge{std::min(a, b), std::max(a, b)}) != edges.end();
  };
  auto deg = [&](NodeId a) {
    return static_cast<double>(std::count_if(edges.begin(), edges.end(),
                                             [&](const Edge& e) { return e.first == a || e.second == a; }));
  };
  std::vector<double> w;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (!adjacent(u, v)) continue;
    switch (cfg.kind) {
      case WalkKind::kRandom: w.push_back(1.0); break;
      case WalkKind::kDegree: w.push_back(deg(v)); break;
      case WalkKind::kInverseDegree: w.push_back(1.0 / deg(v)); break;
      case WalkKind::kTrueSelfAvoiding: w.push_back(std::exp(-cfg.lambda * visits[v])); break;
      case WalkKind::kNode2Vec:
        if (previous < 0) w.push_back(1.0);
        else if (static_cast<NodeId>(previous) == v) w.push_back(1.0 / cfg.p);
        else if (adjacent(static_cast<NodeId>(previous), v)) w.push_back(1.0);
        else w.push_back(1.0 / cfg.q);
        break;
    }
  }
  return normalized(w);
}

}  // namespace fixtures
