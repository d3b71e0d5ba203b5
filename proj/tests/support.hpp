#pragma once

#include <random>
#include <vector>

#include "tel/graph.hpp"

namespace tel::testing {

/// Connected multigraph on `vertices` vertices: a random spanning tree, then
/// extra edges (parallels and loops allowed) up to `edges`, integer weights
/// in [1, max_weight].
inline WeightedMultigraph random_multigraph(std::mt19937_64& rng, int vertices, int edges, int max_weight = 5) {
  std::uniform_int_distribution<int> weight(1, max_weight);
  std::vector<Edge> list;
  for (int v = 1; v < vertices; ++v) {
    std::uniform_int_distribution<int> parent(0, v - 1);
    list.push_back({parent(rng), v, double(weight(rng))});
  }
  std::uniform_int_distribution<int> vertex(0, vertices - 1);
  while (static_cast<int>(list.size()) < edges) list.push_back({vertex(rng), vertex(rng), double(weight(rng))});
  std::shuffle(list.begin(), list.end(), rng);
  return build_graph(vertices, list);
}

inline WeightedMultigraph graph_of(int vertices, std::vector<Edge> edges) { return build_graph(vertices, std::move(edges)); }

}  // namespace tel::testing
