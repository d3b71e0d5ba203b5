#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tel {

using VertexId = std::int32_t;

/// Raised for malformed graphs, out-of-range ids and broken preconditions on
/// graph-level operations.
class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Edge {
  VertexId u = 0;
  VertexId v = 0;
  double weight = 1.0;

  [[nodiscard]] bool is_loop() const noexcept { return u == v; }
};

/// Finite multigraph with strictly positive edge weights. Parallel edges and
/// loops are kept exactly as given; nothing is merged. Immutable once built.
class WeightedMultigraph {
 public:
  WeightedMultigraph() : WeightedMultigraph(1, {}) {}
  WeightedMultigraph(int vertex_count, std::vector<Edge> edges);

  [[nodiscard]] int vertex_count() const noexcept { return vertex_count_; }
  [[nodiscard]] std::size_t edge_count() const noexcept { return edges_.size(); }
  [[nodiscard]] std::span<const Edge> edges() const noexcept { return edges_; }
  [[nodiscard]] const Edge& edge(std::size_t e) const { return edges_.at(e); }

  /// Indices of edges incident to `v`. A loop appears once.
  [[nodiscard]] std::span<const int> incident(VertexId v) const;

  /// Endpoint of edge `e` opposite to `v` (v itself for loops).
  [[nodiscard]] VertexId opposite(int e, VertexId v) const {
    const Edge& ed = edges_[static_cast<std::size_t>(e)];
    return ed.u == v ? ed.v : ed.u;
  }

  friend bool operator==(const WeightedMultigraph& a, const WeightedMultigraph& b);

 private:
  int vertex_count_;
  std::vector<Edge> edges_;
  std::vector<int> offsets_;
  std::vector<int> incidence_;
};

bool operator==(const Edge& a, const Edge& b);

WeightedMultigraph build_graph(int vertex_count, std::vector<Edge> edges);

struct RootedGraph {
  WeightedMultigraph graph;
  VertexId root = 0;

  RootedGraph() = default;
  RootedGraph(WeightedMultigraph g, VertexId r);

  [[nodiscard]] int vertex_count() const noexcept { return graph.vertex_count(); }
};

/// Two degree notions: the Laplacian diagonal skips loops; the walk degree
/// counts each loop once, so a loop becomes a self-transition of the walk.
struct DegreeReport {
  std::vector<double> laplacian_diagonal;
  std::vector<double> walk_degree;
};

DegreeReport degrees(const WeightedMultigraph& g);
double laplacian_diagonal(const WeightedMultigraph& g, VertexId v);
double walk_degree(const WeightedMultigraph& g, VertexId v);

/// Hop distances from `source` (edge weights ignored); -1 where unreachable
/// or beyond `max_radius` when that is non-negative.
std::vector<int> hop_distances(const WeightedMultigraph& g, VertexId source, int max_radius = -1);

bool is_connected(const WeightedMultigraph& g);

/// Induced subgraph on vertices within `radius` hops of the root. Vertices are
/// ordered by (distance, original id), so the root is vertex 0; edges keep
/// their original relative order.
RootedGraph ball(const RootedGraph& g, int radius);

/// Ball plus one extra vertex `boundary` standing for everything outside.
struct WiredQuotient {
  RootedGraph network;
  VertexId boundary = 0;
};

/// Collapses everything beyond `radius` into one vertex z and adds an edge of
/// conductance s·mass(x) from every ball vertex x to z. `vertex_mass` lets a
/// symmetry-lumped graph carry orbit sizes; empty means all ones.
WiredQuotient wired_quotient(const RootedGraph& g, int radius, double s,
                             std::span<const double> vertex_mass = {});

/// Embedding of `small` into `large`, root to root, edgewise weight-dominated.
struct DominationWitness {
  RootedGraph small;
  RootedGraph large;
  std::vector<VertexId> vertex_map;
  std::vector<int> edge_map;
};

struct DominationCheck {
  bool holds = false;
  std::string diagnostic;

  explicit operator bool() const noexcept { return holds; }
};

DominationCheck verify_domination(const DominationWitness& w);
DominationWitness identity_witness(const RootedGraph& g);

/// Line-oriented text format:
///   graph <vertex_count> <edge_count> root=<id>
///   u v w        (one line per edge, loops as `u u w`)
/// Weights are written with 17 significant digits so they round-trip exactly.
void write_graph(std::ostream& os, const RootedGraph& g);
RootedGraph read_graph(std::istream& is);
RootedGraph load_graph(const std::string& path);

}  // namespace tel
