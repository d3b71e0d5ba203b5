#include "tel/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace tel {

WeightedMultigraph::WeightedMultigraph(int vertex_count, std::vector<Edge> edges)
    : vertex_count_(vertex_count), edges_(std::move(edges)) {
  if (vertex_count_ < 1) throw GraphError("graph needs at least one vertex");
  std::vector<int> count(static_cast<std::size_t>(vertex_count_) + 1, 0);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    if (ed.u < 0 || ed.v < 0 || ed.u >= vertex_count_ || ed.v >= vertex_count_) {
      throw GraphError("edge " + std::to_string(e) + " has an endpoint out of range");
    }
    if (!(ed.weight > 0.0) || !std::isfinite(ed.weight)) {
      throw GraphError("edge " + std::to_string(e) + " has a non-positive or non-finite weight");
    }
    ++count[static_cast<std::size_t>(ed.u) + 1];
    if (!ed.is_loop()) ++count[static_cast<std::size_t>(ed.v) + 1];
  }
  for (std::size_t i = 1; i < count.size(); ++i) count[i] += count[i - 1];
  offsets_ = count;
  incidence_.assign(static_cast<std::size_t>(offsets_.back()), 0);
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    incidence_[static_cast<std::size_t>(fill[static_cast<std::size_t>(ed.u)]++)] = static_cast<int>(e);
    if (!ed.is_loop()) {
      incidence_[static_cast<std::size_t>(fill[static_cast<std::size_t>(ed.v)]++)] = static_cast<int>(e);
    }
  }
}

std::span<const int> WeightedMultigraph::incident(VertexId v) const {
  if (v < 0 || v >= vertex_count_) throw GraphError("vertex id out of range");
  const auto b = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v)]);
  const auto e = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v) + 1]);
  return std::span<const int>(incidence_).subspan(b, e - b);
}

bool operator==(const Edge& a, const Edge& b) {
  return a.u == b.u && a.v == b.v && a.weight == b.weight;
}

bool operator==(const WeightedMultigraph& a, const WeightedMultigraph& b) {
  return a.vertex_count_ == b.vertex_count_ && a.edges_ == b.edges_;
}

WeightedMultigraph build_graph(int vertex_count, std::vector<Edge> edges) {
  return WeightedMultigraph(vertex_count, std::move(edges));
}

RootedGraph::RootedGraph(WeightedMultigraph g, VertexId r) : graph(std::move(g)), root(r) {
  if (root < 0 || root >= graph.vertex_count()) throw GraphError("root id out of range");
}

DegreeReport degrees(const WeightedMultigraph& g) {
  DegreeReport out;
  const auto n = static_cast<std::size_t>(g.vertex_count());
  out.laplacian_diagonal.assign(n, 0.0);
  out.walk_degree.assign(n, 0.0);
  for (const Edge& e : g.edges()) {
    const auto u = static_cast<std::size_t>(e.u);
    const auto v = static_cast<std::size_t>(e.v);
    if (e.is_loop()) {
      out.walk_degree[u] += e.weight;
    } else {
      out.laplacian_diagonal[u] += e.weight;
      out.laplacian_diagonal[v] += e.weight;
      out.walk_degree[u] += e.weight;
      out.walk_degree[v] += e.weight;
    }
  }
  return out;
}

double laplacian_diagonal(const WeightedMultigraph& g, VertexId v) {
  double d = 0.0;
  for (int e : g.incident(v)) {
    const Edge& ed = g.edge(static_cast<std::size_t>(e));
    if (!ed.is_loop()) d += ed.weight;
  }
  return d;
}

double walk_degree(const WeightedMultigraph& g, VertexId v) {
  double d = 0.0;
  for (int e : g.incident(v)) d += g.edge(static_cast<std::size_t>(e)).weight;
  return d;
}

std::vector<int> hop_distances(const WeightedMultigraph& g, VertexId source, int max_radius) {
  std::vector<int> dist(static_cast<std::size_t>(g.vertex_count()), -1);
  std::deque<VertexId> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  while (!queue.empty()) {
    const VertexId x = queue.front();
    queue.pop_front();
    const int dx = dist[static_cast<std::size_t>(x)];
    if (max_radius >= 0 && dx >= max_radius) continue;
    for (int e : g.incident(x)) {
      const VertexId y = g.opposite(e, x);
      if (dist[static_cast<std::size_t>(y)] < 0) {
        dist[static_cast<std::size_t>(y)] = dx + 1;
        queue.push_back(y);
      }
    }
  }
  return dist;
}

bool is_connected(const WeightedMultigraph& g) {
  const auto dist = hop_distances(g, 0);
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

namespace {

// Ball vertices ordered by (distance, original id); returns old->new map (-1 outside).
std::vector<VertexId> ball_order(const RootedGraph& g, int radius, std::vector<int>& dist,
                                 int& count) {
  dist = hop_distances(g.graph, g.root, radius);
  std::vector<VertexId> inside;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (dist[static_cast<std::size_t>(v)] >= 0) inside.push_back(v);
  }
  std::stable_sort(inside.begin(), inside.end(), [&](VertexId a, VertexId b) {
    return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
  });
  std::vector<VertexId> relabel(static_cast<std::size_t>(g.vertex_count()), -1);
  for (std::size_t i = 0; i < inside.size(); ++i) {
    relabel[static_cast<std::size_t>(inside[i])] = static_cast<VertexId>(i);
  }
  count = static_cast<int>(inside.size());
  return relabel;
}

}  // namespace

RootedGraph ball(const RootedGraph& g, int radius) {
  if (radius < 0) throw GraphError("ball radius must be non-negative");
  std::vector<int> dist;
  int count = 0;
  const auto relabel = ball_order(g, radius, dist, count);
  std::vector<Edge> edges;
  for (const Edge& e : g.graph.edges()) {
    const VertexId a = relabel[static_cast<std::size_t>(e.u)];
    const VertexId b = relabel[static_cast<std::size_t>(e.v)];
    if (a >= 0 && b >= 0) edges.push_back({a, b, e.weight});
  }
  return RootedGraph(WeightedMultigraph(count, std::move(edges)), 0);
}

WiredQuotient wired_quotient(const RootedGraph& g, int radius, double s,
                             std::span<const double> vertex_mass) {
  if (radius < 0) throw GraphError("wired_quotient radius must be non-negative");
  if (!(s >= 0.0) || !std::isfinite(s)) throw GraphError("killing conductance s must be finite and >= 0");
  if (!vertex_mass.empty() && vertex_mass.size() != static_cast<std::size_t>(g.vertex_count())) {
    throw GraphError("vertex_mass must have one entry per vertex");
  }
  std::vector<int> dist;
  int count = 0;
  const auto relabel = ball_order(g, radius, dist, count);
  const VertexId z = count;
  std::vector<Edge> edges;
  std::vector<Edge> crossing;
  for (const Edge& e : g.graph.edges()) {
    const VertexId a = relabel[static_cast<std::size_t>(e.u)];
    const VertexId b = relabel[static_cast<std::size_t>(e.v)];
    if (a >= 0 && b >= 0) {
      edges.push_back({a, b, e.weight});
    } else if (a >= 0 || b >= 0) {
      crossing.push_back({a >= 0 ? a : b, z, e.weight});
    }
  }
  if (crossing.empty() && s == 0.0) {
    throw GraphError("ball exhausts the component and s = 0: no boundary to wire");
  }
  edges.insert(edges.end(), crossing.begin(), crossing.end());
  if (s > 0.0) {
    std::vector<double> mass(static_cast<std::size_t>(count), 1.0);
    if (!vertex_mass.empty()) {
      for (VertexId v = 0; v < g.vertex_count(); ++v) {
        const VertexId nv = relabel[static_cast<std::size_t>(v)];
        if (nv >= 0) mass[static_cast<std::size_t>(nv)] = vertex_mass[static_cast<std::size_t>(v)];
      }
    }
    for (VertexId v = 0; v < count; ++v) edges.push_back({v, z, s * mass[static_cast<std::size_t>(v)]});
  }
  return {RootedGraph(WeightedMultigraph(count + 1, std::move(edges)), 0), z};
}

DominationCheck verify_domination(const DominationWitness& w) {
  const auto& small = w.small.graph;
  const auto& large = w.large.graph;
  auto fail = [](std::string msg) { return DominationCheck{false, std::move(msg)}; };
  if (w.vertex_map.size() != static_cast<std::size_t>(small.vertex_count())) {
    return fail("vertex_map size differs from small vertex count");
  }
  if (w.edge_map.size() != small.edge_count()) return fail("edge_map size differs from small edge count");
  std::vector<char> hit_v(static_cast<std::size_t>(large.vertex_count()), 0);
  for (std::size_t v = 0; v < w.vertex_map.size(); ++v) {
    const VertexId img = w.vertex_map[v];
    if (img < 0 || img >= large.vertex_count()) {
      return fail("vertex " + std::to_string(v) + " maps outside the large graph");
    }
    if (hit_v[static_cast<std::size_t>(img)]++) return fail("vertex_map is not injective at vertex " + std::to_string(v));
  }
  if (w.vertex_map[static_cast<std::size_t>(w.small.root)] != w.large.root) return fail("root is not mapped to root");
  std::vector<char> hit_e(large.edge_count(), 0);
  for (std::size_t e = 0; e < w.edge_map.size(); ++e) {
    const int img = w.edge_map[e];
    if (img < 0 || static_cast<std::size_t>(img) >= large.edge_count()) {
      return fail("edge " + std::to_string(e) + " maps outside the large graph");
    }
    if (hit_e[static_cast<std::size_t>(img)]++) return fail("edge_map is not injective at edge " + std::to_string(e));
    const Edge& se = small.edge(e);
    const Edge& le = large.edge(static_cast<std::size_t>(img));
    const VertexId a = w.vertex_map[static_cast<std::size_t>(se.u)];
    const VertexId b = w.vertex_map[static_cast<std::size_t>(se.v)];
    if (!((le.u == a && le.v == b) || (le.u == b && le.v == a))) {
      return fail("edge " + std::to_string(e) + " endpoints are not preserved");
    }
    if (se.weight > le.weight) {
      return fail("edge " + std::to_string(e) + " weight exceeds its image weight");
    }
  }
  return {true, "ok"};
}

DominationWitness identity_witness(const RootedGraph& g) {
  DominationWitness w{g, g, {}, {}};
  w.vertex_map.resize(static_cast<std::size_t>(g.vertex_count()));
  for (VertexId v = 0; v < g.vertex_count(); ++v) w.vertex_map[static_cast<std::size_t>(v)] = v;
  w.edge_map.resize(g.graph.edge_count());
  for (std::size_t e = 0; e < w.edge_map.size(); ++e) w.edge_map[e] = static_cast<int>(e);
  return w;
}

void write_graph(std::ostream& os, const RootedGraph& g) {
  os << "graph " << g.vertex_count() << ' ' << g.graph.edge_count() << " root=" << g.root << '\n';
  const auto old = os.precision(17);
  for (const Edge& e : g.graph.edges()) os << e.u << ' ' << e.v << ' ' << e.weight << '\n';
  os.precision(old);
}

RootedGraph read_graph(std::istream& is) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line()) throw GraphError("graph file: missing header");
  std::istringstream header(line);
  std::string tag, root_field;
  long long n = 0, m = 0;
  if (!(header >> tag >> n >> m >> root_field) || tag != "graph" || root_field.rfind("root=", 0) != 0) {
    throw GraphError("graph file: header must be `graph <n> <m> root=<id>`");
  }
  if (n < 1 || n > std::numeric_limits<int>::max() || m < 0) throw GraphError("graph file: bad counts");
  long long root = 0;
  try {
    root = std::stoll(root_field.substr(5));
  } catch (const std::exception&) {
    throw GraphError("graph file: bad root id");
  }
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (long long i = 0; i < m; ++i) {
    if (!next_line()) throw GraphError("graph file: expected " + std::to_string(m) + " edge lines");
    std::istringstream row(line);
    long long u = 0, v = 0;
    std::string wtext;
    if (!(row >> u >> v >> wtext)) throw GraphError("graph file: malformed edge line " + std::to_string(i));
    double w = 0.0;
    try {
      std::size_t used = 0;
      w = std::stod(wtext, &used);
      if (used != wtext.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw GraphError("graph file: bad weight on edge line " + std::to_string(i));
    }
    if (u < 0 || v < 0 || u >= n || v >= n) throw GraphError("graph file: endpoint out of range on edge line " + std::to_string(i));
    edges.push_back({static_cast<VertexId>(u), static_cast<VertexId>(v), w});
  }
  if (root < 0 || root >= n) throw GraphError("graph file: root out of range");
  return RootedGraph(WeightedMultigraph(static_cast<int>(n), std::move(edges)), static_cast<VertexId>(root));
}

RootedGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open graph file " + path);
  return read_graph(in);
}

}  // namespace tel
