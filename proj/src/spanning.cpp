#include "tel/spanning.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <vector>

#include "tel/linalg.hpp"

namespace tel {

namespace {

bool all_integral(const WeightedMultigraph& g) {
  for (const Edge& e : g.edges()) {
    if (!e.is_loop() && (e.weight != std::floor(e.weight) || e.weight > 9.0e15)) return false;
  }
  return true;
}

}  // namespace

TreeCount tau(const WeightedMultigraph& g, TauOptions options) {
  if (options.removed_vertex < 0 || options.removed_vertex >= g.vertex_count()) {
    throw GraphError("tau: removed vertex out of range");
  }
  if (!is_connected(g)) throw DisconnectedGraph();
  TreeCount out;
  if (g.vertex_count() == 1) {
    out.exact = mpq_class(1);
    out.log_value = 0.0;
    return out;
  }
  const int dim = g.vertex_count() - 1;
  if (options.exact) {
    if (dim > kExactTreeCountLimit) {
      throw std::invalid_argument("tau: exact count limited to reduced dimension " +
                                  std::to_string(kExactTreeCountLimit));
    }
    const auto q = reduced_laplacian_exact(g, options.removed_vertex);
    if (all_integral(g)) {
      DenseMatrixExact<mpz_class> z(dim);
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) z(i, j) = q(i, j).get_num();
      }
      out.exact = mpq_class(det_exact(std::move(z)));
    } else {
      out.exact = det_exact(q);
    }
    out.log_value = log_of(*out.exact);
    return out;
  }
  out.log_value = logdet_spd(laplacian_of(g).without(options.removed_vertex));
  return out;
}

mpq_class tau_bruteforce(const WeightedMultigraph& g) {
  const std::size_t m = g.edge_count();
  if (m > 24) throw std::invalid_argument("tau_bruteforce: more than 24 edges");
  const int n = g.vertex_count();
  if (n == 1) return mpq_class(1);
  const auto edges = g.edges();
  mpq_class total(0);
  std::vector<int> parent(static_cast<std::size_t>(n));
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    if (std::popcount(mask) != n - 1) continue;
    std::iota(parent.begin(), parent.end(), 0);
    bool forest = true;
    mpq_class product(1);
    for (std::size_t e = 0; e < m && forest; ++e) {
      if (!(mask >> e & 1u)) continue;
      const int a = find(edges[e].u);
      const int b = find(edges[e].v);
      if (a == b) {
        forest = false;  // cycle, or a loop
      } else {
        parent[static_cast<std::size_t>(a)] = b;
        product *= mpq_class(edges[e].weight);
      }
    }
    if (forest) total += product;  // n−1 acyclic edges on n vertices span
  }
  return total;
}

}  // namespace tel
