#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "tel/distributions.hpp"
#include "tel/spanning.hpp"

using namespace tel;
using tel::testing::graph_of;

namespace {

mpq_class exact_tau_or_zero(const WeightedMultigraph& g) {
  try {
    TauOptions o;
    o.exact = true;
    return *tau(g, o).exact;
  } catch (const DisconnectedGraph&) {
    return 0;
  }
}

WeightedMultigraph delete_edge(const WeightedMultigraph& g, std::size_t e) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < g.edge_count(); ++i)
    if (i != e) edges.push_back(g.edge(i));
  return build_graph(g.vertex_count(), edges);
}

// Merge the endpoints of edge e (keeping u); the remaining u–v edges become loops.
WeightedMultigraph contract_edge(const WeightedMultigraph& g, std::size_t e) {
  const VertexId u = g.edge(e).u, v = g.edge(e).v;
  auto relabel = [&](VertexId x) {
    if (x == v) x = u;
    return x > v ? x - 1 : x;
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < g.edge_count(); ++i) {
    if (i == e) continue;
    edges.push_back({relabel(g.edge(i).u), relabel(g.edge(i).v), g.edge(i).weight});
  }
  return build_graph(g.vertex_count() - 1, edges);
}

}  // namespace

TEST(Spanning, MatchesBruteForceOnRandomMultigraphs) {
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<int> nv(1, 7);
  for (int t = 0; t < 100; ++t) {
    const int n = nv(rng);
    std::uniform_int_distribution<int> ne(n - 1, 12);
    const auto g = tel::testing::random_multigraph(rng, n, ne(rng));
    TauOptions o;
    o.exact = true;
    const TreeCount c = tau(g, o);
    EXPECT_EQ(*c.exact, tau_bruteforce(g)) << "trial " << t;
    EXPECT_NEAR(c.log_value, std::log(c.exact->get_d()), 1e-12);
    EXPECT_NEAR(tau(g).log_value, c.log_value, 1e-10);
  }
}

TEST(Spanning, DeletionContraction) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 40; ++t) {
    const auto g = tel::testing::random_multigraph(rng, 6, 11);
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      if (g.edge(e).is_loop()) {
        EXPECT_EQ(exact_tau_or_zero(g), exact_tau_or_zero(delete_edge(g, e)));
        continue;
      }
      const mpq_class w(g.edge(e).weight);
      EXPECT_EQ(exact_tau_or_zero(g), exact_tau_or_zero(delete_edge(g, e)) + w * exact_tau_or_zero(contract_edge(g, e)));
    }
  }
}

TEST(Spanning, CayleyAndCycles) {
  for (int n = 2; n <= 9; ++n) {
    TauOptions o;
    o.exact = true;
    mpz_class cayley;
    mpz_ui_pow_ui(cayley.get_mpz_t(), n, n - 2);
    EXPECT_EQ(*tau(families::complete(n), o).exact, mpq_class(cayley));
    if (n >= 3) {
      EXPECT_EQ(*tau(families::cycle(n), o).exact, n);
    }
  }
  // 4×4 torus has 42467328 spanning trees
  TauOptions o;
  o.exact = true;
  EXPECT_EQ(*tau(families::torus(4), o).exact, 42467328);
}

TEST(Spanning, CofactorChoiceDoesNotMatter) {
  std::mt19937_64 rng(8);
  const auto g = tel::testing::random_multigraph(rng, 7, 12);
  TauOptions o;
  o.exact = true;
  const mpq_class first = *tau(g, o).exact;
  for (VertexId v = 1; v < 7; ++v) {
    o.removed_vertex = v;
    EXPECT_EQ(*tau(g, o).exact, first);
  }
}

TEST(Spanning, FractionalWeightsStayExact) {
  // triangle with weights 1/2, 1/4, 1/8: τ = 1/8 + 1/32 + 1/16
  const auto g = graph_of(3, {{0, 1, 0.5}, {1, 2, 0.25}, {2, 0, 0.125}});
  TauOptions o;
  o.exact = true;
  EXPECT_EQ(*tau(g, o).exact, mpq_class(7, 32));
  EXPECT_EQ(tau_bruteforce(g), mpq_class(7, 32));
}

TEST(Spanning, LoopsNeverContribute) {
  const auto with_loop = graph_of(2, {{0, 1, 3.0}, {1, 1, 5.0}});
  EXPECT_EQ(tau_bruteforce(with_loop), 3);
  TauOptions o;
  o.exact = true;
  EXPECT_EQ(*tau(with_loop, o).exact, 3);
}

TEST(Spanning, Errors) {
  EXPECT_THROW(tau(graph_of(3, {{0, 1, 1.0}})), DisconnectedGraph);
  EXPECT_EQ(tau_bruteforce(graph_of(3, {{0, 1, 1.0}})), 0);
  std::vector<Edge> many(25, Edge{0, 1, 1.0});
  EXPECT_THROW(tau_bruteforce(build_graph(2, many)), std::invalid_argument);
  TauOptions o;
  o.removed_vertex = 5;
  EXPECT_THROW(tau(graph_of(2, {{0, 1, 1.0}}), o), GraphError);
}
