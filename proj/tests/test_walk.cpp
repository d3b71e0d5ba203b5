#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>

#include "support.hpp"
#include "tel/distributions.hpp"
#include "tel/entropy.hpp"
#include "tel/walk.hpp"

using namespace tel;
using tel::testing::graph_of;

namespace {

// (P^k)(o,o) from the dense transition matrix; a loop of weight w adds w to
// the diagonal of the weight matrix once.
std::vector<double> dense_returns(const RootedGraph& g, int K) {
  const int n = g.vertex_count();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : g.graph.edges()) {
    w(e.u, e.v) += e.weight;
    if (!e.is_loop()) w(e.v, e.u) += e.weight;
  }
  const Eigen::VectorXd deg = w.rowwise().sum();
  const Eigen::MatrixXd p = deg.cwiseInverse().asDiagonal() * w;
  std::vector<double> out;
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
  row(g.root) = 1.0;
  for (int k = 1; k <= K; ++k) {
    row = row * p;
    out.push_back(row(g.root));
  }
  return out;
}

mpq_class central_binomial_over_4k(int k) {
  mpz_class c;
  mpz_bin_uiui(c.get_mpz_t(), 2 * k, k);
  mpz_class four_k;
  mpz_ui_pow_ui(four_k.get_mpz_t(), 4, k);
  mpq_class q(c, four_k);
  q.canonicalize();
  return q;
}

ReturnSeries synthetic(int K, double gamma) {
  ReturnSeries rs;
  rs.root_walk_degree = 2.0;
  for (int k = 1; k <= K; ++k) rs.probabilities.push_back(std::pow(double(k), -gamma));
  return rs;
}

}  // namespace

TEST(Walk, IntegerLineIsCentralBinomialExactly) {
  const auto z = lattice_generator(Lattice::Z)->sample(0);
  const int K = 40;
  ReturnOptions o;
  o.arithmetic = Arithmetic::exact;
  const ReturnSeries rs = return_probs(walk_network(*z, K), K, o);
  ASSERT_EQ(rs.exact.size(), static_cast<std::size_t>(K));
  for (int k = 1; k <= K; ++k) {
    const mpq_class expected = k % 2 ? mpq_class(0) : central_binomial_over_4k(k / 2);
    EXPECT_EQ(rs.exact[static_cast<std::size_t>(k - 1)], expected) << "k=" << k;
  }
}

TEST(Walk, MatchesDenseTransitionPowers) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto g = tel::testing::random_multigraph(rng, 8, 16);
    const RootedGraph r(g, t % 8);
    const auto expected = dense_returns(r, 30);
    ReturnOptions o;
    o.arithmetic = Arithmetic::floating;
    const ReturnSeries rs = return_probs(r, 30, o);
    for (int k = 1; k <= 30; ++k) EXPECT_NEAR(rs.p(k), expected[static_cast<std::size_t>(k - 1)], 1e-13);
    o.arithmetic = Arithmetic::exact;
    const ReturnSeries ex = return_probs(r, 30, o);
    for (int k = 1; k <= 30; ++k) EXPECT_NEAR(ex.exact[static_cast<std::size_t>(k - 1)].get_d(), rs.p(k), 1e-13);
  }
}

TEST(Walk, LoopIsASelfTransition) {
  // 0 -1- 1 with a loop of weight 1 at 0: p_1 = 1/2, p_2 = 1/4 + 1/2
  const RootedGraph g(graph_of(2, {{0, 1, 1.0}, {0, 0, 1.0}}), 0);
  ReturnOptions o;
  o.arithmetic = Arithmetic::exact;
  const ReturnSeries rs = return_probs(g, 2, o);
  EXPECT_EQ(rs.exact[0], mpq_class(1, 2));
  EXPECT_EQ(rs.exact[1], mpq_class(3, 4));
  EXPECT_DOUBLE_EQ(rs.root_walk_degree, 2.0);
}

TEST(Walk, WiredLumpedBallIsExactUpToK) {
  const int K = 24;
  for (const auto& dist : {lattice_generator(Lattice::Z2), lattice_generator(Lattice::regular_tree, 3),
                           pgw_sampler(1.5, PgwConditioning::survival_attempted, 4, 8)}) {
    for (std::uint64_t i = 0; i < 3; ++i) {
      const auto src = dist->sample(i);
      ReturnOptions o;
      o.arithmetic = Arithmetic::floating;
      const ReturnSeries fast = return_probs(walk_network(*src, K), K, o);
      const ReturnSeries plain = return_probs(src->ball(K / 2 + 2), K, o);
      for (int k = 1; k <= K; ++k) EXPECT_NEAR(fast.p(k), plain.p(k), 1e-13) << "k=" << k;
    }
  }
}

TEST(Walk, RequireExactRefusesLongSeries) {
  const auto z = lattice_generator(Lattice::Z)->sample(0);
  ReturnOptions o;
  o.ball_radius = 3;
  o.require_exact = true;
  EXPECT_THROW(return_probs(z->ball(3), 7, o), std::invalid_argument);
  EXPECT_NO_THROW(return_probs(z->ball(3), 6, o));
  EXPECT_THROW(return_probs(z->ball(3), 0), std::invalid_argument);
}

TEST(Walk, AbelGrid) {
  const auto grid = default_abel_grid();
  ASSERT_EQ(grid.size(), 10u);
  EXPECT_DOUBLE_EQ(grid.front(), 0.875);
  EXPECT_DOUBLE_EQ(grid.back(), 1.0 - 1.0 / 4096.0);
}

TEST(Walk, SeriesTermOnTheThreeRegularTree) {
  const auto t3 = lattice_generator(Lattice::regular_tree, 3)->sample(0);
  const int K = 512;
  const ReturnSeries rs = return_probs(walk_network(*t3, K), K);
  const SeriesEntropyTerm term = series_entropy_term(rs, default_abel_grid());
  ASSERT_FALSE(term.divergent);
  // log(4/√3) from the known expected-visit formula for the 3-regular tree
  EXPECT_NEAR(term.value.finite(), std::log(4.0 / std::sqrt(3.0)), 1e-6);
  EXPECT_FALSE(term.inconclusive);
  EXPECT_EQ(term.abel_values.size(), 10u);
  for (std::size_t i = 1; i < term.abel_values.size(); ++i) {
    EXPECT_GT(term.abel_values[i].second, term.abel_values[i - 1].second);
  }
}

TEST(Walk, SlowDecayIsFlaggedDivergent) {
  const SeriesEntropyTerm slow = series_entropy_term(synthetic(512, 0.01), default_abel_grid());
  EXPECT_TRUE(slow.divergent);
  EXPECT_TRUE(slow.value.is_neg_inf());
  const SeriesEntropyTerm fast = series_entropy_term(synthetic(512, 1.5), default_abel_grid());
  EXPECT_FALSE(fast.divergent);
  EXPECT_EQ(fast.tail_model, "power");
  EXPECT_NEAR(fast.decay_exponent, 1.5, 1e-9);
  // Σ k^{-2.5} = ζ(2.5) = 1.341487257250917...
  EXPECT_NEAR(fast.partial_sum + fast.tail_estimate, 1.3414872572509171798, 1e-6);
}

TEST(Walk, RejectsBadAbelGrid) {
  const ReturnSeries rs = synthetic(16, 1.0);
  const std::vector<double> bad = {0.5, 0.4};
  EXPECT_THROW(series_entropy_term(rs, bad), std::invalid_argument);
}
