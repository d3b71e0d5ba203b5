#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>
#include <sstream>

#include "support.hpp"
#include "tel/entropy.hpp"
#include "tel/resistance.hpp"

using namespace tel;

namespace {

// Same balls without the symmetry lumping.
class Unlumped : public BallSource {
 public:
  explicit Unlumped(std::shared_ptr<const BallSource> inner) : inner_(std::move(inner)) {}
  [[nodiscard]] RootedGraph ball(int r) const override { return inner_->ball(r); }

 private:
  std::shared_ptr<const BallSource> inner_;
};

double dense_resistance(const RootedGraph& g, double s) {
  const Eigen::MatrixXd l = Eigen::MatrixXd(laplacian_of(g.graph).matrix());
  const Eigen::MatrixXd m = l + s * Eigen::MatrixXd::Identity(l.rows(), l.cols());
  return m.inverse()(g.root, g.root);
}

}  // namespace

TEST(Resistance, IntegerLineClosedForm) {
  const auto z = lattice_generator(Lattice::Z)->sample(0);
  for (double s : log_grid(1e-3, 1e3, 13)) {
    // Σ_k C(2k,k) 4^{-k} x^{2k} = (1 − x²)^{-1/2} summed at x = 2/(2+s)
    EXPECT_NEAR(resistance(*z, s).value, 1.0 / std::sqrt(s * s + 4.0 * s), 1e-9) << "s=" << s;
  }
}

TEST(Resistance, FiniteGraphsMatchDenseInverse) {
  std::mt19937_64 rng(21);
  for (int n : {2, 10, 60, 200}) {
    const auto g = tel::testing::random_multigraph(rng, n, 2 * n);
    const RootedGraph r(g, n / 2);
    for (double s : {1e-3, 0.1, 1.0, 30.0}) {
      const double expected = dense_resistance(r, s);
      EXPECT_NEAR(resistance(r, s).value, expected, 1e-10 * expected) << "n=" << n << " s=" << s;
      ResistanceOptions cg;
      cg.solver = SolverKind::conjugate_gradient;
      EXPECT_NEAR(resistance(r, s, cg).value, expected, 1e-9 * expected);
    }
  }
}

TEST(Resistance, LumpingDoesNotChangeTheAnswer) {
  for (const auto& d : {lattice_generator(Lattice::Z), lattice_generator(Lattice::Z2),
                        lattice_generator(Lattice::regular_tree, 3)}) {
    const auto src = d->sample(0);
    for (int r : {3, 8}) {
      const LumpedBall lumped = src->lumped_ball(r + 1);
      const RootedGraph plain = src->ball(r + 1);
      for (double s : {0.01, 0.3, 1.0, 10.0}) {
        const double a = grounded_resistance(wired_quotient(lumped.graph, r, s, lumped.orbit_size));
        const double b = grounded_resistance(wired_quotient(plain, r, s));
        EXPECT_NEAR(a, b, 1e-12 * b) << "r=" << r << " s=" << s;
      }
    }
  }
  // and end to end through the exhaustion
  const auto z2 = lattice_generator(Lattice::Z2)->sample(0);
  const Unlumped plain(z2);
  ResistanceOptions o;
  o.tol = 1e-9;
  o.max_radius = 64;
  for (double s : {0.3, 1.0, 10.0}) {
    EXPECT_NEAR(resistance(*z2, s, o).value, resistance(plain, s, o).value, 1e-9) << "s=" << s;
  }
}

TEST(Resistance, WiredExhaustionIncreasesWithRadius) {
  const auto z2 = lattice_generator(Lattice::Z2)->sample(0);
  double previous = 0.0;
  for (int r : {2, 4, 8, 16, 32}) {
    const LumpedBall b = z2->lumped_ball(r + 1);
    const double value = grounded_resistance(wired_quotient(b.graph, r, 0.05, b.orbit_size));
    EXPECT_GT(value, previous);
    previous = value;
  }
}

TEST(Resistance, CurveIsDecreasingAndConvex) {
  const auto t = lattice_generator(Lattice::regular_tree, 3)->sample(0);
  const auto grid = log_grid(1e-3, 1e3, 25);
  const ResistanceCurve c = resistance_curve(*t, grid);
  EXPECT_EQ(c.first_monotonicity_violation(), -1);
  EXPECT_EQ(c.first_convexity_violation(1e-9), -1);
  std::ostringstream os;
  c.write_csv(os);
  EXPECT_EQ(os.str().substr(0, 15), "s,R,radius,gap\n");
}

TEST(Resistance, RegularClosedFormAgreesWithTheSolver) {
  for (int d : {3, 4}) {
    const auto t = lattice_generator(Lattice::regular_tree, d)->sample(0);
    const int K = 400;
    const ReturnSeries rs = return_probs(walk_network(*t, K), K);
    for (double s : {0.05, 0.5, 2.0, 20.0}) {
      EXPECT_NEAR(regular_closed_form(d, rs, s), resistance(*t, s).value, 1e-9) << "d=" << d << " s=" << s;
    }
  }
  // ℤ is 2-regular; its return probabilities decay slowly
  const auto z = lattice_generator(Lattice::Z)->sample(0);
  const ReturnSeries rz = return_probs(walk_network(*z, 2000), 2000);
  EXPECT_NEAR(regular_closed_form(2, rz, 1.0), 1.0 / std::sqrt(5.0), 1e-10);
  EXPECT_THROW(regular_closed_form(2, rz, 1e-4), InsufficientSeries);
  const double s_min = regular_closed_form_min_s(2, rz);
  EXPECT_NO_THROW(regular_closed_form(2, rz, s_min * 1.01));
  EXPECT_THROW(regular_closed_form(2, rz, s_min * 0.99), InsufficientSeries);
}

TEST(Resistance, RayleighMonotonicityOnCouplings) {
  const auto grid = log_grid(1e-2, 1e2, 7);
  RandomZParams lo, hi;
  hi.extra_edge_prob = 0.5;
  for (const auto& pair : {coupled_z_in_tree(3), coupled_tree_in_tree(3, 4), coupled_random_Z(lo, hi, 5),
                           coupled_weight_scaling(lattice_generator(Lattice::Z2), 1.5)}) {
    const RayleighReport rep = rayleigh_check(pair, 1, grid);
    EXPECT_TRUE(rep.holds) << pair.label;
    for (const auto& p : rep.points) EXPECT_LT(p.r_large, p.r_small) << pair.label << " s=" << p.s;
  }
}

TEST(Resistance, RayleighOnFiniteWitness) {
  std::mt19937_64 rng(31);
  const auto g = tel::testing::random_multigraph(rng, 12, 24);
  std::vector<Edge> heavier(g.edges().begin(), g.edges().end());
  for (auto& e : heavier) e.weight *= 1.3;
  const RootedGraph small(g, 0), large(build_graph(12, heavier), 0);
  DominationWitness w = identity_witness(small);
  w.large = large;
  const RayleighReport rep = rayleigh_check(w, log_grid(0.1, 10.0, 5));
  EXPECT_TRUE(rep.holds);
  std::swap(w.small, w.large);
  EXPECT_THROW(rayleigh_check(w, log_grid(0.1, 10.0, 5)), GraphError);
}

TEST(Resistance, InputChecks) {
  const auto z = lattice_generator(Lattice::Z)->sample(0);
  EXPECT_THROW(resistance(*z, 0.0), std::invalid_argument);
  EXPECT_THROW(resistance(*z, -1.0), std::invalid_argument);
  ResistanceOptions o;
  o.max_radius = 8;
  EXPECT_THROW(resistance(*z, 1e-6, o), ResistanceNotConverged);
  EXPECT_THROW(log_grid(1.0, 0.5, 4), std::invalid_argument);
  EXPECT_EQ(default_s_grid().size(), 48u);
}
