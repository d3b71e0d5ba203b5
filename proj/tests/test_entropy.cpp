#include <gtest/gtest.h>

#include "tel/entropy.hpp"

using namespace tel;

namespace {

const double kLogFourOverRootThree = std::log(4.0 / std::sqrt(3.0));

}  // namespace

TEST(Entropy, PairwiseSum) {
  std::vector<double> v(1000, 0.1);
  EXPECT_NEAR(pairwise_sum(v), 100.0, 1e-12);
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

TEST(Entropy, IdentitiesHold) {
  const IdentityReport rep = identity_checks(25, 1e-8);
  EXPECT_TRUE(rep.passed);
  ASSERT_EQ(rep.checks.size(), 25u);
  for (const auto& c : rep.checks) {
    EXPECT_LE(c.log_error, 1e-8) << c.lambda;
    EXPECT_LE(c.positive_error, 1e-8) << c.lambda;
  }
  EXPECT_TRUE(rep.to_json()["passed"].get<bool>());
}

TEST(Entropy, ResistanceIntegralOfASingleEigenvalue) {
  // R(s) = 1/(λ + s) integrates to log λ, the identity behind the method
  for (double lambda : {0.3, 1.0, 4.0}) {
    auto R = [lambda](double s) { return ResistanceValue{s, 1.0 / (lambda + s), 0, 0.0}; };
    const std::array<double, 4> m = {lambda, lambda * lambda, std::pow(lambda, 3), std::pow(lambda, 4)};
    const ResistanceIntegral ri = resistance_integral(R, m, 1e-4, 1e4, 1e-7);
    ASSERT_FALSE(ri.value.is_neg_inf());
    EXPECT_NEAR(ri.value.finite(), std::log(lambda), 1e-6);
    EXPECT_TRUE(ri.converged);
  }
}

TEST(Entropy, ResistanceIntegralDetectsNonIntegrableBlowUp) {
  auto R = [](double s) { return ResistanceValue{s, 1.0 / s, 0, 0.0}; };
  const ResistanceIntegral ri = resistance_integral(R, {1, 1, 1, 1}, 1e-4, 1e4, 1e-6);
  EXPECT_TRUE(ri.value.is_neg_inf());
  EXPECT_EQ(ri.low_model, "divergent");
}

TEST(Entropy, RootMoments) {
  // (Δ^j)(o,o) on ℤ is the central binomial coefficient C(2j, j)
  const auto m = root_moments(*lattice_generator(Lattice::Z)->sample(0));
  EXPECT_NEAR(m[0], 2.0, 1e-12);
  EXPECT_NEAR(m[1], 6.0, 1e-12);
  EXPECT_NEAR(m[2], 20.0, 1e-12);
  EXPECT_NEAR(m[3], 70.0, 1e-12);
  const auto t = root_moments(*lattice_generator(Lattice::regular_tree, 3)->sample(0));
  EXPECT_NEAR(t[0], 3.0, 1e-12);
  EXPECT_NEAR(t[1], 12.0, 1e-12);
}

TEST(Entropy, ThreeMethodsOnTheThreeRegularTree) {
  const auto t3 = lattice_generator(Lattice::regular_tree, 3);
  const EntropyEstimate series = entropy_series(*t3, 512);
  const EntropyEstimate res = entropy_resistance(*t3, 1e-5);
  const EntropyEstimate cf = entropy_resistance_closed_form(*t3, 3, 512, 1e-5);
  EXPECT_NEAR(series.value.finite(), kLogFourOverRootThree, 1e-6);
  EXPECT_NEAR(res.value.finite(), kLogFourOverRootThree, 1e-6);
  EXPECT_NEAR(cf.value.finite(), kLogFourOverRootThree, 1e-6);
  ASSERT_TRUE(res.error_bar.has_value());
  EXPECT_LT(*res.error_bar, 1e-4);
}

TEST(Entropy, ScalingWeightsShiftsByLogFactor) {
  const auto z = lattice_generator(Lattice::Z);
  const auto z3 = scaled(z, 3.0);
  EXPECT_NEAR(entropy_resistance(*z3, 1e-5).value.finite() - entropy_resistance(*z, 1e-5).value.finite(),
              std::log(3.0), 1e-4);
  EXPECT_NEAR(entropy_series(*z3, 1024).value.finite() - entropy_series(*z, 1024).value.finite(), std::log(3.0),
              1e-9);
}

TEST(Entropy, SeriesIsThreadInvariant) {
  const auto pgw = pgw_sampler(2.0, PgwConditioning::survival_attempted, 3, 10);
  SeriesEstimateOptions one, three;
  one.sampling.samples = three.sampling.samples = 40;
  three.sampling.threads = 3;
  const auto a = entropy_series(*pgw, 16, one);
  const auto b = entropy_series(*pgw, 16, three);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(Entropy, ResistanceRefusesFiniteLaws) {
  const auto torus = uniform_root(families::torus(6), "torus", {{"n", 6}}, true, 0);
  EXPECT_THROW(entropy_resistance(*torus, 1e-4), std::invalid_argument);
}

TEST(Entropy, SpectralMeasureOnTheLine) {
  const auto z = lattice_generator(Lattice::Z);
  const SpectralMeasureApprox mu = expected_spectral_measure(*z, 128);
  EXPECT_NEAR(mu.total_mass, 1.0, 1e-12);
  EXPECT_NEAR(mu.moment(1), 2.0, 1e-9);
  EXPECT_NEAR(mu.moment(2), 6.0, 1e-9);
  const EntropyEstimate e = entropy_spectral(*z, 256);
  EXPECT_NEAR(e.value.finite(), 0.0, 0.02);
  EXPECT_FALSE(e.error_bar.has_value());
  EXPECT_TRUE(e.diagnostics.contains("bias"));
}

TEST(Entropy, FiniteLimitOfCycles) {
  // τ(C_n) = n
  std::vector<WeightedMultigraph> cycles = {families::cycle(5), families::cycle(10), families::cycle(20)};
  const EntropyEstimate e = entropy_finite_limit(cycles);
  EXPECT_NEAR(e.value.finite(), std::log(20.0) / 20.0, 1e-12);
  EXPECT_NEAR(*e.error_bar, std::log(10.0) / 10.0 - std::log(20.0) / 20.0, 1e-12);
  EXPECT_EQ(e.diagnostics["sequence"].size(), 3u);
}

TEST(Entropy, JsonSentinels) {
  EntropyEstimate e;
  e.value = ExtendedReal::neg_inf();
  const auto j = e.to_json();
  EXPECT_EQ(j["value"], "-inf");
  EXPECT_EQ(j["error_bar"], "unknown");
  EXPECT_EQ(j["method"], "series");
}

TEST(Entropy, TruncatedSweepOnTheLineStabilizes) {
  const TruncatedSweep s = truncated_series_sweep(*lattice_generator(Lattice::Z), 1, 8, 1024);
  EXPECT_EQ(s.K.front(), 8);
  EXPECT_EQ(s.K.back(), 1024);
  EXPECT_TRUE(s.decreasing);
  EXPECT_TRUE(s.stabilizing);
  // p_k ~ k^{-1/2} on ℤ, so the sum over (K, 2K] shrinks like K^{-1/2}
  EXPECT_NEAR(s.decrement_slope, -0.5, 0.05);
}
