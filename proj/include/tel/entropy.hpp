#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tel/distributions.hpp"
#include "tel/extended_real.hpp"
#include "tel/resistance.hpp"
#include "tel/walk.hpp"

namespace tel {

enum class EntropyMethod { series, resistance, spectral, finite_limit };

std::string to_string(EntropyMethod m);

struct EntropyEstimate {
  EntropyMethod method = EntropyMethod::series;
  ExtendedReal value;
  std::optional<double> error_bar;  ///< unset: unknown
  nlohmann::json diagnostics = nlohmann::json::object();

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Σ of the values by recursive halving; the result does not depend on how
/// the values were produced, only on their order.
double pairwise_sum(std::span<const double> values);

/// Shared Monte Carlo settings. Distributions with a finite outcome count no
/// larger than `samples` are averaged exactly over all outcomes; vertex
/// transitive ones use a single outcome.
struct SamplingOptions {
  std::uint64_t samples = 1;
  int threads = 1;
};

// ---- series -----------------------------------------------------------------

struct SeriesEstimateOptions {
  SamplingOptions sampling;
  SeriesOptions series;
  std::vector<double> abel_grid = default_abel_grid();
};

/// E[log D(o,o) − Σ_k p_k/k]. Each sample's walk runs on the wired quotient of
/// its ball of radius ⌈K/2⌉, which fixes p_1..p_K exactly.
EntropyEstimate entropy_series(const RootedDistribution& dist, int K, SeriesEstimateOptions options = {});

/// Rooted network on which `K` return probabilities of a sample are exact.
RootedGraph walk_network(const BallSource& source, int K);

// ---- resistance ---------------------------------------------------------------

struct ResistanceEstimateOptions {
  SamplingOptions sampling;
  double s_min = 1e-4;  ///< below: fitted small-s model
  double s_max = 1e4;   ///< above: moment expansion
  SolverKind solver = SolverKind::direct;
  int max_radius = 1 << 14;
  /// A fitted small-s blow-up R ~ s^{-α} with α at least this is non-integrable.
  double divergence_exponent = 0.99;
};

/// ∫_0^∞ (s/(1+s²) − E R(G, o, s)) ds. Rejects finite distributions.
EntropyEstimate entropy_resistance(const RootedDistribution& dist, double tol,
                                   ResistanceEstimateOptions options = {});

/// Same integral for a d-regular law with R taken from the closed form fed by
/// K return probabilities; below the smallest s the series supports, the
/// small-s model takes over.
EntropyEstimate entropy_resistance_closed_form(const RootedDistribution& dist, int d, int K, double tol);

/// Pieces of one resistance integral, exposed for tests.
struct ResistanceIntegral {
  ExtendedReal value;
  double error = 0.0;
  double middle = 0.0;      ///< quadrature over [s_min, s_max]
  double low_tail = 0.0;    ///< model contribution on (0, s_min)
  double high_tail = 0.0;   ///< moment expansion on (s_max, ∞)
  std::string low_model;    ///< "power", "log", "divergent"
  double low_exponent = 0.0;
  int evaluations = 0;
  bool converged = false;
  int max_radius_used = 0;
};

/// `moments` are E[(Δ^j)(o,o)] for j = 1..4.
ResistanceIntegral resistance_integral(const std::function<ResistanceValue(double)>& R,
                                       const std::array<double, 4>& moments, double s_min, double s_max, double tol,
                                       double divergence_exponent = 0.99);

/// (Δ^j)(o,o), j = 1..4, for one sample.
std::array<double, 4> root_moments(const BallSource& source);

// ---- spectral ---------------------------------------------------------------

struct SpectralAtom {
  double lambda = 0.0;
  double mass = 0.0;
};

struct SpectralMeasureApprox {
  std::vector<SpectralAtom> atoms;
  double total_mass = 0.0;
  [[nodiscard]] double moment(int j) const;
};

/// Expected spectral measure of Δ at the root, each ball wired with the
/// boundary grounded (finite graphs covered by the ball use their own Δ).
SpectralMeasureApprox expected_spectral_measure(const RootedDistribution& dist, int radius,
                                                SamplingOptions sampling = {});

EntropyEstimate entropy_spectral(const RootedDistribution& dist, int radius, SamplingOptions sampling = {},
                                 double lambda_floor = 1e-9);

// ---- finite graphs ------------------------------------------------------------

/// (1/|V|) log τ along the sequence; value is the last term, the error bar the
/// last gap.
EntropyEstimate entropy_finite_limit(std::span<const WeightedMultigraph> sequence);

// ---- identities and divergence --------------------------------------------------

struct IdentityCheck {
  double lambda = 0.0;
  double log_integral = 0.0;
  double positive_integral = 0.0;
  double log_error = 0.0;       ///< |quadrature − log λ|
  double positive_error = 0.0;  ///< |quadrature − ½ log(1 + λ²)|
};

struct IdentityReport {
  std::vector<IdentityCheck> checks;
  double tolerance = 1e-8;
  bool passed = false;
  [[nodiscard]] nlohmann::json to_json() const;
};

/// ∫_0^∞ (s/(1+s²) − 1/(λ+s)) ds = log λ and its positive part = ½ log(1+λ²),
/// for `count` log-spaced λ in [1e-3, 1e3].
IdentityReport identity_checks(int count = 25, double tolerance = 1e-8);

/// Mean truncated series value E[log D − Σ_{k≤K} p_k/k] over common samples as
/// K doubles. The sweep counts as stabilizing when successive decrements
/// shrink at least like K^{-γ} with γ = `stabilization_exponent`.
struct TruncatedSweep {
  std::vector<int> K;
  std::vector<double> values;
  std::vector<double> decrements;
  double decrement_slope = 0.0;  ///< fitted slope of log decrement against log K
  bool decreasing = false;
  bool stabilizing = false;
  [[nodiscard]] nlohmann::json to_json() const;
};

TruncatedSweep truncated_series_sweep(const RootedDistribution& dist, std::uint64_t samples, int K_min = 8,
                                      int K_max = 1024, double stabilization_exponent = 0.25);

}  // namespace tel
