#pragma once

#include <gmpxx.h>

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tel/extended_real.hpp"
#include "tel/graph.hpp"

namespace tel {

enum class Arithmetic { automatic, exact, floating };

struct ReturnOptions {
  Arithmetic arithmetic = Arithmetic::automatic;
  /// Set when the graph is a wired ball of this radius around an infinite
  /// graph; p_k is then exact only up to k = 2·radius.
  std::optional<int> ball_radius;
  bool require_exact = false;
};

/// p_k(o; G) for k = 1..K of the network random walk. Loops are
/// self-transitions with probability w(loop)/walk_degree.
struct ReturnSeries {
  std::vector<double> probabilities;  ///< probabilities[k-1] = p_k
  std::vector<mpq_class> exact;       ///< same values, filled on the exact path
  double root_walk_degree = 0.0;
  int exactness_radius = 0;

  [[nodiscard]] int length() const noexcept { return static_cast<int>(probabilities.size()); }
  [[nodiscard]] double p(int k) const { return probabilities.at(static_cast<std::size_t>(k - 1)); }
};

/// Exact rationals when K ≤ 64 under Arithmetic::automatic, doubles otherwise.
ReturnSeries return_probs(const RootedGraph& g, int K, ReturnOptions options = {});

/// Abel parameters c = 1 − 2^{-j}, j = 3..12.
std::vector<double> default_abel_grid();

struct SeriesOptions {
  /// Largest tolerated disagreement between the completed sums from the last
  /// two octaves before the term is flagged inconclusive.
  double tolerance = 1e-3;
  /// A fitted return-probability decay k^{-γ} with γ below this is treated as
  /// non-summable (heuristic divergence detector).
  double divergence_exponent = 0.05;
};

/// log(root walk degree) − Σ_{k≥1} p_k/k, with the sum beyond K completed by a
/// decay model fitted on the last octave of the supplied series.
struct SeriesEntropyTerm {
  ExtendedReal value;
  std::vector<std::pair<double, double>> abel_values;  ///< (c, Σ c^k p_k/k incl. modelled tail)
  std::optional<double> tail_bound;                   ///< unset: no rigorous bound available
  double partial_sum = 0.0;                           ///< Σ_{k≤K} p_k/k
  double tail_estimate = 0.0;                         ///< modelled Σ_{k>K} p_k/k
  std::string tail_model;                             ///< "power", "geometric", "none", "divergent"
  double decay_exponent = 0.0;                        ///< γ of the power fit (or −log q)
  double extrapolation_gap = 0.0;                     ///< |completed sum at K − at K/2|
  bool inconclusive = false;
  bool divergent = false;
};

SeriesEntropyTerm series_entropy_term(const ReturnSeries& rs, std::span<const double> abel_grid,
                                      SeriesOptions options = {});

}  // namespace tel
