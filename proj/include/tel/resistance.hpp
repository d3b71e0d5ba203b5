#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "tel/distributions.hpp"
#include "tel/linalg.hpp"
#include "tel/walk.hpp"

namespace tel {

enum class SolverKind { direct, conjugate_gradient };

struct ResistanceOptions {
  double tol = 1e-10;  ///< Cauchy tolerance between consecutive doublings
  int start_radius = 4;
  int max_radius = 1 << 14;
  SolverKind solver = SolverKind::direct;
};

/// R(G, o, s): resistance from the root to the wired boundary when every
/// vertex also has a conductance-s edge to it.
struct ResistanceValue {
  double s = 0.0;
  double value = 0.0;
  int radius_used = 0;
  double cauchy_gap = 0.0;  ///< |R(radius_used) − R(radius_used / 2)|
};

class ResistanceNotConverged : public NumericalError {
 public:
  ResistanceNotConverged(double s, int radius, double previous, double last);
  [[nodiscard]] double previous() const noexcept { return previous_; }
  [[nodiscard]] double last() const noexcept { return last_; }

 private:
  double previous_;
  double last_;
};

/// Root-to-boundary resistance of a wired network with the boundary grounded.
double grounded_resistance(const WiredQuotient& h, SolverKind solver = SolverKind::direct, double cg_tol = 1e-13);

/// Balls of radius 4, 8, 16, ... of the (lumped) source, wired at the boundary,
/// until two consecutive values agree within tol. A finite source is solved
/// once on the whole graph.
ResistanceValue resistance(const BallSource& source, double s, ResistanceOptions options = {});
/// The whole finite graph, every vertex joined to z by conductance s.
ResistanceValue resistance(const RootedGraph& g, double s, ResistanceOptions options = {});

/// n log-spaced points in [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);
/// 48 points in [1e-4, 1e4].
std::vector<double> default_s_grid();

struct ResistanceCurve {
  std::vector<ResistanceValue> samples;

  /// Columns s,R,radius,gap.
  void write_csv(std::ostream& os) const;
  /// R non-increasing in s, and convex along the grid (second divided
  /// differences ≥ −slack). Returns the offending index or -1.
  [[nodiscard]] int first_monotonicity_violation(double slack = 0.0) const;
  [[nodiscard]] int first_convexity_violation(double slack = 0.0) const;
};

ResistanceCurve resistance_curve(const BallSource& source, std::span<const double> s_grid,
                                 ResistanceOptions options = {});

class InsufficientSeries : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Σ_{k≥0} p_k d^k/(d+s)^{k+1} with p_0 = 1, for a d-regular graph. The
/// neglected tail is at most p_{2⌊K/2⌋}·(d/(d+s))^{K+1}/s, since even-time
/// return probabilities of a reversible walk never increase and odd ones sit
/// below their even predecessor. Throws InsufficientSeries when that bound
/// exceeds tail_tol.
double regular_closed_form(int d, const ReturnSeries& rs, double s, double tail_tol = 1e-12);
/// Smallest s at which the series satisfies the tail bound.
double regular_closed_form_min_s(int d, const ReturnSeries& rs, double tail_tol = 1e-12);

struct RayleighPoint {
  double s = 0.0;
  double r_large = 0.0;
  double r_small = 0.0;
  double allowance = 0.0;  ///< 2·(sum of both Cauchy gaps)
  double margin = 0.0;     ///< r_small + allowance − r_large
};

struct RayleighReport {
  std::vector<RayleighPoint> points;
  bool holds = true;
};

/// Both sides of a witness solved as finite graphs; the witness must verify.
RayleighReport rayleigh_check(const DominationWitness& w, std::span<const double> s_grid,
                              ResistanceOptions options = {});
/// Resistances of the two coupled laws (sample `index`), after verifying the
/// witness at `witness_radius`.
RayleighReport rayleigh_check(const CoupledPair& pair, std::uint64_t index, std::span<const double> s_grid,
                              ResistanceOptions options = {}, int witness_radius = 4);

}  // namespace tel
