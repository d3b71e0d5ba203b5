#include "tel/resistance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace tel {

namespace {

std::string describe_nonconvergence(double s, int radius, double previous, double last) {
  std::ostringstream os;
  os.precision(17);
  os << "resistance at s = " << s << " did not settle by radius " << radius << ": last two values " << previous
     << " and " << last;
  return os.str();
}

void check_s(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("resistance: s must be positive and finite");
}

}  // namespace

ResistanceNotConverged::ResistanceNotConverged(double s, int radius, double previous, double last)
    : NumericalError(describe_nonconvergence(s, radius, previous, last)), previous_(previous), last_(last) {}

double grounded_resistance(const WiredQuotient& h, SolverKind solver, double cg_tol) {
  const auto& g = h.network;
  if (g.root == h.boundary) throw GraphError("grounded_resistance: the root is the boundary");
  const SparseSymmetric grounded = laplacian_of(g.graph).without(h.boundary);
  const VertexId root = g.root < h.boundary ? g.root : g.root - 1;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(grounded.dimension());
  rhs(root) = 1.0;
  if (solver == SolverKind::direct) return solve_spd_direct(grounded, rhs)(root);
  return solve_spd(grounded, rhs, cg_tol).x(root);
}

ResistanceValue resistance(const RootedGraph& g, double s, ResistanceOptions options) {
  check_s(s);
  const int everything = g.vertex_count();
  const WiredQuotient h = wired_quotient(g, everything, s);
  ResistanceValue out;
  out.s = s;
  out.value = grounded_resistance(h, options.solver);
  const auto dist = hop_distances(g.graph, g.root);
  out.radius_used = *std::max_element(dist.begin(), dist.end());
  return out;
}

ResistanceValue resistance(const BallSource& source, double s, ResistanceOptions options) {
  check_s(s);
  if (!(options.tol > 0.0)) throw std::invalid_argument("resistance: tol must be positive");
  if (options.start_radius < 1 || options.max_radius < options.start_radius) {
    throw std::invalid_argument("resistance: bad radius schedule");
  }
  if (source.is_finite()) return resistance(source.ball(std::numeric_limits<int>::max() / 2), s, options);

  auto at = [&](int r) {
    const LumpedBall b = source.lumped_ball(r + 1);
    return grounded_resistance(wired_quotient(b.graph, r, s, b.orbit_size), options.solver);
  };
  int r = options.start_radius;
  double previous = at(r);
  for (;;) {
    const int next = 2 * r;
    if (next > options.max_radius) throw ResistanceNotConverged(s, r, previous, previous);
    const double value = at(next);
    // a wired boundary further out can only add resistance
    if (value < previous * (1.0 - 1e-10) - 1e-300) {
      std::ostringstream os;
      os.precision(17);
      os << "wired exhaustion not monotone at s = " << s << ": R(" << r << ") = " << previous << " > R(" << next
         << ") = " << value;
      throw NumericalError(os.str());
    }
    const double gap = std::abs(value - previous);
    if (gap <= options.tol) return {s, value, next, gap};
    if (2 * next > options.max_radius) throw ResistanceNotConverged(s, next, previous, value);
    previous = value;
    r = next;
  }
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> grid(static_cast<std::size_t>(n));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> default_s_grid() { return log_grid(1e-4, 1e4, 48); }

void ResistanceCurve::write_csv(std::ostream& os) const {
  os << "s,R,radius,gap\n";
  os.precision(17);
  for (const auto& v : samples) os << v.s << ',' << v.value << ',' << v.radius_used << ',' << v.cauchy_gap << '\n';
}

int ResistanceCurve::first_monotonicity_violation(double slack) const {
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].value > samples[i - 1].value + slack) return static_cast<int>(i);
  }
  return -1;
}

int ResistanceCurve::first_convexity_violation(double slack) const {
  for (std::size_t i = 2; i < samples.size(); ++i) {
    const auto& a = samples[i - 2];
    const auto& b = samples[i - 1];
    const auto& c = samples[i];
    const double left = (b.value - a.value) / (b.s - a.s);
    const double right = (c.value - b.value) / (c.s - b.s);
    if (right - left < -slack) return static_cast<int>(i - 1);
  }
  return -1;
}

ResistanceCurve resistance_curve(const BallSource& source, std::span<const double> s_grid,
                                 ResistanceOptions options) {
  ResistanceCurve curve;
  for (double s : s_grid) curve.samples.push_back(resistance(source, s, options));
  return curve;
}

namespace {

// p_{2j} is non-increasing and p_{2j+1} ≤ p_{2j} for a reversible walk (P is
// self-adjoint in ℓ²(degree)), so every p_k with k > K is at most p_{2⌊K/2⌋}.
double tail_return_bound(const ReturnSeries& rs) {
  const int even = rs.length() - rs.length() % 2;
  return even >= 2 ? rs.p(even) : 1.0;
}

double closed_form_tail(int d, int K, double p_bound, double s) {
  return p_bound * std::exp((K + 1) * std::log(d / (d + s))) / s;
}

}  // namespace

double regular_closed_form(int d, const ReturnSeries& rs, double s, double tail_tol) {
  if (d < 2) throw std::invalid_argument("regular_closed_form: d must be >= 2");
  check_s(s);
  const int K = rs.length();
  const double tail = closed_form_tail(d, K, tail_return_bound(rs), s);
  if (tail > tail_tol) {
    std::ostringstream os;
    os << "regular_closed_form: " << K << " return probabilities leave a tail bound of " << tail << " at s = " << s
       << " (need at least s = " << regular_closed_form_min_s(d, rs, tail_tol) << ")";
    throw InsufficientSeries(os.str());
  }
  const double ratio = d / (d + s);
  double sum = 1.0 / (d + s);
  double factor = 1.0 / (d + s);
  for (int k = 1; k <= K; ++k) {
    factor *= ratio;
    sum += rs.p(k) * factor;
  }
  return sum;
}

double regular_closed_form_min_s(int d, const ReturnSeries& rs, double tail_tol) {
  const int K = rs.length();
  const double bound = tail_return_bound(rs);
  double lo = 1e-300, hi = 1.0;
  if (closed_form_tail(d, K, bound, lo) <= tail_tol) return lo;
  while (closed_form_tail(d, K, bound, hi) > tail_tol) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = std::sqrt(lo * hi);
    (closed_form_tail(d, K, bound, mid) > tail_tol ? lo : hi) = mid;
  }
  return hi;
}

namespace {

RayleighReport compare(std::span<const double> s_grid, const std::function<ResistanceValue(double)>& large,
                       const std::function<ResistanceValue(double)>& small) {
  RayleighReport report;
  for (double s : s_grid) {
    const ResistanceValue rl = large(s);
    const ResistanceValue rs = small(s);
    RayleighPoint p;
    p.s = s;
    p.r_large = rl.value;
    p.r_small = rs.value;
    p.allowance = 2.0 * (rl.cauchy_gap + rs.cauchy_gap);
    p.margin = p.r_small + p.allowance - p.r_large;
    // rounding of the two direct solves
    const double rounding = 1e-12 * std::max(p.r_small, p.r_large);
    if (p.margin < -rounding) report.holds = false;
    report.points.push_back(p);
  }
  return report;
}

}  // namespace

RayleighReport rayleigh_check(const DominationWitness& w, std::span<const double> s_grid, ResistanceOptions options) {
  if (const auto check = verify_domination(w); !check) {
    throw GraphError("rayleigh_check: witness does not verify: " + check.diagnostic);
  }
  return compare(
      s_grid, [&](double s) { return resistance(w.large, s, options); },
      [&](double s) { return resistance(w.small, s, options); });
}

RayleighReport rayleigh_check(const CoupledPair& pair, std::uint64_t index, std::span<const double> s_grid,
                              ResistanceOptions options, int witness_radius) {
  if (const auto check = verify_domination(pair.witness(index, witness_radius)); !check) {
    throw GraphError("rayleigh_check: coupling witness fails: " + check.diagnostic);
  }
  const auto high = pair.high->sample(index);
  const auto low = pair.low->sample(index);
  return compare(
      s_grid, [&](double s) { return resistance(*high, s, options); },
      [&](double s) { return resistance(*low, s, options); });
}

}  // namespace tel
