#include "tel/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "tel/quadrature.hpp"
#include "tel/spanning.hpp"

namespace tel {

using nlohmann::json;

std::string to_string(EntropyMethod m) {
  switch (m) {
    case EntropyMethod::series: return "series";
    case EntropyMethod::resistance: return "resistance";
    case EntropyMethod::spectral: return "spectral";
    case EntropyMethod::finite_limit: return "finite_limit";
  }
  return "unknown";
}

namespace {

json number_or_text(const ExtendedReal& v) {
  if (v.is_neg_inf()) return "-inf";
  return v.finite();
}

}  // namespace

json EntropyEstimate::to_json() const {
  json out = {{"method", to_string(method)}, {"value", number_or_text(value)}};
  out["error_bar"] = error_bar ? json(*error_bar) : json("unknown");
  out["diagnostics"] = diagnostics;
  return out;
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

namespace {

constexpr int kWholeGraph = std::numeric_limits<int>::max() / 2;

struct Draws {
  std::vector<std::shared_ptr<const BallSource>> sources;
  bool exact = false;  ///< every outcome present, no sampling error
};

Draws draw(const RootedDistribution& dist, std::uint64_t samples) {
  Draws d;
  if (dist.vertex_transitive()) {
    d.sources.push_back(dist.outcome(0));
    d.exact = true;
    return d;
  }
  if (const auto count = dist.outcome_count(); count && *count <= samples) {
    for (std::uint64_t i = 0; i < *count; ++i) d.sources.push_back(dist.outcome(i));
    d.exact = true;
    return d;
  }
  if (samples == 0) throw std::invalid_argument("at least one sample is needed");
  for (std::uint64_t i = 0; i < samples; ++i) d.sources.push_back(dist.sample(i));
  return d;
}

/// fn(i) for i < n on up to `threads` workers; results are stored by index, so
/// the outcome never depends on scheduling.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, n == 0 ? 1 : n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct Summary {
  double mean = 0.0;
  double half_width = 0.0;  ///< 1.96·std/√n, zero for exact averages
};

Summary summarize(const std::vector<double>& v, bool exact) {
  Summary s;
  const double n = static_cast<double>(v.size());
  s.mean = pairwise_sum(v) / n;
  if (!exact && v.size() > 1) {
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - s.mean) * (v[i] - s.mean);
    s.half_width = 1.96 * std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  }
  return s;
}

int max_distance(const RootedGraph& g) {
  const auto d = hop_distances(g.graph, g.root);
  return *std::max_element(d.begin(), d.end());
}

/// Vertex order used by ball() and wired_quotient(): (distance, id).
std::vector<VertexId> ball_relabel(const RootedGraph& g, int radius) {
  const auto dist = hop_distances(g.graph, g.root, radius);
  std::vector<VertexId> inside;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (dist[static_cast<std::size_t>(v)] >= 0) inside.push_back(v);
  }
  std::stable_sort(inside.begin(), inside.end(), [&](VertexId a, VertexId b) {
    return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
  });
  return inside;  // new id -> old id
}

/// M^{-1/2} L M^{-1/2}: the Laplacian acting on orbit-constant functions,
/// written in an orthonormal basis.
SparseSymmetric mass_normalized(const SparseSymmetric& L, const std::vector<double>& mass) {
  if (mass.empty()) return L;
  std::vector<Eigen::Triplet<double>> t;
  const auto& m = L.matrix();
  for (Eigen::Index c = 0; c < m.outerSize(); ++c) {
    for (SparseSymmetric::Matrix::InnerIterator it(m, c); it; ++it) {
      if (it.row() > it.col()) continue;
      const double scale = std::sqrt(mass[static_cast<std::size_t>(it.row())] * mass[static_cast<std::size_t>(it.col())]);
      t.emplace_back(it.row(), it.col(), it.value() / scale);
    }
  }
  return SparseSymmetric::from_triplets(L.dimension(), t);
}

/// Δ near the root on the invariant subspace of the lumped ball; rows for
/// vertices beyond `radius` dropped (grounded when `wired`).
struct LocalOperator {
  SparseSymmetric matrix;
  VertexId root = 0;
};

LocalOperator local_operator(const BallSource& source, int radius) {
  if (source.is_finite()) {
    const RootedGraph g = source.ball(kWholeGraph);
    if (max_distance(g) <= radius) return {laplacian_of(g.graph), g.root};
  }
  const LumpedBall b = source.lumped_ball(radius + 1);
  if (max_distance(b.graph) <= radius) {
    return {mass_normalized(laplacian_of(b.graph.graph), b.orbit_size), b.graph.root};
  }
  const WiredQuotient h = wired_quotient(b.graph, radius, 0.0);
  std::vector<double> mass;
  if (!b.orbit_size.empty()) {
    for (VertexId old : ball_relabel(b.graph, radius)) mass.push_back(b.orbit_size[static_cast<std::size_t>(old)]);
  }
  return {mass_normalized(laplacian_of(h.network.graph).without(h.boundary), mass), h.network.root};
}

}  // namespace

// ---- series -------------------------------------------------------------------

RootedGraph walk_network(const BallSource& source, int K) {
  if (source.is_finite()) return source.ball(kWholeGraph);
  const int r = (K + 1) / 2;
  const LumpedBall b = source.lumped_ball(r + 1);
  if (max_distance(b.graph) <= r) return b.graph;  // finite component
  return wired_quotient(b.graph, r, 0.0).network;
}

EntropyEstimate entropy_series(const RootedDistribution& dist, int K, SeriesEstimateOptions options) {
  if (K < 2) throw std::invalid_argument("entropy_series: K must be >= 2");
  const Draws d = draw(dist, options.sampling.samples);
  const std::size_t n = d.sources.size();
  std::vector<SeriesEntropyTerm> terms(n);
  parallel_for(n, options.sampling.threads, [&](std::size_t i) {
    const RootedGraph net = walk_network(*d.sources[i], K);
    ReturnOptions ro;
    ro.arithmetic = Arithmetic::floating;
    terms[i] = series_entropy_term(return_probs(net, K, ro), options.abel_grid, options.series);
  });

  EntropyEstimate est;
  est.method = EntropyMethod::series;
  std::size_t divergent = 0, inconclusive = 0;
  std::vector<double> values, gaps, partials, tails;
  for (const auto& t : terms) {
    if (t.divergent) {
      ++divergent;
      continue;
    }
    inconclusive += t.inconclusive ? 1 : 0;
    values.push_back(t.value.finite());
    gaps.push_back(t.extrapolation_gap);
    partials.push_back(t.partial_sum);
    tails.push_back(t.tail_estimate);
  }
  json diag = {{"K", K},
               {"samples", n},
               {"exact_average", d.exact},
               {"divergent_samples", divergent},
               {"inconclusive_samples", inconclusive},
               {"divergence_detector", "heuristic: fitted decay exponent of p_k below threshold"},
               {"abel_grid", options.abel_grid}};
  if (n == 1) {
    const auto& t = terms[0];
    json abel = json::array();
    for (auto [c, v] : t.abel_values) abel.push_back({c, v});
    diag["abel_values"] = abel;
    diag["tail_model"] = t.tail_model;
    diag["decay_exponent"] = t.decay_exponent;
    diag["partial_sum"] = t.partial_sum;
    diag["tail_estimate"] = t.tail_estimate;
  }
  if (divergent > 0) {
    diag["divergent_fraction"] = static_cast<double>(divergent) / static_cast<double>(n);
    est.value = ExtendedReal::neg_inf();
    est.diagnostics = diag;
    return est;
  }
  const Summary s = summarize(values, d.exact);
  const double gap = pairwise_sum(gaps) / static_cast<double>(gaps.size());
  est.value = s.mean;
  est.error_bar = s.half_width + gap;
  diag["monte_carlo_half_width"] = s.half_width;
  diag["mean_extrapolation_gap"] = gap;
  diag["inconclusive"] = inconclusive > 0;
  est.diagnostics = diag;
  return est;
}

// ---- resistance -----------------------------------------------------------------

std::array<double, 4> root_moments(const BallSource& source) {
  const LocalOperator op = local_operator(source, 3);
  const auto& m = op.matrix.matrix();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m.rows());
  v(op.root) = 1.0;
  std::array<double, 4> out{};
  // (Δ^j)(o,o) = ⟨Δ^a e_o, Δ^b e_o⟩ with a + b = j
  const Eigen::VectorXd v1 = m * v;
  const Eigen::VectorXd v2 = m * v1;
  out[0] = v1(op.root);
  out[1] = v1.dot(v1);
  out[2] = v1.dot(v2);
  out[3] = v2.dot(v2);
  return out;
}

namespace {

struct LowFit {
  std::string model;
  double exponent = 0.0;  // power: α in A s^{-α}; log: slope b
  double integral = 0.0;  // ∫_0^{s0} R ds under the model
  double rss = 0.0;       // relative residual
};

LowFit fit_low(const std::vector<double>& s, const std::vector<double>& r, double s0, double divergence_exponent) {
  const std::size_t n = s.size();
  auto fit_line = [&](const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (y[i] - my);
    }
    const double b = sxy / sxx;
    return std::pair{my - b * mx, b};
  };
  std::vector<double> ls(n), lr(n), inv(n);
  for (std::size_t i = 0; i < n; ++i) {
    ls[i] = std::log(s[i]);
    lr[i] = std::log(r[i]);
    inv[i] = -ls[i];
  }
  const auto [pa, pb] = fit_line(ls, lr);      // log R = pa + pb log s
  const auto [la, lb] = fit_line(inv, r);      // R = la + lb log(1/s)
  double rss_power = 0, rss_log = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::exp(pa + pb * ls[i]);
    const double q = la + lb * inv[i];
    rss_power += std::pow((p - r[i]) / r[i], 2);
    rss_log += std::pow((q - r[i]) / r[i], 2);
  }
  LowFit f;
  if (rss_power <= rss_log) {
    f.model = "power";
    f.exponent = -pb;
    f.rss = rss_power;
    if (f.exponent >= divergence_exponent) {
      f.model = "divergent";
      f.integral = std::numeric_limits<double>::infinity();
    } else {
      f.integral = std::exp(pa) * std::pow(s0, 1.0 - f.exponent) / (1.0 - f.exponent);
    }
  } else {
    f.model = "log";
    f.exponent = lb;
    f.rss = rss_log;
    f.integral = s0 * (la + lb * (std::log(1.0 / s0) + 1.0));
  }
  return f;
}

}  // namespace

ResistanceIntegral resistance_integral(const std::function<ResistanceValue(double)>& R,
                                       const std::array<double, 4>& m, double s_min, double s_max, double tol,
                                       double divergence_exponent) {
  if (!(s_min > 0.0) || !(s_max > s_min) || !(tol > 0.0)) {
    throw std::invalid_argument("resistance_integral: need 0 < s_min < s_max and tol > 0");
  }
  ResistanceIntegral out;
  std::map<double, double> cache;
  auto eval = [&](double s) {
    if (auto it = cache.find(s); it != cache.end()) return it->second;
    const ResistanceValue v = R(s);
    out.max_radius_used = std::max(out.max_radius_used, v.radius_used);
    ++out.evaluations;
    cache.emplace(s, v.value);
    return v.value;
  };

  // small s: model fitted on the lowest decade, checked against the next one
  auto low = [&](double lo) {
    std::vector<double> s = log_grid(lo, 10.0 * lo, 6), r;
    for (double x : s) r.push_back(eval(x));
    return fit_low(s, r, s_min, divergence_exponent);
  };
  const LowFit near = low(s_min);
  out.low_model = near.model;
  out.low_exponent = near.exponent;
  if (near.model == "divergent") {
    out.value = ExtendedReal::neg_inf();
    return out;
  }
  double low_uncertainty = std::abs(near.integral);
  if (100.0 * s_min <= s_max) {
    const LowFit next = low(10.0 * s_min);
    if (next.model != "divergent") low_uncertainty = std::abs(next.integral - near.integral);
  }
  out.low_tail = 0.5 * std::log1p(s_min * s_min) - near.integral;

  const double a = std::log(s_min), b = std::log(s_max);
  std::vector<double> decades;
  for (double x = std::ceil(a / std::log(10.0)); x * std::log(10.0) < b; x += 1.0) decades.push_back(x * std::log(10.0));
  const auto q = integrate_adaptive(
      [&](double x) {
        const double s = std::exp(x);
        return s * (s / (1.0 + s * s) - eval(s));
      },
      a, b, 0.5 * tol, decades);
  out.middle = q.value;
  out.converged = q.converged;

  const double S = s_max;
  out.high_tail = m[0] / S - (1.0 + m[1]) / (2 * S * S) + m[2] / (3 * S * S * S) + (1.0 - m[3]) / (4 * S * S * S * S);
  const double high_uncertainty = std::abs((1.0 - m[3]) / (4 * S * S * S * S));

  out.value = out.middle + out.low_tail + out.high_tail;
  out.error = q.error + low_uncertainty + high_uncertainty;
  return out;
}

namespace {

ResistanceOptions evaluation_options(double tol, double s, const ResistanceEstimateOptions& o) {
  ResistanceOptions ro;
  ro.tol = tol / (100.0 * std::max(1.0, s));
  ro.max_radius = o.max_radius;
  ro.solver = o.solver;
  return ro;
}

json integral_json(const ResistanceIntegral& r) {
  return {{"value", number_or_text(r.value)},
          {"error", r.error},
          {"middle", r.middle},
          {"low_tail", r.low_tail},
          {"high_tail", r.high_tail},
          {"low_model", r.low_model},
          {"low_exponent", r.low_exponent},
          {"evaluations", r.evaluations},
          {"converged", r.converged},
          {"max_radius", r.max_radius_used}};
}

EntropyEstimate aggregate_integrals(const std::vector<ResistanceIntegral>& parts, bool exact, json diag) {
  EntropyEstimate est;
  est.method = EntropyMethod::resistance;
  std::size_t divergent = 0;
  std::vector<double> values, errors;
  int evaluations = 0, radius = 0;
  bool converged = true;
  for (const auto& p : parts) {
    evaluations += p.evaluations;
    radius = std::max(radius, p.max_radius_used);
    if (p.value.is_neg_inf()) {
      ++divergent;
      continue;
    }
    converged = converged && p.converged;
    values.push_back(p.value.finite());
    errors.push_back(p.error);
  }
  diag["samples"] = parts.size();
  diag["exact_average"] = exact;
  diag["evaluations"] = evaluations;
  diag["max_radius"] = radius;
  diag["divergent_samples"] = divergent;
  diag["divergence_detector"] = "heuristic: small-s power fit of R with exponent near 1";
  if (parts.size() == 1) diag["integral"] = integral_json(parts[0]);
  if (divergent > 0) {
    est.value = ExtendedReal::neg_inf();
    est.diagnostics = diag;
    return est;
  }
  const Summary s = summarize(values, exact);
  const double numeric = pairwise_sum(errors) / static_cast<double>(errors.size());
  est.value = s.mean;
  est.error_bar = s.half_width + numeric;
  diag["monte_carlo_half_width"] = s.half_width;
  diag["numerical_error"] = numeric;
  diag["quadrature_converged"] = converged;
  est.diagnostics = diag;
  return est;
}

}  // namespace

EntropyEstimate entropy_resistance(const RootedDistribution& dist, double tol, ResistanceEstimateOptions options) {
  if (!(tol > 0.0)) throw std::invalid_argument("entropy_resistance: tol must be positive");
  if (dist.kind() == DistributionKind::finite_uniform_root) {
    throw std::invalid_argument(
        "entropy_resistance: R(G, o, s) needs an infinite graph; use the finite-limit estimator for finite graphs");
  }
  const Draws d = draw(dist, options.sampling.samples);
  std::vector<ResistanceIntegral> parts(d.sources.size());
  parallel_for(parts.size(), options.sampling.threads, [&](std::size_t i) {
    const BallSource& src = *d.sources[i];
    parts[i] = resistance_integral(
        [&](double s) { return resistance(src, s, evaluation_options(tol, s, options)); }, root_moments(src),
        options.s_min, options.s_max, tol, options.divergence_exponent);
  });
  json diag = {{"tol", tol}, {"s_min", options.s_min}, {"s_max", options.s_max},
               {"solver", options.solver == SolverKind::direct ? "direct" : "conjugate_gradient"}};
  return aggregate_integrals(parts, d.exact, diag);
}

EntropyEstimate entropy_resistance_closed_form(const RootedDistribution& dist, int d, int K, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("entropy_resistance_closed_form: tol must be positive");
  const Draws dr = draw(dist, 1);
  if (dr.sources.size() != 1) throw std::invalid_argument("closed form needs a single (transitive) outcome");
  const BallSource& src = *dr.sources[0];
  ReturnOptions ro;
  ro.arithmetic = Arithmetic::floating;
  const ReturnSeries rs = return_probs(walk_network(src, K), K, ro);
  const double s_min = std::max(1e-4, regular_closed_form_min_s(d, rs));
  const auto part = resistance_integral(
      [&](double s) {
        return ResistanceValue{s, regular_closed_form(d, rs, s), K / 2, 0.0};
      },
      root_moments(src), s_min, 1e4, tol);
  json diag = {{"tol", tol}, {"s_min", s_min}, {"s_max", 1e4}, {"K", K}, {"degree", d}, {"closed_form", true}};
  return aggregate_integrals({part}, true, diag);
}

// ---- spectral ---------------------------------------------------------------------

double SpectralMeasureApprox::moment(int j) const {
  std::vector<double> terms;
  for (const auto& a : atoms) terms.push_back(a.mass * std::pow(a.lambda, j));
  return pairwise_sum(terms);
}

SpectralMeasureApprox expected_spectral_measure(const RootedDistribution& dist, int radius, SamplingOptions sampling) {
  if (radius < 0) throw std::invalid_argument("spectral radius must be non-negative");
  const Draws d = draw(dist, sampling.samples);
  std::vector<EigenDecomposition> parts(d.sources.size());
  parallel_for(parts.size(), sampling.threads, [&](std::size_t i) {
    const LocalOperator op = local_operator(*d.sources[i], radius);
    parts[i] = eig_small(op.matrix, op.root);
  });
  SpectralMeasureApprox mu;
  const double w = 1.0 / static_cast<double>(parts.size());
  std::vector<double> masses;
  for (const auto& p : parts) {
    for (std::size_t j = 0; j < p.eigenvalues.size(); ++j) {
      mu.atoms.push_back({p.eigenvalues[j], w * p.masses_at_vector[j]});
      masses.push_back(w * p.masses_at_vector[j]);
    }
  }
  std::stable_sort(mu.atoms.begin(), mu.atoms.end(),
                   [](const SpectralAtom& a, const SpectralAtom& b) { return a.lambda < b.lambda; });
  mu.total_mass = pairwise_sum(masses);
  return mu;
}

namespace {

struct LogIntegral {
  double value = 0.0;
  double below = 0.0;
};

LogIntegral log_integral(const SpectralMeasureApprox& mu, double floor) {
  std::vector<double> terms, below;
  for (const auto& a : mu.atoms) {
    if (a.lambda > floor) {
      terms.push_back(a.mass * std::log(a.lambda));
    } else {
      below.push_back(a.mass);
    }
  }
  return {pairwise_sum(terms), pairwise_sum(below)};
}

double expected_root_degree(const RootedDistribution& dist, SamplingOptions sampling) {
  const Draws d = draw(dist, sampling.samples);
  std::vector<double> deg;
  for (const auto& s : d.sources) {
    const RootedGraph b = s->ball(1);
    deg.push_back(laplacian_diagonal(b.graph, b.root));
  }
  return pairwise_sum(deg) / static_cast<double>(deg.size());
}

}  // namespace

EntropyEstimate entropy_spectral(const RootedDistribution& dist, int radius, SamplingOptions sampling,
                                 double lambda_floor) {
  const SpectralMeasureApprox mu = expected_spectral_measure(dist, radius, sampling);
  const LogIntegral li = log_integral(mu, lambda_floor);
  EntropyEstimate est;
  est.method = EntropyMethod::spectral;
  json diag = {{"radius", radius},
               {"atoms", mu.atoms.size()},
               {"total_mass", mu.total_mass},
               {"lambda_floor", lambda_floor},
               {"mass_below_floor", li.below},
               {"first_moment", mu.moment(1)},
               {"expected_root_degree", expected_root_degree(dist, sampling)},
               {"bias", "biased: boundary effects of the grounded wired ball"}};
  if (radius >= 2 && dist.kind() != DistributionKind::finite_uniform_root) {
    const LogIntegral half = log_integral(expected_spectral_measure(dist, radius / 2, sampling), lambda_floor);
    diag["bias_estimate"] = std::abs(li.value - half.value);
  }
  if (li.below >= mu.total_mass - 1e-12) {
    diag["warning"] = "all spectral mass lies below the floor";
    est.value = ExtendedReal::neg_inf();
  } else {
    est.value = li.value;
  }
  est.diagnostics = diag;
  return est;
}

// ---- finite limit -----------------------------------------------------------------

EntropyEstimate entropy_finite_limit(std::span<const WeightedMultigraph> sequence) {
  if (sequence.empty()) throw std::invalid_argument("entropy_finite_limit: empty sequence");
  EntropyEstimate est;
  est.method = EntropyMethod::finite_limit;
  json seq = json::array();
  double previous = std::numeric_limits<double>::quiet_NaN();
  int last_n = 0;
  double value = 0.0;
  for (const auto& g : sequence) {
    if (g.vertex_count() <= last_n) throw std::invalid_argument("entropy_finite_limit: sizes must increase");
    last_n = g.vertex_count();
    value = tau(g).log_value / g.vertex_count();
    json row = {{"n", g.vertex_count()}, {"value", value}};
    if (!std::isnan(previous)) row["gap"] = std::abs(value - previous);
    seq.push_back(row);
    if (&g != &sequence.back()) previous = value;
  }
  est.value = value;
  est.error_bar = std::isnan(previous) ? 0.0 : std::abs(value - previous);
  est.diagnostics = {{"sequence", seq}, {"limit_relation", "asserted by the caller, not checked"}};
  return est;
}

// ---- identities ---------------------------------------------------------------------

json IdentityReport::to_json() const {
  json rows = json::array();
  for (const auto& c : checks) {
    rows.push_back({{"lambda", c.lambda},
                    {"log_integral", c.log_integral},
                    {"log_expected", std::log(c.lambda)},
                    {"log_error", c.log_error},
                    {"positive_integral", c.positive_integral},
                    {"positive_expected", 0.5 * std::log1p(c.lambda * c.lambda)},
                    {"positive_error", c.positive_error}});
  }
  return {{"tolerance", tolerance}, {"passed", passed}, {"checks", rows}};
}

IdentityReport identity_checks(int count, double tolerance) {
  IdentityReport report;
  report.tolerance = tolerance;
  report.passed = true;
  for (double lambda : log_grid(1e-3, 1e3, count)) {
    // s = e^x; the integrand behaves like −e^{x}/λ on the left and λ e^{-x} on the right
    const double lo = std::log(tolerance * 1e-6 * lambda);
    const double hi = std::log(lambda / (tolerance * 1e-6));
    const double turn = -std::log(lambda);  // sign change at s = 1/λ
    auto f = [lambda](double x) {
      const double s = std::exp(x);
      return s * (lambda * s - 1.0) / ((1.0 + s * s) * (lambda + s));
    };
    IdentityCheck c;
    c.lambda = lambda;
    const auto whole = integrate_adaptive(f, lo, hi, 1e-3 * tolerance, {turn, 0.0, std::log(lambda)});
    const auto positive = integrate_adaptive(f, turn, hi, 1e-3 * tolerance, {0.0, std::log(lambda)});
    // cut-offs leave remainders of order a/λ and λ/b, below 1e-13
    c.log_integral = whole.value;
    c.positive_integral = positive.value;
    c.log_error = std::abs(c.log_integral - std::log(lambda));
    c.positive_error = std::abs(c.positive_integral - 0.5 * std::log1p(lambda * lambda));
    report.passed = report.passed && c.log_error <= tolerance && c.positive_error <= tolerance;
    report.checks.push_back(c);
  }
  return report;
}

// ---- truncated sweep ------------------------------------------------------------------

json TruncatedSweep::to_json() const {
  return {{"K", K},
          {"values", values},
          {"decrements", decrements},
          {"decrement_slope", decrement_slope},
          {"decreasing", decreasing},
          {"stabilizing", stabilizing}};
}

TruncatedSweep truncated_series_sweep(const RootedDistribution& dist, std::uint64_t samples, int K_min, int K_max,
                                      double stabilization_exponent) {
  if (K_min < 1 || K_max < 2 * K_min) throw std::invalid_argument("truncated sweep: need 1 <= K_min, 2 K_min <= K_max");
  const Draws d = draw(dist, samples);
  TruncatedSweep sweep;
  for (int K = K_min; K <= K_max; K *= 2) sweep.K.push_back(K);
  std::vector<std::vector<double>> per_sample(d.sources.size());
  parallel_for(d.sources.size(), 1, [&](std::size_t i) {
    ReturnOptions ro;
    ro.arithmetic = Arithmetic::floating;
    const ReturnSeries rs = return_probs(walk_network(*d.sources[i], K_max), K_max, ro);
    double partial = 0.0;
    int k = 0;
    for (int K : sweep.K) {
      for (; k < K; ++k) partial += rs.probabilities[static_cast<std::size_t>(k)] / (k + 1);
      per_sample[i].push_back(std::log(rs.root_walk_degree) - partial);
    }
  });
  for (std::size_t j = 0; j < sweep.K.size(); ++j) {
    std::vector<double> col;
    for (const auto& v : per_sample) col.push_back(v[j]);
    sweep.values.push_back(pairwise_sum(col) / static_cast<double>(col.size()));
  }
  sweep.decreasing = true;
  std::vector<double> lk, ld;
  for (std::size_t j = 1; j < sweep.values.size(); ++j) {
    const double dec = sweep.values[j - 1] - sweep.values[j];
    sweep.decrements.push_back(dec);
    sweep.decreasing = sweep.decreasing && dec > 0.0;
    if (dec > 0.0) {
      lk.push_back(std::log(static_cast<double>(sweep.K[j])));
      ld.push_back(std::log(dec));
    }
  }
  if (lk.size() >= 2) {
    const double mx = std::accumulate(lk.begin(), lk.end(), 0.0) / static_cast<double>(lk.size());
    const double my = std::accumulate(ld.begin(), ld.end(), 0.0) / static_cast<double>(ld.size());
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lk.size(); ++i) {
      sxx += (lk[i] - mx) * (lk[i] - mx);
      sxy += (lk[i] - mx) * (ld[i] - my);
    }
    sweep.decrement_slope = sxy / sxx;
  }
  sweep.stabilizing = sweep.decrement_slope <= -stabilization_exponent;
  return sweep;
}

}  // namespace tel
