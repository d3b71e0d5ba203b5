#include "tel/walk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tel {

std::string ExtendedReal::to_string() const {
  if (neg_inf_) return "-inf";
  std::ostringstream os;
  os.precision(17);
  os << value_;
  return os.str();
}

namespace {

struct Step {
  VertexId from;
  VertexId to;
  double prob;
  mpq_class exact_prob;
};

std::vector<Step> transitions(const WeightedMultigraph& g, bool exact) {
  const auto deg = degrees(g).walk_degree;
  std::vector<mpq_class> qdeg;
  if (exact) {
    qdeg.assign(deg.size(), mpq_class(0));
    for (const Edge& e : g.edges()) {
      const mpq_class w(e.weight);
      qdeg[static_cast<std::size_t>(e.u)] += w;
      if (!e.is_loop()) qdeg[static_cast<std::size_t>(e.v)] += w;
    }
  }
  std::vector<Step> steps;
  steps.reserve(g.edge_count() * 2);
  for (const Edge& e : g.edges()) {
    const auto u = static_cast<std::size_t>(e.u);
    const auto v = static_cast<std::size_t>(e.v);
    mpq_class qu, qv;
    if (exact) {
      qu = mpq_class(e.weight) / qdeg[u];
      qv = mpq_class(e.weight) / qdeg[v];
    }
    steps.push_back({e.u, e.v, e.weight / deg[u], qu});
    if (!e.is_loop()) steps.push_back({e.v, e.u, e.weight / deg[v], qv});
  }
  return steps;
}

}  // namespace

ReturnSeries return_probs(const RootedGraph& g, int K, ReturnOptions options) {
  if (K < 1) throw std::invalid_argument("return_probs: K must be >= 1");
  ReturnSeries out;
  out.root_walk_degree = walk_degree(g.graph, g.root);
  if (!(out.root_walk_degree > 0.0)) {
    throw GraphError("return_probs: the root has no incident edges, the walk is undefined");
  }
  out.exactness_radius = options.ball_radius ? 2 * *options.ball_radius : K;
  if (options.require_exact && K > out.exactness_radius) {
    throw std::invalid_argument("return_probs: K = " + std::to_string(K) +
                                " exceeds what a ball of radius " + std::to_string(*options.ball_radius) +
                                " determines exactly");
  }
  const bool exact = options.arithmetic == Arithmetic::exact ||
                     (options.arithmetic == Arithmetic::automatic && K <= 64);
  const auto steps = transitions(g.graph, exact);
  const auto n = static_cast<std::size_t>(g.vertex_count());
  const auto root = static_cast<std::size_t>(g.root);
  out.probabilities.reserve(static_cast<std::size_t>(K));

  if (exact) {
    std::vector<mpq_class> cur(n, mpq_class(0)), next(n, mpq_class(0));
    cur[root] = 1;
    for (int k = 1; k <= K; ++k) {
      for (auto& x : next) x = 0;
      for (const Step& s : steps) {
        const auto& mass = cur[static_cast<std::size_t>(s.from)];
        if (sgn(mass) != 0) next[static_cast<std::size_t>(s.to)] += mass * s.exact_prob;
      }
      std::swap(cur, next);
      out.exact.push_back(cur[root]);
      out.probabilities.push_back(cur[root].get_d());
    }
    return out;
  }

  std::vector<double> cur(n, 0.0), next(n, 0.0);
  cur[root] = 1.0;
  for (int k = 1; k <= K; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (const Step& s : steps) {
      const double mass = cur[static_cast<std::size_t>(s.from)];
      if (mass != 0.0) next[static_cast<std::size_t>(s.to)] += mass * s.prob;
    }
    std::swap(cur, next);
    out.probabilities.push_back(std::clamp(cur[root], 0.0, 1.0));
  }
  return out;
}

std::vector<double> default_abel_grid() {
  std::vector<double> grid;
  for (int j = 3; j <= 12; ++j) grid.push_back(1.0 - std::ldexp(1.0, -j));
  return grid;
}

namespace {

struct DecayModel {
  enum class Kind { none, power, geometric, divergent } kind = Kind::none;
  double log_amplitude = 0.0;
  double slope = 0.0;  // power: −γ in log p = a + slope·log k; geometric: log q
  int last = 0;        // last index covered by data
  int step = 1;

  [[nodiscard]] double p(double k) const {
    switch (kind) {
      case Kind::power: return std::exp(log_amplitude + slope * std::log(k));
      case Kind::geometric: return std::exp(log_amplitude + slope * k);
      default: return 0.0;
    }
  }

  /// Σ_{k > last, k ≡ last mod step} model(k)/k.
  [[nodiscard]] double tail() const {
    if (kind == Kind::none) return 0.0;
    if (kind == Kind::power) {
      const double gamma = -slope;
      const double a = std::exp(log_amplitude);
      return a / (step * gamma) * std::pow(last + 0.5 * step, -gamma);
    }
    double sum = 0.0;
    for (long k = last + step; k < last + 50'000'000L; k += step) {
      const double term = p(static_cast<double>(k)) / static_cast<double>(k);
      sum += term;
      if (term <= 1e-18 * sum || term < 1e-300) break;
    }
    return sum;
  }
};

struct Fit {
  double intercept = 0.0;
  double slope = 0.0;
  double rss = 0.0;
};

Fit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Fit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    f.rss += r * r;
  }
  return f;
}

// Fit the octave (last/2, last] of the series on its parity lattice.
DecayModel fit_octave(std::span<const double> p, int last, int step, double divergence_exponent) {
  DecayModel m;
  m.last = last;
  m.step = step;
  std::vector<double> lk, k, lp;
  int zeros = 0;
  for (int i = last; 2 * i > last; i -= step) {
    const double v = p[static_cast<std::size_t>(i - 1)];
    if (v > 0.0) {
      k.push_back(i);
      lk.push_back(std::log(static_cast<double>(i)));
      lp.push_back(std::log(v));
    } else {
      ++zeros;
    }
  }
  if (k.size() < 3) return m;  // walk never returns this late: nothing to extrapolate
  const Fit power = least_squares(lk, lp);
  const Fit geometric = least_squares(k, lp);
  if (power.rss <= geometric.rss) {
    m.kind = DecayModel::Kind::power;
    m.log_amplitude = power.intercept;
    m.slope = power.slope;
    if (-power.slope < divergence_exponent) m.kind = DecayModel::Kind::divergent;
  } else {
    m.kind = DecayModel::Kind::geometric;
    m.log_amplitude = geometric.intercept;
    m.slope = geometric.slope;
    if (geometric.slope >= 0.0) m.kind = DecayModel::Kind::divergent;
  }
  return m;
}

double partial(std::span<const double> p, int upto) {
  double s = 0.0;
  for (int k = 1; k <= upto; ++k) s += p[static_cast<std::size_t>(k - 1)] / k;
  return s;
}

int lattice_end(int K, int step) { return step == 2 && K % 2 == 1 ? K - 1 : K; }

}  // namespace

SeriesEntropyTerm series_entropy_term(const ReturnSeries& rs, std::span<const double> abel_grid,
                                      SeriesOptions options) {
  for (std::size_t i = 0; i < abel_grid.size(); ++i) {
    if (!(abel_grid[i] > 0.0 && abel_grid[i] < 1.0) || (i > 0 && !(abel_grid[i] > abel_grid[i - 1]))) {
      throw std::invalid_argument("abel grid must be strictly increasing inside (0, 1)");
    }
  }
  const std::span<const double> p(rs.probabilities);
  const int K = rs.length();
  // bipartite walks vanish at odd times; fit on the even lattice only
  bool even_only = true;
  for (int k = 1; k <= K; k += 2) even_only = even_only && p[static_cast<std::size_t>(k - 1)] == 0.0;
  const int step = even_only ? 2 : 1;

  SeriesEntropyTerm out;
  out.partial_sum = partial(p, K);
  const int last = lattice_end(K, step);
  const DecayModel model = fit_octave(p, last, step, options.divergence_exponent);

  switch (model.kind) {
    case DecayModel::Kind::none: out.tail_model = "none"; break;
    case DecayModel::Kind::power: out.tail_model = "power"; break;
    case DecayModel::Kind::geometric: out.tail_model = "geometric"; break;
    case DecayModel::Kind::divergent: out.tail_model = "divergent"; break;
  }
  out.decay_exponent = -model.slope;

  for (double c : abel_grid) {
    double acc = 0.0, ck = 1.0;
    for (int k = 1; k <= K; ++k) {
      ck *= c;
      acc += ck * p[static_cast<std::size_t>(k - 1)] / k;
    }
    if (model.kind == DecayModel::Kind::power || model.kind == DecayModel::Kind::geometric) {
      const double cstep = std::pow(c, step);
      double ckk = std::pow(c, last);
      for (long k = last + step; k < last + 40'000'000L; k += step) {
        ckk *= cstep;
        const double term = ckk * model.p(static_cast<double>(k)) / static_cast<double>(k);
        acc += term;
        if (term <= 1e-17 * acc || term < 1e-300) break;
      }
    }
    out.abel_values.emplace_back(c, acc);
  }

  if (model.kind == DecayModel::Kind::divergent) {
    out.divergent = true;
    out.value = ExtendedReal::neg_inf();
    return out;
  }
  out.tail_estimate = model.tail();
  const double completed = out.partial_sum + out.tail_estimate;

  // same completion one octave earlier
  const int half = lattice_end(K / 2, step);
  if (half >= 8) {
    const DecayModel earlier = fit_octave(p, half, step, options.divergence_exponent);
    if (earlier.kind != DecayModel::Kind::divergent) {
      out.extrapolation_gap = std::abs(partial(p, half) + earlier.tail() - completed);
    } else {
      out.extrapolation_gap = std::abs(out.tail_estimate) + 1.0;
    }
    out.inconclusive = out.extrapolation_gap > options.tolerance;
  }
  out.value = std::log(rs.root_walk_degree) - completed;
  return out;
}

}  // namespace tel
