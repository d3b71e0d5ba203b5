#include "tel/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace tel {

using nlohmann::json;

std::string to_string(DistributionKind kind) {
  switch (kind) {
    case DistributionKind::finite_uniform_root: return "finite_uniform_root";
    case DistributionKind::fixed_generator: return "fixed_generator";
    case DistributionKind::sampler: return "sampler";
  }
  return "unknown";
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

double unit_uniform(std::uint64_t key) {
  // 53 random bits mapped to (0, 1]
  return static_cast<double>((splitmix64(key) >> 11) + 1) * 0x1.0p-53;
}

namespace {

std::uint64_t zigzag(long n) {
  return n >= 0 ? 2 * static_cast<std::uint64_t>(n) : 2 * static_cast<std::uint64_t>(-(n + 1)) + 1;
}

WeightedMultigraph scale_weights(const WeightedMultigraph& g, double factor) {
  std::vector<Edge> edges(g.edges().begin(), g.edges().end());
  for (Edge& e : edges) e.weight *= factor;
  return {g.vertex_count(), std::move(edges)};
}

/// Orbit network from representatives: `neighbours(a)` lists the orbit of every
/// neighbour of a's representative (with multiplicity and edge weight).
struct OrbitEdge {
  int orbit;
  double weight;
};

LumpedBall lump(int orbit_count, const std::vector<double>& orbit_size,
                const std::function<std::vector<OrbitEdge>(int)>& neighbours, double root_loop = 0.0) {
  for (int a = 0; a < orbit_count; ++a) {
    if (!std::isfinite(orbit_size[static_cast<std::size_t>(a)])) {
      throw GraphError("symmetry-lumped ball has orbits too large for double precision");
    }
  }
  std::vector<Edge> edges;
  if (root_loop > 0.0) edges.push_back({0, 0, root_loop});
  for (int a = 0; a < orbit_count; ++a) {
    for (const OrbitEdge& nb : neighbours(a)) {
      if (nb.orbit < 0 || nb.orbit >= orbit_count) continue;
      if (nb.orbit > a) {
        edges.push_back({a, nb.orbit, orbit_size[static_cast<std::size_t>(a)] * nb.weight});
      } else if (nb.orbit == a) {
        edges.push_back({a, a, orbit_size[static_cast<std::size_t>(a)] * nb.weight});
      }
    }
  }
  return {RootedGraph(WeightedMultigraph(orbit_count, std::move(edges)), 0), orbit_size};
}

// ---- finite uniform root ----------------------------------------------------

class FiniteSource final : public BallSource {
 public:
  FiniteSource(std::shared_ptr<const WeightedMultigraph> g, VertexId root) : g_(std::move(g)), root_(root) {}
  [[nodiscard]] RootedGraph ball(int radius) const override { return tel::ball(RootedGraph(*g_, root_), radius); }
  [[nodiscard]] bool is_finite() const override { return true; }

 private:
  std::shared_ptr<const WeightedMultigraph> g_;
  VertexId root_;
};

class UniformRoot final : public RootedDistribution {
 public:
  UniformRoot(WeightedMultigraph g, std::string name, json params, bool transitive, std::uint64_t seed)
      : g_(std::make_shared<const WeightedMultigraph>(std::move(g))),
        name_(std::move(name)),
        params_(std::move(params)),
        transitive_(transitive),
        seed_(seed) {}

  [[nodiscard]] DistributionKind kind() const override { return DistributionKind::finite_uniform_root; }
  [[nodiscard]] json descriptor() const override {
    return {{"family", name_}, {"params", params_}, {"seed", seed_}};
  }
  [[nodiscard]] std::shared_ptr<const BallSource> sample(std::uint64_t index) const override {
    const auto n = static_cast<std::uint64_t>(g_->vertex_count());
    return outcome(splitmix64(derive_seed(seed_, index)) % n);
  }
  [[nodiscard]] std::optional<std::uint64_t> outcome_count() const override {
    return static_cast<std::uint64_t>(g_->vertex_count());
  }
  [[nodiscard]] std::shared_ptr<const BallSource> outcome(std::uint64_t i) const override {
    return std::make_shared<FiniteSource>(g_, static_cast<VertexId>(i));
  }
  [[nodiscard]] bool vertex_transitive() const override { return transitive_; }
  [[nodiscard]] std::uint64_t seed() const override { return seed_; }

 private:
  std::shared_ptr<const WeightedMultigraph> g_;
  std::string name_;
  json params_;
  bool transitive_;
  std::uint64_t seed_;
};

// ---- fixed generators -------------------------------------------------------

/// A single rooted graph; every sample is the same source.
class FixedDistribution final : public RootedDistribution {
 public:
  FixedDistribution(std::shared_ptr<const BallSource> source, json descriptor, bool transitive)
      : source_(std::move(source)), descriptor_(std::move(descriptor)), transitive_(transitive) {}

  [[nodiscard]] DistributionKind kind() const override { return DistributionKind::fixed_generator; }
  [[nodiscard]] json descriptor() const override { return descriptor_; }
  [[nodiscard]] std::shared_ptr<const BallSource> sample(std::uint64_t) const override { return source_; }
  [[nodiscard]] std::optional<std::uint64_t> outcome_count() const override { return 1; }
  [[nodiscard]] std::shared_ptr<const BallSource> outcome(std::uint64_t) const override { return source_; }
  [[nodiscard]] bool vertex_transitive() const override { return transitive_; }

 private:
  std::shared_ptr<const BallSource> source_;
  json descriptor_;
  bool transitive_;
};

void check_radius(int radius) {
  if (radius < 0) throw GraphError("ball radius must be non-negative");
}

class ZSource final : public BallSource {
 public:
  explicit ZSource(double w) : w_(w) {}
  [[nodiscard]] RootedGraph ball(int radius) const override {
    check_radius(radius);
    std::vector<Edge> edges;
    for (long k = 1; k <= radius; ++k) {
      // sorted by larger endpoint id: left edge (id 2k−1) before right edge (id 2k)
      edges.push_back({z_vertex_id(-(k - 1)), z_vertex_id(-k), w_});
      edges.push_back({z_vertex_id(k - 1), z_vertex_id(k), w_});
    }
    return {WeightedMultigraph(2 * radius + 1, std::move(edges)), 0};
  }
  [[nodiscard]] LumpedBall lumped_ball(int radius) const override {
    check_radius(radius);
    std::vector<double> size(static_cast<std::size_t>(radius + 1), 2.0);
    size[0] = 1.0;
    return lump(radius + 1, size, [&](int a) {
      std::vector<OrbitEdge> nb;
      if (a == 0) return std::vector<OrbitEdge>{{1, 2.0 * w_}};
      nb.push_back({a - 1, w_});
      nb.push_back({a + 1, w_});
      return nb;
    });
  }

 private:
  double w_;
};

int z2_offset(long k) { return k == 0 ? 0 : static_cast<int>(1 + 2 * k * (k - 1)); }

class Z2Source final : public BallSource {
 public:
  explicit Z2Source(double w) : w_(w) {}
  [[nodiscard]] RootedGraph ball(int radius) const override {
    check_radius(radius);
    std::vector<Edge> edges;
    for (long k = 1; k <= radius; ++k) {
      const int start = z2_offset(k);
      for (int t = 0; t < 4 * static_cast<int>(k); ++t) {
        const auto [x, y] = position(k, t);
        const VertexId id = start + t;
        // inner neighbours are the ones one step closer to the origin
        const long cand[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        std::vector<VertexId> inner;
        for (const auto& c : cand) {
          if (std::labs(c[0]) + std::labs(c[1]) == k - 1) inner.push_back(z2_vertex_id(c[0], c[1]));
        }
        std::sort(inner.begin(), inner.end());
        for (VertexId v : inner) edges.push_back({v, id, w_});
      }
    }
    return {WeightedMultigraph(z2_offset(radius + 1), std::move(edges)), 0};
  }

  [[nodiscard]] LumpedBall lumped_ball(int radius) const override {
    check_radius(radius);
    // wedge 0 ≤ y ≤ x, layered by x + y
    std::vector<std::pair<long, long>> reps;
    std::map<std::pair<long, long>, int> index;
    for (long k = 0; k <= radius; ++k) {
      for (long y = 0; 2 * y <= k; ++y) {
        index[{k - y, y}] = static_cast<int>(reps.size());
        reps.emplace_back(k - y, y);
      }
    }
    std::vector<double> size;
    for (auto [x, y] : reps) size.push_back(x == 0 ? 1.0 : (y == 0 || x == y) ? 4.0 : 8.0);
    return lump(static_cast<int>(reps.size()), size, [&](int a) {
      const auto [x, y] = reps[static_cast<std::size_t>(a)];
      std::vector<OrbitEdge> nb;
      const long cand[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& c : cand) {
        long u = std::labs(c[0]), v = std::labs(c[1]);
        if (v > u) std::swap(u, v);
        const auto it = index.find({u, v});
        if (it != index.end()) nb.push_back({it->second, w_});
      }
      return nb;
    });
  }

  static std::pair<long, long> position(long k, int t) {
    // counter-clockwise from (k, 0)
    const long q = t / k, r = t % k;
    switch (q) {
      case 0: return {k - r, r};
      case 1: return {-r, k - r};
      case 2: return {-k + r, -r};
      default: return {r, -k + r};
    }
  }

 private:
  double w_;
};

class SphericalTreeSource final : public BallSource {
 public:
  explicit SphericalTreeSource(TreeProfile p) : p_(std::move(p)) {}

  [[nodiscard]] RootedGraph ball(int radius) const override {
    check_radius(radius);
    const auto children = spherical_tree_children(p_, radius);
    std::vector<Edge> edges;
    if (p_.root_loop > 0.0) edges.push_back({0, 0, p_.root_loop});
    std::vector<VertexId> parent(children.size(), -1);
    for (std::size_t v = 0; v < children.size(); ++v) {
      for (VertexId c : children[v]) parent[static_cast<std::size_t>(c)] = static_cast<VertexId>(v);
    }
    for (std::size_t v = 1; v < children.size(); ++v) edges.push_back({parent[v], static_cast<VertexId>(v), p_.weight});
    return {WeightedMultigraph(static_cast<int>(children.size()), std::move(edges)), 0};
  }

  [[nodiscard]] LumpedBall lumped_ball(int radius) const override {
    check_radius(radius);
    std::vector<double> level{1.0};
    for (int j = 0; j < radius; ++j) level.push_back(level.back() * branching(j));
    return lump(radius + 1, level, [&](int a) {
      // level a to a+1 carries N_{a+1} unit edges: weight per representative = branching
      return std::vector<OrbitEdge>{{a + 1, p_.weight * branching(a)}};
    }, p_.root_loop);
  }

 private:
  [[nodiscard]] double branching(int depth) const {
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(depth), p_.branching.size() - 1);
    return p_.branching[i];
  }
  TreeProfile p_;
};

// ---- PGW --------------------------------------------------------------------

class PgwTree final : public BallSource {
 public:
  PgwTree(double mean, std::uint64_t seed) : mean_(mean), rng_(seed) {}

  [[nodiscard]] RootedGraph ball(int radius) const override {
    check_radius(radius);
    std::lock_guard lock(mutex_);
    grow(radius);
    const int n = level_start_[static_cast<std::size_t>(std::min<int>(radius + 1, depth_ + 1))];
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n));
    for (int v = 1; v < n; ++v) edges.push_back({parent_[static_cast<std::size_t>(v)], v, 1.0});
    return {WeightedMultigraph(n, std::move(edges)), 0};
  }

  /// Vertices at `depth` (growing the tree as needed).
  [[nodiscard]] int level_size(int depth) const {
    std::lock_guard lock(mutex_);
    grow(depth);
    if (depth > depth_) return 0;
    return level_start_[static_cast<std::size_t>(depth + 1)] - level_start_[static_cast<std::size_t>(depth)];
  }

 private:
  static constexpr int kMaxVertices = 20'000'000;

  void grow(int depth) const {
    std::poisson_distribution<int> offspring(mean_);
    while (depth_ < depth) {
      const int lo = level_start_[static_cast<std::size_t>(depth_)];
      const int hi = level_start_[static_cast<std::size_t>(depth_ + 1)];
      if (lo == hi) return;  // extinct
      for (int v = lo; v < hi; ++v) {
        const int c = offspring(rng_);
        for (int i = 0; i < c; ++i) parent_.push_back(v);
      }
      if (parent_.size() > static_cast<std::size_t>(kMaxVertices)) {
        throw std::runtime_error("PGW ball exceeds " + std::to_string(kMaxVertices) + " vertices");
      }
      level_start_.push_back(static_cast<int>(parent_.size()));
      ++depth_;
    }
  }

  double mean_;
  mutable std::mutex mutex_;
  mutable std::mt19937_64 rng_;
  mutable std::vector<VertexId> parent_{-1};
  mutable std::vector<int> level_start_{0, 1};
  mutable int depth_ = 0;
};

class PgwDistribution final : public RootedDistribution {
 public:
  PgwDistribution(double mean, PgwConditioning cond, std::uint64_t seed, int radius, int attempts)
      : mean_(mean), cond_(cond), seed_(seed), radius_(radius), attempts_(attempts) {}

  [[nodiscard]] DistributionKind kind() const override { return DistributionKind::sampler; }
  [[nodiscard]] json descriptor() const override {
    return {{"family", "pgw"},
            {"params",
             {{"mean", mean_},
              {"conditioning", cond_ == PgwConditioning::none ? "none" : "survival_attempted"},
              {"working_radius", radius_},
              {"max_attempts", attempts_}}},
            {"seed", seed_}};
  }
  [[nodiscard]] std::uint64_t seed() const override { return seed_; }

  [[nodiscard]] std::shared_ptr<const BallSource> sample(std::uint64_t index) const override {
    int rejected = 0;
    auto tree = draw(index, rejected);
    if (!tree) {
      throw std::runtime_error("pgw sampler: no surviving tree within " + std::to_string(attempts_) +
                               " attempts (mean " + std::to_string(mean_) + ")");
    }
    return tree;
  }

  /// Accepted tree (or null) and the number of rejected attempts before it.
  std::shared_ptr<const PgwTree> draw(std::uint64_t index, int& rejected) const {
    const auto base = derive_seed(seed_, index);
    for (int a = 0; a < attempts_; ++a) {
      auto tree = std::make_shared<const PgwTree>(mean_, derive_seed(base, static_cast<std::uint64_t>(a)));
      if (cond_ == PgwConditioning::none || tree->level_size(radius_) > 0) return tree;
      ++rejected;
    }
    return nullptr;
  }

 private:
  double mean_;
  PgwConditioning cond_;
  std::uint64_t seed_;
  int radius_;
  int attempts_;
};

// ---- random weights on ℤ ----------------------------------------------------

/// ℤ whose edge (n, n+1) carries the parallel weights returned by `weights(n)`.
class WeightedZSource final : public BallSource {
 public:
  explicit WeightedZSource(std::function<std::vector<double>(long)> weights) : weights_(std::move(weights)) {}

  [[nodiscard]] RootedGraph ball(int radius) const override {
    check_radius(radius);
    std::vector<Edge> edges;
    for (long k = 1; k <= radius; ++k) {
      // left edge (−k, −k+1) has the larger id −k, then right edge (k−1, k)
      const VertexId left_inner = z_vertex_id(-(k - 1)), left = z_vertex_id(-k);
      for (double w : weights_(-k)) edges.push_back({left_inner, left, w});
      const VertexId right_inner = z_vertex_id(k - 1), right = z_vertex_id(k);
      for (double w : weights_(k - 1)) edges.push_back({right_inner, right, w});
    }
    return {WeightedMultigraph(2 * radius + 1, std::move(edges)), 0};
  }

 private:
  std::function<std::vector<double>(long)> weights_;
};

class KeyedZDistribution final : public RootedDistribution {
 public:
  using Weights = std::function<std::vector<double>(std::uint64_t sample_seed, long n)>;
  KeyedZDistribution(json descriptor, std::uint64_t seed, Weights weights)
      : descriptor_(std::move(descriptor)), seed_(seed), weights_(std::move(weights)) {}

  [[nodiscard]] DistributionKind kind() const override { return DistributionKind::sampler; }
  [[nodiscard]] json descriptor() const override { return descriptor_; }
  [[nodiscard]] std::uint64_t seed() const override { return seed_; }
  [[nodiscard]] std::shared_ptr<const BallSource> sample(std::uint64_t index) const override {
    const auto s = derive_seed(seed_, index);
    auto w = weights_;
    return std::make_shared<WeightedZSource>([s, w](long n) { return w(s, n); });
  }

 private:
  json descriptor_;
  std::uint64_t seed_;
  Weights weights_;
};

// ---- scaling ----------------------------------------------------------------

class ScaledSource final : public BallSource {
 public:
  ScaledSource(std::shared_ptr<const BallSource> base, double f) : base_(std::move(base)), f_(f) {}
  [[nodiscard]] RootedGraph ball(int radius) const override {
    const RootedGraph b = base_->ball(radius);
    return {scale_weights(b.graph, f_), b.root};
  }
  [[nodiscard]] LumpedBall lumped_ball(int radius) const override {
    LumpedBall b = base_->lumped_ball(radius);
    return {RootedGraph(scale_weights(b.graph.graph, f_), b.graph.root), std::move(b.orbit_size)};
  }
  [[nodiscard]] bool is_finite() const override { return base_->is_finite(); }

 private:
  std::shared_ptr<const BallSource> base_;
  double f_;
};

class ScaledDistribution final : public RootedDistribution {
 public:
  ScaledDistribution(DistributionPtr base, double f) : base_(std::move(base)), f_(f) {}
  [[nodiscard]] DistributionKind kind() const override { return base_->kind(); }
  [[nodiscard]] json descriptor() const override {
    return {{"family", "scaled"}, {"params", {{"factor", f_}, {"base", base_->descriptor()}}}, {"seed", seed()}};
  }
  [[nodiscard]] std::shared_ptr<const BallSource> sample(std::uint64_t i) const override {
    return std::make_shared<ScaledSource>(base_->sample(i), f_);
  }
  [[nodiscard]] std::optional<std::uint64_t> outcome_count() const override { return base_->outcome_count(); }
  [[nodiscard]] std::shared_ptr<const BallSource> outcome(std::uint64_t i) const override {
    return std::make_shared<ScaledSource>(base_->outcome(i), f_);
  }
  [[nodiscard]] bool vertex_transitive() const override { return base_->vertex_transitive(); }
  [[nodiscard]] std::uint64_t seed() const override { return base_->seed(); }

 private:
  DistributionPtr base_;
  double f_;
};

void require_weight(double w) {
  if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be positive and finite");
}

}  // namespace

// ---- public constructors ------------------------------------------------------

DistributionPtr uniform_root(WeightedMultigraph g, std::string name, json params, bool vertex_transitive,
                             std::uint64_t seed) {
  return std::make_shared<UniformRoot>(std::move(g), std::move(name), std::move(params), vertex_transitive, seed);
}

namespace families {

WeightedMultigraph torus(int n) {
  if (n < 3) throw std::invalid_argument("torus needs n >= 3");
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      edges.push_back({i * n + j, i * n + (j + 1) % n, 1.0});
      edges.push_back({i * n + j, ((i + 1) % n) * n + j, 1.0});
    }
  }
  return {n * n, std::move(edges)};
}

WeightedMultigraph cycle(int n) {
  if (n < 3) throw std::invalid_argument("cycle needs n >= 3");
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0});
  return {n, std::move(edges)};
}

WeightedMultigraph complete(int n) {
  if (n < 1) throw std::invalid_argument("complete graph needs n >= 1");
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j, 1.0});
  }
  return {n, std::move(edges)};
}

WeightedMultigraph path(int n) {
  if (n < 1) throw std::invalid_argument("path needs n >= 1");
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  return {n, std::move(edges)};
}

WeightedMultigraph random_regular(int d, int n, std::uint64_t seed) {
  if (d < 1 || n <= d || (static_cast<long>(d) * n) % 2 != 0) {
    throw std::invalid_argument("random_regular: need d >= 1, n > d and d·n even");
  }
  std::mt19937_64 rng(splitmix64(seed));
  std::vector<int> points(static_cast<std::size_t>(d) * static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < points.size(); ++i) points[i] = static_cast<int>(i) / d;
  for (int attempt = 0; attempt < 100000; ++attempt) {
    std::shuffle(points.begin(), points.end(), rng);
    std::vector<Edge> edges;
    std::vector<std::pair<int, int>> seen;
    bool simple = true;
    for (std::size_t i = 0; i < points.size() && simple; i += 2) {
      int a = points[i], b = points[i + 1];
      if (a == b) simple = false;
      if (a > b) std::swap(a, b);
      seen.emplace_back(a, b);
      edges.push_back({a, b, 1.0});
    }
    if (!simple) continue;
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) continue;
    WeightedMultigraph g(n, std::move(edges));
    if (is_connected(g)) return g;
  }
  throw std::runtime_error("random_regular: pairing model kept failing");
}

}  // namespace families

VertexId z_vertex_id(long x) { return static_cast<VertexId>(x >= 0 ? 2 * x : -2 * x - 1); }

VertexId z2_vertex_id(long x, long y) {
  const long k = std::labs(x) + std::labs(y);
  if (k == 0) return 0;
  long t;
  if (x > 0 && y >= 0) t = y;
  else if (x <= 0 && y > 0) t = k - y + k;
  else if (x < 0 && y <= 0) t = -y + 2 * k;
  else t = x + 3 * k;
  return static_cast<VertexId>(z2_offset(k) + t);
}

std::vector<std::vector<VertexId>> spherical_tree_children(const TreeProfile& profile, int radius) {
  check_radius(radius);
  if (profile.branching.empty()) throw std::invalid_argument("tree profile needs a branching sequence");
  std::vector<std::vector<VertexId>> children(1);
  std::size_t lo = 0, hi = 1;
  for (int depth = 0; depth < radius; ++depth) {
    const auto b = profile.branching[std::min<std::size_t>(static_cast<std::size_t>(depth),
                                                           profile.branching.size() - 1)];
    for (std::size_t v = lo; v < hi; ++v) {
      for (int c = 0; c < b; ++c) {
        children[v].push_back(static_cast<VertexId>(children.size()));
        children.emplace_back();
        if (children.size() > 50'000'000) throw GraphError("spherical tree ball too large to expand");
      }
    }
    lo = hi;
    hi = children.size();
  }
  return children;
}

DistributionPtr spherical_tree(TreeProfile profile, std::string family, json params) {
  if (profile.branching.empty()) throw std::invalid_argument("tree profile needs a branching sequence");
  for (int b : profile.branching) {
    if (b < 0) throw std::invalid_argument("negative branching");
  }
  require_weight(profile.weight);
  if (profile.root_loop < 0.0) throw std::invalid_argument("root loop weight must be >= 0");
  json d = {{"family", std::move(family)}, {"params", std::move(params)}, {"seed", 0}};
  return std::make_shared<FixedDistribution>(std::make_shared<SphericalTreeSource>(std::move(profile)), d, false);
}

DistributionPtr lattice_generator(Lattice family, int tree_degree, double weight) {
  require_weight(weight);
  switch (family) {
    case Lattice::Z:
      return std::make_shared<FixedDistribution>(
          std::make_shared<ZSource>(weight),
          json{{"family", "Z"}, {"params", {{"weight", weight}}}, {"seed", 0}}, true);
    case Lattice::Z2:
      return std::make_shared<FixedDistribution>(
          std::make_shared<Z2Source>(weight),
          json{{"family", "Z2"}, {"params", {{"weight", weight}}}, {"seed", 0}}, true);
    case Lattice::regular_tree: {
      if (tree_degree < 3) throw std::invalid_argument("regular tree needs degree >= 3");
      TreeProfile p{{tree_degree, tree_degree - 1}, weight, 0.0};
      return std::make_shared<FixedDistribution>(
          std::make_shared<SphericalTreeSource>(p),
          json{{"family", "regular_tree"}, {"params", {{"degree", tree_degree}, {"weight", weight}}}, {"seed", 0}},
          true);
    }
  }
  throw std::invalid_argument("unknown lattice");
}

DistributionPtr pgw_sampler(double mean, PgwConditioning conditioning, std::uint64_t seed, int working_radius,
                            int max_attempts) {
  if (!(mean > 0.0)) throw std::invalid_argument("pgw mean must be positive");
  if (working_radius < 1 || max_attempts < 1) throw std::invalid_argument("pgw: bad working radius or attempts");
  return std::make_shared<PgwDistribution>(mean, conditioning, seed, working_radius, max_attempts);
}

RejectionReport pgw_rejections(const RootedDistribution& pgw, std::uint64_t samples) {
  const auto* d = dynamic_cast<const PgwDistribution*>(&pgw);
  if (d == nullptr) throw std::invalid_argument("pgw_rejections: not a pgw sampler");
  RejectionReport r;
  for (std::uint64_t i = 0; i < samples; ++i) {
    int rejected = 0;
    if (d->draw(i, rejected)) ++r.accepted;
    r.rejected += static_cast<std::uint64_t>(rejected);
  }
  return r;
}

int pgw_root_offspring(const RootedDistribution& pgw, std::uint64_t index) {
  const auto tree = std::dynamic_pointer_cast<const PgwTree>(pgw.sample(index));
  if (!tree) throw std::invalid_argument("pgw_root_offspring: not a pgw sampler");
  return tree->level_size(1);
}

std::uint64_t heavy_tail_draw(double u) {
  if (!(u > 0.0 && u <= 1.0)) throw std::invalid_argument("heavy_tail_draw: u must lie in (0, 1]");
  const double x = std::floor(1.0 / (u * u));
  if (x >= 1.8e19) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(x);
}

std::uint64_t heavy_tail_exponent(std::uint64_t seed, std::uint64_t index, long n) {
  return heavy_tail_draw(unit_uniform(derive_seed(derive_seed(seed, index), zigzag(n), 0x7ULL)));
}

DistributionPtr heavy_tail_Z(std::uint64_t seed) {
  json d = {{"family", "heavy_tail_Z"}, {"params", json::object()}, {"seed", seed}};
  return std::make_shared<KeyedZDistribution>(d, seed, [](std::uint64_t s, long n) {
    // edge (n, n+1): unit when n is even, bottleneck e^{-X_m} on (2m−1, 2m)
    if (n % 2 == 0) return std::vector<double>{1.0};
    const long m = (n + 1) / 2;
    const auto x = heavy_tail_draw(unit_uniform(derive_seed(s, zigzag(m), 0x7ULL)));
    return std::vector<double>{std::exp(-std::min(static_cast<double>(x), kHeavyTailExponentCap))};
  });
}

DistributionPtr random_weight_Z(RandomZParams p, std::uint64_t seed) {
  if (!(p.lo > 0.0) || !(p.hi >= p.lo) || p.boost < 0.0 || p.extra_edge_prob < 0.0 || p.extra_edge_prob > 1.0) {
    throw std::invalid_argument("random_weight_Z: need 0 < lo <= hi, boost >= 0, extra_edge_prob in [0,1]");
  }
  require_weight(p.extra_weight);
  json d = {{"family", "random_weight_Z"},
            {"params",
             {{"lo", p.lo},
              {"hi", p.hi},
              {"boost", p.boost},
              {"extra_edge_prob", p.extra_edge_prob},
              {"extra_weight", p.extra_weight}}},
            {"seed", seed}};
  return std::make_shared<KeyedZDistribution>(d, seed, [p](std::uint64_t s, long n) {
    const auto key = zigzag(n);
    std::vector<double> w{p.lo + (p.hi - p.lo) * unit_uniform(derive_seed(s, key, 1))};
    if (p.boost > 0.0) w[0] += p.boost * unit_uniform(derive_seed(s, key, 2));
    if (p.extra_edge_prob > 0.0 && unit_uniform(derive_seed(s, key, 3)) <= p.extra_edge_prob) {
      w.push_back(p.extra_weight);
    }
    return w;
  });
}

DistributionPtr scaled(DistributionPtr base, double factor) {
  require_weight(factor);
  return std::make_shared<ScaledDistribution>(std::move(base), factor);
}

DistributionPtr distribution_from_descriptor(const json& d) {
  const std::string family = d.at("family").get<std::string>();
  const json params = d.value("params", json::object());
  const auto seed = d.value("seed", std::uint64_t{0});
  const double weight = params.value("weight", 1.0);
  if (family == "Z") return lattice_generator(Lattice::Z, 3, weight);
  if (family == "Z2") return lattice_generator(Lattice::Z2, 3, weight);
  if (family == "regular_tree") return lattice_generator(Lattice::regular_tree, params.at("degree").get<int>(), weight);
  if (family == "spherical_tree") {
    TreeProfile p{params.at("branching").get<std::vector<int>>(), weight, params.value("root_loop", 0.0)};
    return spherical_tree(p, family, params);
  }
  if (family == "pgw") {
    const auto cond = params.value("conditioning", std::string("none"));
    if (cond != "none" && cond != "survival_attempted") throw std::invalid_argument("unknown pgw conditioning " + cond);
    return pgw_sampler(params.at("mean").get<double>(),
                       cond == "none" ? PgwConditioning::none : PgwConditioning::survival_attempted, seed,
                       params.value("working_radius", 16), params.value("max_attempts", 10000));
  }
  if (family == "heavy_tail_Z") return heavy_tail_Z(seed);
  if (family == "random_weight_Z") {
    RandomZParams p;
    p.lo = params.value("lo", p.lo);
    p.hi = params.value("hi", p.hi);
    p.boost = params.value("boost", p.boost);
    p.extra_edge_prob = params.value("extra_edge_prob", p.extra_edge_prob);
    p.extra_weight = params.value("extra_weight", p.extra_weight);
    return random_weight_Z(p, seed);
  }
  if (family == "scaled") {
    return scaled(distribution_from_descriptor(params.at("base")), params.at("factor").get<double>());
  }
  if (family == "torus") {
    const int n = params.at("n").get<int>();
    return uniform_root(families::torus(n), family, params, true, seed);
  }
  if (family == "cycle") {
    const int n = params.at("n").get<int>();
    return uniform_root(families::cycle(n), family, params, true, seed);
  }
  if (family == "complete") {
    const int n = params.at("n").get<int>();
    return uniform_root(families::complete(n), family, params, true, seed);
  }
  if (family == "path") {
    const int n = params.at("n").get<int>();
    return uniform_root(families::path(n), family, params, false, seed);
  }
  if (family == "random_regular") {
    const int dd = params.at("d").get<int>(), n = params.at("n").get<int>();
    return uniform_root(families::random_regular(dd, n, seed), family, params, false, seed);
  }
  if (family == "graph_file") {
    const RootedGraph g = load_graph(params.at("path").get<std::string>());
    return uniform_root(g.graph, family, params, false, seed);
  }
  throw std::invalid_argument("unknown distribution family '" + family + "'");
}

// ---- couplings --------------------------------------------------------------

DominationWitness witness_from_vertex_map(const RootedGraph& small, const RootedGraph& large,
                                          std::vector<VertexId> vertex_map) {
  if (vertex_map.size() != static_cast<std::size_t>(small.vertex_count())) {
    throw GraphError("vertex map size differs from the small graph's vertex count");
  }
  using Key = std::pair<VertexId, VertexId>;
  auto key = [](VertexId a, VertexId b) { return a < b ? Key{a, b} : Key{b, a}; };
  std::map<Key, std::vector<int>> large_edges, small_edges;
  for (std::size_t e = 0; e < large.graph.edge_count(); ++e) {
    const Edge& ed = large.graph.edge(e);
    large_edges[key(ed.u, ed.v)].push_back(static_cast<int>(e));
  }
  for (std::size_t e = 0; e < small.graph.edge_count(); ++e) {
    const Edge& ed = small.graph.edge(e);
    const auto u = vertex_map.at(static_cast<std::size_t>(ed.u));
    const auto v = vertex_map.at(static_cast<std::size_t>(ed.v));
    small_edges[key(u, v)].push_back(static_cast<int>(e));
  }
  std::vector<int> edge_map(small.graph.edge_count(), -1);
  for (auto& [k, se] : small_edges) {
    auto it = large_edges.find(k);
    if (it == large_edges.end()) continue;  // left unmapped: verification reports it
    auto& le = it->second;
    auto heavier = [](const WeightedMultigraph& g) {
      return [&g](int a, int b) { return g.edge(static_cast<std::size_t>(a)).weight > g.edge(static_cast<std::size_t>(b)).weight; };
    };
    std::stable_sort(se.begin(), se.end(), heavier(small.graph));
    std::stable_sort(le.begin(), le.end(), heavier(large.graph));
    for (std::size_t i = 0; i < se.size() && i < le.size(); ++i) edge_map[static_cast<std::size_t>(se[i])] = le[i];
  }
  return {small, large, std::move(vertex_map), std::move(edge_map)};
}

namespace {

std::vector<VertexId> identity_map(int n) {
  std::vector<VertexId> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), 0);
  return m;
}

CoupledPair same_vertices_pair(DistributionPtr high, DistributionPtr low, std::string label) {
  CoupledPair p;
  p.high = high;
  p.low = low;
  p.label = std::move(label);
  p.witness = [high, low](std::uint64_t i, int r) {
    const RootedGraph small = low->sample(i)->ball(r);
    const RootedGraph large = high->sample(i)->ball(r);
    return witness_from_vertex_map(small, large, identity_map(small.vertex_count()));
  };
  return p;
}

/// Image of the path from the root to `v` in a tree with children lists `a`
/// inside the tree with children lists `b`, child index preserved.
std::vector<VertexId> tree_map(const std::vector<std::vector<VertexId>>& a,
                               const std::vector<std::vector<VertexId>>& b) {
  std::vector<VertexId> m(a.size(), -1);
  m[0] = 0;
  for (std::size_t v = 0; v < a.size(); ++v) {
    const auto& ca = a[v];
    const auto& cb = b.at(static_cast<std::size_t>(m[v]));
    if (ca.size() > cb.size()) throw GraphError("tree embedding: branching does not fit");
    for (std::size_t i = 0; i < ca.size(); ++i) m[static_cast<std::size_t>(ca[i])] = cb[i];
  }
  return m;
}

}  // namespace

CoupledPair loop_counterexample_pair(int d) {
  if (d < 2) throw std::invalid_argument("loop counterexample needs d >= 2");
  json params = {{"d", d}};
  TreeProfile low{{1, 1, d, d - 1}, 1.0, 0.0};
  TreeProfile high = low;
  high.root_loop = 1.0;
  auto lowd = spherical_tree(low, "spherical_tree", {{"branching", low.branching}, {"root_loop", 0.0}});
  auto highd = spherical_tree(high, "spherical_tree", {{"branching", high.branching}, {"root_loop", 1.0}});
  return same_vertices_pair(highd, lowd, "loop_counterexample_d" + std::to_string(d));
}

CoupledPair coupled_weight_scaling(DistributionPtr base, double factor) {
  if (!(factor > 1.0) || !std::isfinite(factor)) throw std::invalid_argument("weight scaling factor must exceed 1");
  auto high = scaled(base, factor);
  std::ostringstream label;
  label << "scale_" << factor;
  return same_vertices_pair(high, base, label.str());
}

namespace {
void check_scales(double low, double high) {
  require_weight(low);
  require_weight(high);
  if (low > high) throw std::invalid_argument("coupling needs low_scale <= high_scale");
}
}  // namespace

CoupledPair coupled_z_in_z2(double low_scale, double high_scale) {
  check_scales(low_scale, high_scale);
  CoupledPair p;
  p.low = lattice_generator(Lattice::Z, 3, low_scale);
  p.high = lattice_generator(Lattice::Z2, 3, high_scale);
  p.label = "Z_in_Z2";
  p.witness = [lo = p.low, hi = p.high](std::uint64_t, int r) {
    const RootedGraph small = lo->sample(0)->ball(r);
    const RootedGraph large = hi->sample(0)->ball(r);
    std::vector<VertexId> m(static_cast<std::size_t>(small.vertex_count()));
    for (long x = -r; x <= r; ++x) m[static_cast<std::size_t>(z_vertex_id(x))] = z2_vertex_id(x, 0);
    return witness_from_vertex_map(small, large, std::move(m));
  };
  return p;
}

CoupledPair coupled_z_in_tree(int d, double low_scale, double high_scale) {
  check_scales(low_scale, high_scale);
  CoupledPair p;
  p.low = lattice_generator(Lattice::Z, 3, low_scale);
  p.high = lattice_generator(Lattice::regular_tree, d, high_scale);
  p.label = "Z_in_tree" + std::to_string(d);
  p.witness = [lo = p.low, hi = p.high, d](std::uint64_t, int r) {
    const RootedGraph small = lo->sample(0)->ball(r);
    const RootedGraph large = hi->sample(0)->ball(r);
    const auto ch = spherical_tree_children(TreeProfile{{d, d - 1}}, r);
    std::vector<VertexId> m(static_cast<std::size_t>(small.vertex_count()));
    m[0] = 0;
    VertexId right = 0, left = 0;
    for (long x = 1; x <= r; ++x) {
      // right ray through first children, left ray starts at the root's second child
      right = ch[static_cast<std::size_t>(right)][0];
      left = x == 1 ? ch[0][1] : ch[static_cast<std::size_t>(left)][0];
      m[static_cast<std::size_t>(z_vertex_id(x))] = right;
      m[static_cast<std::size_t>(z_vertex_id(-x))] = left;
    }
    return witness_from_vertex_map(small, large, std::move(m));
  };
  return p;
}

CoupledPair coupled_tree_in_tree(int d, int d_high, double low_scale, double high_scale) {
  check_scales(low_scale, high_scale);
  if (d_high < d) throw std::invalid_argument("tree embedding needs d <= d_high");
  CoupledPair p;
  p.low = lattice_generator(Lattice::regular_tree, d, low_scale);
  p.high = lattice_generator(Lattice::regular_tree, d_high, high_scale);
  p.label = "tree" + std::to_string(d) + "_in_tree" + std::to_string(d_high);
  p.witness = [lo = p.low, hi = p.high, d, d_high](std::uint64_t, int r) {
    const RootedGraph small = lo->sample(0)->ball(r);
    const RootedGraph large = hi->sample(0)->ball(r);
    auto m = tree_map(spherical_tree_children(TreeProfile{{d, d - 1}}, r),
                      spherical_tree_children(TreeProfile{{d_high, d_high - 1}}, r));
    return witness_from_vertex_map(small, large, std::move(m));
  };
  return p;
}

CoupledPair coupled_random_Z(RandomZParams low, RandomZParams high, std::uint64_t seed) {
  if (high.lo != low.lo || high.hi != low.hi) {
    throw std::invalid_argument("coupled_random_Z: both sides must share the base weight law");
  }
  auto lo = random_weight_Z(low, seed);
  auto hi = random_weight_Z(high, seed);
  return same_vertices_pair(hi, lo, "random_Z");
}

}  // namespace tel
