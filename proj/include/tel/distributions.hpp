#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tel/graph.hpp"

namespace tel {

/// A ball under the symmetries of the root: one vertex per orbit, orbit-to-orbit
/// conductances summed. Edges inside an orbit become loops of twice their
/// weight so the lumped walk keeps its holding probability. Root-local return
/// probabilities and resistances agree with the full ball.
struct LumpedBall {
  RootedGraph graph;
  std::vector<double> orbit_size;  ///< empty: every orbit is a single vertex
};

/// One rooted graph, finite or infinite, exposed through its balls. Balls are
/// nested: ball(r) is the induced subgraph of ball(r+1) on its first vertices.
class BallSource {
 public:
  virtual ~BallSource() = default;
  [[nodiscard]] virtual RootedGraph ball(int radius) const = 0;
  [[nodiscard]] virtual LumpedBall lumped_ball(int radius) const { return {ball(radius), {}}; }
  [[nodiscard]] virtual bool is_finite() const { return false; }
};

enum class DistributionKind { finite_uniform_root, fixed_generator, sampler };

std::string to_string(DistributionKind kind);

/// Law of a random rooted network. Samplers derive an independent stream per
/// sample index from the seed, so draws are reproducible and order-free.
class RootedDistribution {
 public:
  virtual ~RootedDistribution() = default;
  [[nodiscard]] virtual DistributionKind kind() const = 0;
  /// {"family", "params", "seed"}; enough to rebuild the distribution.
  [[nodiscard]] virtual nlohmann::json descriptor() const = 0;
  [[nodiscard]] virtual std::shared_ptr<const BallSource> sample(std::uint64_t index) const = 0;
  /// Number of equally likely outcomes for exact averaging, when finite.
  [[nodiscard]] virtual std::optional<std::uint64_t> outcome_count() const { return std::nullopt; }
  [[nodiscard]] virtual std::shared_ptr<const BallSource> outcome(std::uint64_t i) const { return sample(i); }
  /// All roots look alike; a single outcome represents the law.
  [[nodiscard]] virtual bool vertex_transitive() const { return false; }
  [[nodiscard]] virtual std::uint64_t seed() const { return 0; }
};

using DistributionPtr = std::shared_ptr<const RootedDistribution>;

// ---- stream derivation ------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x);
/// Deterministic seed for (seed, a, b), independent across distinct keys.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);
/// Uniform in (0, 1] from a key.
double unit_uniform(std::uint64_t key);

// ---- finite graphs ----------------------------------------------------------

/// Uniformly rooted finite graph U(G).
DistributionPtr uniform_root(WeightedMultigraph g, std::string name = "graph",
                             nlohmann::json params = nlohmann::json::object(), bool vertex_transitive = false,
                             std::uint64_t seed = 0);

namespace families {
WeightedMultigraph torus(int n);  ///< n×n discrete torus, vertex (i, j) ↦ i·n + j
WeightedMultigraph cycle(int n);
WeightedMultigraph complete(int n);
WeightedMultigraph path(int n);
/// Uniform simple d-regular graph on n vertices (pairing model with restarts,
/// conditioned on connectivity).
WeightedMultigraph random_regular(int d, int n, std::uint64_t seed);
}  // namespace families

// ---- fixed infinite graphs --------------------------------------------------

enum class Lattice { Z, Z2, regular_tree };

/// Nested-ball generator for ℤ, ℤ² or the d-regular tree, all weights `weight`.
DistributionPtr lattice_generator(Lattice family, int tree_degree = 3, double weight = 1.0);

/// Vertex id of coordinate x in every ℤ ball (0, −1, 1, −2, 2, ...).
VertexId z_vertex_id(long x);
/// Vertex id of (x, y) in every ℤ² ball (layered by |x| + |y|).
VertexId z2_vertex_id(long x, long y);

/// Spherically symmetric tree: the root has branching[0] children, a vertex at
/// depth j ≥ 1 has branching[min(j, size−1)] children. Optional unit-free loop
/// of weight `root_loop` at the root.
struct TreeProfile {
  std::vector<int> branching;
  double weight = 1.0;
  double root_loop = 0.0;
};

DistributionPtr spherical_tree(TreeProfile profile, std::string family, nlohmann::json params);

/// Children lists of the ball of radius r of a spherical tree (BFS ids).
std::vector<std::vector<VertexId>> spherical_tree_children(const TreeProfile& profile, int radius);

// ---- samplers ---------------------------------------------------------------

enum class PgwConditioning { none, survival_attempted };

/// Poisson–Galton–Watson tree, every vertex (root included) with Poisson(mean)
/// children. survival_attempted rejects draws extinct before `working_radius`
/// (finite-depth approximation of conditioning on survival).
DistributionPtr pgw_sampler(double mean, PgwConditioning conditioning, std::uint64_t seed,
                            int working_radius = 16, int max_attempts = 10000);

/// Statistics of the rejection step of a conditioned PGW sampler.
struct RejectionReport {
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  [[nodiscard]] double rate() const {
    const auto total = accepted + rejected;
    return total == 0 ? 0.0 : static_cast<double>(rejected) / static_cast<double>(total);
  }
};
RejectionReport pgw_rejections(const RootedDistribution& pgw, std::uint64_t samples);
/// Offspring count of the root of sample i.
int pgw_root_offspring(const RootedDistribution& pgw, std::uint64_t index);

/// Integer X with P[X ≥ m] = 1/√m for m ≥ 1: X = ⌊U^{-2}⌋, U uniform on (0, 1].
std::uint64_t heavy_tail_draw(double u);
/// Largest exponent used for the weight e^{-X} (keeps it a normal double);
/// walks of any feasible length cannot cross such an edge anyway.
inline constexpr double kHeavyTailExponentCap = 700.0;

/// ℤ rooted at 0: weight 1 on (2n, 2n+1), weight e^{-X_n} on (2n−1, 2n).
DistributionPtr heavy_tail_Z(std::uint64_t seed);
/// The X_n of sample `index` (n may be negative).
std::uint64_t heavy_tail_exponent(std::uint64_t seed, std::uint64_t index, long n);

/// ℤ with i.i.d. uniform[lo, hi] edge weights. `boost` > 0 adds an independent
/// uniform[0, boost] increment to every weight; `extra_edge_prob` > 0 doubles
/// each edge independently with a parallel edge of weight `extra_weight`.
/// The same seed yields the same base weights in every variant.
struct RandomZParams {
  double lo = 0.5;
  double hi = 1.5;
  double boost = 0.0;
  double extra_edge_prob = 0.0;
  double extra_weight = 1.0;
};
DistributionPtr random_weight_Z(RandomZParams params, std::uint64_t seed);

/// Every weight of every sample multiplied by `factor`.
DistributionPtr scaled(DistributionPtr base, double factor);

/// Rebuild a distribution from its descriptor.
DistributionPtr distribution_from_descriptor(const nlohmann::json& descriptor);

// ---- couplings --------------------------------------------------------------

/// Coupling of two laws with a per-sample, per-radius domination witness
/// (high dominates low).
struct CoupledPair {
  DistributionPtr high;
  DistributionPtr low;
  std::function<DominationWitness(std::uint64_t sample, int radius)> witness;
  std::string label;
};

/// Witness from a vertex map: edges between each pair of image endpoints are
/// matched heaviest to heaviest. Verification is left to verify_domination.
DominationWitness witness_from_vertex_map(const RootedGraph& small, const RootedGraph& large,
                                          std::vector<VertexId> vertex_map);

CoupledPair loop_counterexample_pair(int d = 20);
CoupledPair coupled_weight_scaling(DistributionPtr base, double factor);
/// ℤ ⊂ ℤ² along the x-axis (weights scaled by low_scale ≤ high_scale).
CoupledPair coupled_z_in_z2(double low_scale = 1.0, double high_scale = 1.0);
/// ℤ ⊂ d-regular tree along a bi-infinite geodesic through the root.
CoupledPair coupled_z_in_tree(int d, double low_scale = 1.0, double high_scale = 1.0);
/// d-regular tree ⊂ d'-regular tree, d < d'.
CoupledPair coupled_tree_in_tree(int d, int d_high, double low_scale = 1.0, double high_scale = 1.0);
/// Random-weight ℤ against the same weights boosted, or with parallel edges added.
CoupledPair coupled_random_Z(RandomZParams low, RandomZParams high, std::uint64_t seed);

}  // namespace tel
