#pragma once

#include <gmpxx.h>

#include <optional>
#include <stdexcept>

#include "tel/graph.hpp"

namespace tel {

/// Weighted spanning-tree sum τ(G) = Σ_T Π_{e∈T} w(e).
struct TreeCount {
  std::optional<mpq_class> exact;
  double log_value = 0.0;
};

class DisconnectedGraph : public GraphError {
 public:
  DisconnectedGraph() : GraphError("graph is disconnected: spanning-tree count is 0") {}
};

inline constexpr int kExactTreeCountLimit = 400;

struct TauOptions {
  bool exact = false;         ///< also return the exact value (reduced dimension ≤ 400)
  VertexId removed_vertex = 0;  ///< cofactor used by the matrix-tree theorem
};

/// Matrix-tree theorem on the reduced Laplacian. Loops never contribute.
TreeCount tau(const WeightedMultigraph& g, TauOptions options = {});

/// Sum over all (|V|−1)-edge subsets that form spanning trees; parallel edges
/// are distinct. Refuses more than 24 edges.
mpq_class tau_bruteforce(const WeightedMultigraph& g);

}  // namespace tel
