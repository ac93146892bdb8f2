#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace indexmark {

struct WeightedEdge {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  double weight = 0.0;
};

/// Primal-dual maximum-weight matching on a general graph.
///
/// Alternating trees are grown from every free vertex at once; odd cycles are
/// shrunk into blossoms, augmenting paths flip the matching, and the vertex and
/// blossom duals are adjusted by the smallest slack whenever the search stalls.
/// Each edge's slack `y(u) + y(v) - w(u,v)` stays non-negative and matched edges
/// stay tight, so the final matching is optimal.
///
/// Returns `mate[v]` for every vertex, or -1 when `v` is left unmatched. Edges
/// must have `u != v`; parallel edges are tolerated.
///
/// With `max_cardinality` set, the result is the heaviest matching among those
/// of maximum cardinality.
[[nodiscard]] std::vector<std::int64_t> max_weight_matching(std::size_t n_vertices,
                                                            std::span<const WeightedEdge> edges,
                                                            bool max_cardinality = false);

/// Maximum-weight perfect matching with the same engine, dual-feasible from a
/// greedy warm start. Returns nullopt when the graph has no perfect matching.
[[nodiscard]] std::optional<std::vector<std::int64_t>> max_weight_perfect_matching(
    std::size_t n_vertices, std::span<const WeightedEdge> edges);

}  // namespace indexmark
