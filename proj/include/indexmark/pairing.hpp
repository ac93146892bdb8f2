#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "indexmark/blossom.hpp"
#include "indexmark/codebook.hpp"

namespace indexmark {

/// Undirected graph over codebook indices. Edges satisfy u < v, are unique, and
/// are sorted by (u, v); weights are raw cosine similarities.
struct SimilarityGraph {
  std::size_t n_vertices = 0;
  std::vector<WeightedEdge> edges;
};

struct IndexPair {
  std::uint32_t first = 0;  // always < second
  std::uint32_t second = 0;

  friend bool operator==(const IndexPair&, const IndexPair&) = default;
  friend auto operator<=>(const IndexPair&, const IndexPair&) = default;
};

/// A perfect matching of the codebook indices into N/2 disjoint pairs.
struct PairSet {
  std::size_t n = 0;
  std::vector<IndexPair> pairs;  // sorted by first
  double total_weight = 0.0;
  std::size_t fallback_pairs = 0;  // pairs completed outside the pruned graph

  friend bool operator==(const PairSet&, const PairSet&) = default;
};

enum class FallbackPolicy { kGreedyComplete, kError };

struct PairingConfig {
  std::size_t top_k = 10;
  FallbackPolicy fallback = FallbackPolicy::kGreedyComplete;
};

/// Keeps, for every vertex, its top_k most similar partners (ties to the
/// smaller index). An edge survives when either endpoint selects it.
[[nodiscard]] SimilarityGraph build_pruned_graph(const Codebook& cb, const PairingConfig& cfg);

/// Complete graph over all codebook indices.
[[nodiscard]] SimilarityGraph build_complete_graph(const Codebook& cb);

/// Maximum-weight perfect matching by the blossom method. Throws
/// NoPerfectMatchingError when the graph has none.
[[nodiscard]] PairSet blossom_mwpm(const SimilarityGraph& g);

/// Exhaustive oracle for graphs of at most 14 vertices. Among equal-weight
/// optima the lexicographically smallest pair list wins.
[[nodiscard]] PairSet brute_force_mwpm(const SimilarityGraph& g);

inline constexpr std::size_t kBruteForceMaxVertices = 14;

/// Pairs the whole codebook: pruned graph, blossom matching, and greedy
/// completion when the pruned graph has no perfect matching.
[[nodiscard]] PairSet pair_codebook(const Codebook& cb, const PairingConfig& cfg);

/// Sum of cosine similarities over the pairs, recomputed from the codebook.
[[nodiscard]] double pair_weight_sum(const Codebook& cb, const std::vector<IndexPair>& pairs);

/// Throws unless the pairs are disjoint, ordered, and cover 0..n-1 exactly once.
void validate_pairset(const PairSet& ps);

[[nodiscard]] std::string pairset_to_json(const PairSet& ps);
[[nodiscard]] PairSet pairset_from_json(const std::string& text);
void save_pairing(const PairSet& ps, const std::filesystem::path& path);
[[nodiscard]] PairSet load_pairing(const std::filesystem::path& path);

}  // namespace indexmark
