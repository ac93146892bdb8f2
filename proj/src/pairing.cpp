#include "indexmark/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "binary_io.hpp"
#include "indexmark/error.hpp"
#include "json.hpp"
#include "parallel.hpp"

namespace indexmark {
namespace {

using nlohmann::json;

struct MatchingOutcome {
  std::vector<IndexPair> pairs;
  std::vector<std::uint32_t> unmatched;
  double raw_weight = 0.0;
};

// Same arithmetic as cosine_similarity, without the per-call range checks.
double fast_cosine(const Codebook& cb, std::size_t i, std::size_t j) {
  const auto values = cb.values();
  const std::size_t d = cb.dim();
  const double* a = values.data() + i * d;
  const double* b = values.data() + j * d;
  double dot = 0.0;
  for (std::size_t k = 0; k < d; ++k) dot += a[k] * b[k];
  return std::clamp(dot / (cb.norm(i) * cb.norm(j)), -1.0, 1.0);
}

SimilarityGraph graph_from_pairs(const Codebook& cb, std::vector<IndexPair> pairs) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  SimilarityGraph g;
  g.n_vertices = cb.size();
  g.edges.reserve(pairs.size());
  for (const auto& p : pairs) g.edges.push_back({p.first, p.second, cosine_similarity(cb, p.first, p.second)});
  return g;
}

// Maximum-weight matching of maximum cardinality. Perfect graphs take the
// warm-started perfect solver; otherwise every edge is lifted by
// C = N (w_max - w_min) + 1 so that the plain maximum-weight solver must
// first maximise cardinality.
MatchingOutcome solve_matching(const SimilarityGraph& g) {
  MatchingOutcome out;
  const std::size_t n = g.n_vertices;
  if (n == 0) return out;

  double w_max = -std::numeric_limits<double>::infinity();
  double w_min = std::numeric_limits<double>::infinity();
  for (const auto& e : g.edges) {
    w_max = std::max(w_max, e.weight);
    w_min = std::min(w_min, e.weight);
  }
  std::vector<WeightedEdge> lifted(g.edges.begin(), g.edges.end());
  if (!lifted.empty()) {
    const double offset = static_cast<double>(n) * (w_max - w_min) + 1.0;
    for (auto& e : lifted) e.weight += offset;
  }

  std::vector<std::int64_t> mate;
  if (auto perfect = max_weight_perfect_matching(n, lifted)) {
    mate = std::move(*perfect);
  } else {
    mate = max_weight_matching(n, lifted, false);
  }

  for (const auto& e : g.edges) {
    if (mate[e.u] == static_cast<std::int64_t>(e.v) && mate[e.v] == static_cast<std::int64_t>(e.u)) {
      out.pairs.push_back({e.u, e.v});
      out.raw_weight += e.weight;
      mate[e.u] = mate[e.v] = -2;  // consumed; guards against parallel edges
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (mate[v] != -2) out.unmatched.push_back(static_cast<std::uint32_t>(v));
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

void check_graph(const SimilarityGraph& g) {
  for (const auto& e : g.edges) {
    if (e.u >= g.n_vertices || e.v >= g.n_vertices || e.u == e.v) {
      throw Error(ErrorCode::kInvalidArgument, "similarity graph: invalid edge");
    }
  }
}

}  // namespace

SimilarityGraph build_pruned_graph(const Codebook& cb, const PairingConfig& cfg) {
  if (cfg.top_k < 1) throw Error(ErrorCode::kInvalidArgument, "pairing: top_k must be >= 1");
  const std::size_t n = cb.size();
  const std::size_t k = std::min(cfg.top_k, n - 1);
  std::vector<IndexPair> selected(n * k);

  detail::parallel_for(n, [&](std::size_t v) {
    std::vector<std::pair<double, std::uint32_t>> candidates;
    candidates.reserve(n - 1);
    for (std::size_t u = 0; u < n; ++u) {
      if (u != v) candidates.emplace_back(fast_cosine(cb, v, u), static_cast<std::uint32_t>(u));
    }
    auto better = [](const auto& a, const auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    };
    std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     candidates.end(), better);
    for (std::size_t t = 0; t < k; ++t) {
      const auto u = candidates[t].second;
      const auto self = static_cast<std::uint32_t>(v);
      selected[v * k + t] = {std::min(self, u), std::max(self, u)};
    }
  });
  return graph_from_pairs(cb, std::move(selected));
}

SimilarityGraph build_complete_graph(const Codebook& cb) {
  std::vector<IndexPair> all;
  const auto n = static_cast<std::uint32_t>(cb.size());
  all.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) all.push_back({i, j});
  }
  return graph_from_pairs(cb, std::move(all));
}

PairSet blossom_mwpm(const SimilarityGraph& g) {
  check_graph(g);
  if (g.n_vertices % 2 != 0) throw NoPerfectMatchingError();
  auto outcome = solve_matching(g);
  if (!outcome.unmatched.empty()) throw NoPerfectMatchingError(std::move(outcome.unmatched));
  PairSet ps;
  ps.n = g.n_vertices;
  ps.pairs = std::move(outcome.pairs);
  ps.total_weight = outcome.raw_weight;
  return ps;
}

PairSet brute_force_mwpm(const SimilarityGraph& g) {
  check_graph(g);
  const std::size_t n = g.n_vertices;
  if (n > kBruteForceMaxVertices) {
    throw Error(ErrorCode::kGraphTooLarge, "brute_force_mwpm: at most 14 vertices supported");
  }
  if (n % 2 != 0) throw NoPerfectMatchingError();

  constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> weight(n * n, kAbsent);
  for (const auto& e : g.edges) {
    double& w = weight[e.u * n + e.v];
    w = std::isnan(w) ? e.weight : std::max(w, e.weight);
    weight[e.v * n + e.u] = w;
  }

  std::vector<bool> used(n, false);
  std::vector<IndexPair> current;
  std::optional<std::vector<IndexPair>> best;
  double best_weight = -std::numeric_limits<double>::infinity();

  // Pairs are generated smallest-free-vertex first with ascending partners,
  // so optima are met in lexicographic order; only strict improvements win.
  std::function<void(std::size_t, double)> search = [&](std::size_t from, double acc) {
    while (from < n && used[from]) ++from;
    if (from == n) {
      if (!best || acc > best_weight + 1e-12 * (1.0 + std::fabs(best_weight))) {
        best = current;
        best_weight = acc;
      }
      return;
    }
    used[from] = true;
    for (std::size_t to = from + 1; to < n; ++to) {
      const double w = weight[from * n + to];
      if (used[to] || std::isnan(w)) continue;
      used[to] = true;
      current.push_back({static_cast<std::uint32_t>(from), static_cast<std::uint32_t>(to)});
      search(from + 1, acc + w);
      current.pop_back();
      used[to] = false;
    }
    used[from] = false;
  };
  search(0, 0.0);

  if (!best) throw NoPerfectMatchingError();
  PairSet ps;
  ps.n = n;
  ps.pairs = std::move(*best);
  ps.total_weight = best_weight;
  return ps;
}

PairSet pair_codebook(const Codebook& cb, const PairingConfig& cfg) {
  const auto graph = build_pruned_graph(cb, cfg);
  auto outcome = solve_matching(graph);

  PairSet ps;
  ps.n = cb.size();
  ps.pairs = std::move(outcome.pairs);
  if (!outcome.unmatched.empty()) {
    if (cfg.fallback == FallbackPolicy::kError) throw NoPerfectMatchingError(std::move(outcome.unmatched));

    // Greedy completion over the leftover vertices by descending similarity.
    const auto& left = outcome.unmatched;
    std::vector<std::pair<double, IndexPair>> candidates;
    for (std::size_t a = 0; a < left.size(); ++a) {
      for (std::size_t b = a + 1; b < left.size(); ++b) {
        candidates.emplace_back(cosine_similarity(cb, left[a], left[b]), IndexPair{left[a], left[b]});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) {
      return x.first > y.first || (x.first == y.first && x.second < y.second);
    });
    std::vector<bool> taken(cb.size(), false);
    for (const auto& [sim, pair] : candidates) {
      if (taken[pair.first] || taken[pair.second]) continue;
      taken[pair.first] = taken[pair.second] = true;
      ps.pairs.push_back(pair);
      ++ps.fallback_pairs;
    }
    std::sort(ps.pairs.begin(), ps.pairs.end());
  }
  ps.total_weight = pair_weight_sum(cb, ps.pairs);
  validate_pairset(ps);
  return ps;
}

double pair_weight_sum(const Codebook& cb, const std::vector<IndexPair>& pairs) {
  double total = 0.0;
  for (const auto& p : pairs) total += cosine_similarity(cb, p.first, p.second);
  return total;
}

void validate_pairset(const PairSet& ps) {
  if (ps.n % 2 != 0 || ps.pairs.size() * 2 != ps.n) {
    throw Error(ErrorCode::kInvalidArgument, "pair set: expected n/2 pairs over an even n");
  }
  std::vector<bool> seen(ps.n, false);
  for (std::size_t k = 0; k < ps.pairs.size(); ++k) {
    const auto& p = ps.pairs[k];
    if (p.first >= p.second || p.second >= ps.n) {
      throw Error(ErrorCode::kInvalidArgument, "pair set: pairs must satisfy i < j < n");
    }
    if (k > 0 && !(ps.pairs[k - 1].first < p.first)) {
      throw Error(ErrorCode::kInvalidArgument, "pair set: pairs must be sorted by first index");
    }
    if (seen[p.first] || seen[p.second]) {
      throw Error(ErrorCode::kInvalidArgument, "pair set: index appears in two pairs");
    }
    seen[p.first] = seen[p.second] = true;
  }
}

std::string pairset_to_json(const PairSet& ps) {
  json pairs = json::array();
  for (const auto& p : ps.pairs) pairs.push_back({p.first, p.second});
  const json doc = {{"version", 1},
                    {"n", ps.n},
                    {"pairs", std::move(pairs)},
                    {"total_weight", ps.total_weight},
                    {"fallback_pairs", ps.fallback_pairs}};
  return doc.dump();
}

PairSet pairset_from_json(const std::string& text) {
  PairSet ps;
  try {
    const json doc = json::parse(text);
    if (doc.at("version").get<int>() != 1) throw Error(ErrorCode::kBadVersion, "pairing: unsupported version");
    ps.n = doc.at("n").get<std::size_t>();
    for (const auto& p : doc.at("pairs")) {
      if (!p.is_array() || p.size() != 2) throw Error(ErrorCode::kParse, "pairing: each pair needs two indices");
      ps.pairs.push_back({p[0].get<std::uint32_t>(), p[1].get<std::uint32_t>()});
    }
    ps.total_weight = doc.at("total_weight").get<double>();
    ps.fallback_pairs = doc.at("fallback_pairs").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("pairing: ") + e.what());
  }
  validate_pairset(ps);
  return ps;
}

void save_pairing(const PairSet& ps, const std::filesystem::path& path) {
  detail::write_text(path, pairset_to_json(ps) + "\n");
}

PairSet load_pairing(const std::filesystem::path& path) { return pairset_from_json(detail::read_text(path)); }

}  // namespace indexmark
