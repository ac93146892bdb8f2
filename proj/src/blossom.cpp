#include "indexmark/blossom.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <stdexcept>

namespace indexmark {
namespace {

// Duals are stored doubled so every update stays in the edge-weight lattice:
// slack(k) = dual[i] + dual[j] - 2 w(k). Vertex ids are [0, n), blossom ids are
// [n, 2n). Endpoint p of edge k is 2k (the u side) or 2k + 1 (the v side), so
// p ^ 1 is the opposite endpoint and p / 2 the edge.
class Matcher {
 public:
  enum class Mode { kMaxWeight, kMaxCardinality, kPerfect };

  Matcher(std::size_t n, std::span<const WeightedEdge> edges, Mode mode)
      : n_(static_cast<int>(n)), m_(static_cast<int>(edges.size())), mode_(mode), edges_(edges) {
    endpoint_.resize(2 * static_cast<std::size_t>(m_));
    std::vector<int> degree(n_, 0);
    for (int k = 0; k < m_; ++k) {
      const auto& e = edges_[k];
      if (e.u >= n || e.v >= n || e.u == e.v) {
        throw std::invalid_argument("max_weight_matching: invalid edge");
      }
      endpoint_[2 * k] = static_cast<int>(e.u);
      endpoint_[2 * k + 1] = static_cast<int>(e.v);
      ++degree[e.u];
      ++degree[e.v];
    }
    neighbor_offset_.assign(n_ + 1, 0);
    for (int v = 0; v < n_; ++v) neighbor_offset_[v + 1] = neighbor_offset_[v] + degree[v];
    neighbor_end_.resize(neighbor_offset_[n_]);
    std::vector<int> fill(neighbor_offset_.begin(), neighbor_offset_.end() - 1);
    for (int k = 0; k < m_; ++k) {
      neighbor_end_[fill[endpoint_[2 * k]]++] = 2 * k + 1;
      neighbor_end_[fill[endpoint_[2 * k + 1]]++] = 2 * k;
    }

    double max_weight = 0.0;
    for (const auto& e : edges_) max_weight = std::max(max_weight, e.weight);

    const std::size_t nb = 2 * static_cast<std::size_t>(n_);
    mate_.assign(n_, -1);
    label_.assign(nb, 0);
    label_end_.assign(nb, -1);
    in_blossom_.resize(n_);
    for (int v = 0; v < n_; ++v) in_blossom_[v] = v;
    blossom_parent_.assign(nb, -1);
    blossom_childs_.assign(nb, {});
    blossom_endps_.assign(nb, {});
    blossom_base_.assign(nb, -1);
    for (int v = 0; v < n_; ++v) blossom_base_[v] = v;
    best_edge_.assign(nb, -1);
    blossom_best_edges_.assign(nb, {});
    has_best_list_.assign(nb, 0);
    for (int b = 2 * n_ - 1; b >= n_; --b) unused_blossoms_.push_back(b);
    dual_.assign(nb, 0.0);
    for (int v = 0; v < n_; ++v) dual_[v] = max_weight;
    allow_edge_.assign(m_, 0);
    best_edge_to_.assign(nb, -1);
    if (mode_ == Mode::kPerfect) jump_start();
  }

  std::vector<std::int64_t> solve() {
    for (int stage = 0; stage < n_; ++stage) {
      if (mode_ == Mode::kPerfect &&
          std::find(mate_.begin(), mate_.end(), -1) == mate_.end()) {
        break;
      }
      std::fill(label_.begin(), label_.end(), 0);
      std::fill(best_edge_.begin(), best_edge_.end(), -1);
      for (int b = n_; b < 2 * n_; ++b) {
        blossom_best_edges_[b].clear();
        has_best_list_[b] = 0;
      }
      std::fill(allow_edge_.begin(), allow_edge_.end(), 0);
      queue_.clear();

      for (int v = 0; v < n_; ++v) {
        if (mate_[v] == -1 && label_[in_blossom_[v]] == 0) assign_label(v, 1, -1);
      }

      bool augmented = false;
      while (true) {
        augmented = scan_queue();
        if (augmented) break;
        if (!adjust_duals()) break;
      }
      if (!augmented) break;

      // End of stage: expand S-blossoms whose dual reached zero.
      for (int b = n_; b < 2 * n_; ++b) {
        if (blossom_parent_[b] == -1 && blossom_base_[b] >= 0 && label_[b] == 1 &&
            dual_[b] == 0.0) {
          expand_blossom(b, true);
        }
      }
    }

    std::vector<std::int64_t> result(n_, -1);
    for (int v = 0; v < n_; ++v) {
      if (mate_[v] >= 0) result[v] = endpoint_[mate_[v]];
    }
    return result;
  }

 private:
  double slack(int k) const {
    return dual_[endpoint_[2 * k]] + dual_[endpoint_[2 * k + 1]] - 2.0 * edges_[k].weight;
  }

  template <typename F>
  void for_each_leaf(int b, F&& fn) {
    if (b < n_) {
      fn(b);
      return;
    }
    leaf_stack_.clear();
    leaf_stack_.push_back(b);
    while (!leaf_stack_.empty()) {
      const int t = leaf_stack_.back();
      leaf_stack_.pop_back();
      if (t < n_) {
        fn(t);
      } else {
        for (int c : blossom_childs_[t]) leaf_stack_.push_back(c);
      }
    }
  }

  std::vector<int> leaves(int b) {
    std::vector<int> out;
    for_each_leaf(b, [&](int v) { out.push_back(v); });
    return out;
  }

  static int wrap(int j, int len) { return ((j % len) + len) % len; }

  void assign_label(int w, int t, int p) {
    while (true) {
      const int b = in_blossom_[w];
      assert(label_[w] == 0 && label_[b] == 0);
      label_[w] = label_[b] = t;
      label_end_[w] = label_end_[b] = p;
      best_edge_[w] = best_edge_[b] = -1;
      if (t == 1) {
        for_each_leaf(b, [&](int v) { queue_.push_back(v); });
        return;
      }
      // T-blossom: its base is matched; label the mate side S.
      const int base = blossom_base_[b];
      assert(mate_[base] >= 0);
      w = endpoint_[mate_[base]];
      t = 1;
      p = mate_[base] ^ 1;
    }
  }

  // Trace back from v and w to either a common ancestor (returns the base of
  // the new blossom) or two distinct roots (returns -1: augmenting path).
  int scan_blossom(int v, int w) {
    path_.clear();
    int base = -1;
    while (v != -1 || w != -1) {
      int b = in_blossom_[v];
      if (label_[b] & 4) {
        base = blossom_base_[b];
        break;
      }
      assert(label_[b] == 1);
      path_.push_back(b);
      label_[b] = 5;
      if (label_end_[b] == -1) {
        v = -1;
      } else {
        v = endpoint_[label_end_[b]];
        b = in_blossom_[v];
        assert(label_[b] == 2);
        v = endpoint_[label_end_[b]];
      }
      if (w != -1) std::swap(v, w);
    }
    for (int b : path_) label_[b] = 1;
    return base;
  }

  void add_blossom(int base, int k) {
    int v = endpoint_[2 * k];
    int w = endpoint_[2 * k + 1];
    const int bb = in_blossom_[base];
    int bv = in_blossom_[v];
    int bw = in_blossom_[w];
    const int b = unused_blossoms_.back();
    unused_blossoms_.pop_back();
    blossom_base_[b] = base;
    blossom_parent_[b] = -1;
    blossom_parent_[bb] = b;

    auto& childs = blossom_childs_[b];
    auto& endps = blossom_endps_[b];
    childs.clear();
    endps.clear();
    while (bv != bb) {
      blossom_parent_[bv] = b;
      childs.push_back(bv);
      endps.push_back(label_end_[bv]);
      v = endpoint_[label_end_[bv]];
      bv = in_blossom_[v];
    }
    childs.push_back(bb);
    std::reverse(childs.begin(), childs.end());
    std::reverse(endps.begin(), endps.end());
    endps.push_back(2 * k);
    while (bw != bb) {
      blossom_parent_[bw] = b;
      childs.push_back(bw);
      endps.push_back(label_end_[bw] ^ 1);
      w = endpoint_[label_end_[bw]];
      bw = in_blossom_[w];
    }

    label_[b] = 1;
    label_end_[b] = label_end_[bb];
    dual_[b] = 0.0;
    for_each_leaf(b, [&](int leaf) {
      if (label_[in_blossom_[leaf]] == 2) queue_.push_back(leaf);
      in_blossom_[leaf] = b;
    });

    // Least-slack edge from the new blossom to every other S-blossom.
    touched_.clear();
    auto consider = [&](int edge) {
      int i = endpoint_[2 * edge];
      int j = endpoint_[2 * edge + 1];
      if (in_blossom_[j] == b) std::swap(i, j);
      const int bj = in_blossom_[j];
      if (bj != b && label_[bj] == 1) {
        if (best_edge_to_[bj] == -1) {
          best_edge_to_[bj] = edge;
          touched_.push_back(bj);
        } else if (slack(edge) < slack(best_edge_to_[bj])) {
          best_edge_to_[bj] = edge;
        }
      }
    };
    for (int child : childs) {
      if (!has_best_list_[child]) {
        for_each_leaf(child, [&](int leaf) {
          for (int q = neighbor_offset_[leaf]; q < neighbor_offset_[leaf + 1]; ++q) {
            consider(neighbor_end_[q] / 2);
          }
        });
      } else {
        for (int edge : blossom_best_edges_[child]) consider(edge);
      }
      blossom_best_edges_[child].clear();
      has_best_list_[child] = 0;
      best_edge_[child] = -1;
    }
    std::sort(touched_.begin(), touched_.end());
    auto& best_list = blossom_best_edges_[b];
    best_list.clear();
    for (int bj : touched_) {
      best_list.push_back(best_edge_to_[bj]);
      best_edge_to_[bj] = -1;
    }
    has_best_list_[b] = 1;
    best_edge_[b] = -1;
    for (int edge : best_list) {
      if (best_edge_[b] == -1 || slack(edge) < slack(best_edge_[b])) best_edge_[b] = edge;
    }
  }

  void expand_blossom(int b, bool end_stage) {
    const std::vector<int> childs = blossom_childs_[b];
    for (int s : childs) {
      blossom_parent_[s] = -1;
      if (s < n_) {
        in_blossom_[s] = s;
      } else if (end_stage && dual_[s] == 0.0) {
        expand_blossom(s, end_stage);
      } else {
        for_each_leaf(s, [&](int leaf) { in_blossom_[leaf] = s; });
      }
    }

    if (!end_stage && label_[b] == 2) {
      // Relabel the even-length half of the blossom cycle that stays in the tree.
      const auto& endps = blossom_endps_[b];
      const int len = static_cast<int>(childs.size());
      const int entry_child = in_blossom_[endpoint_[label_end_[b] ^ 1]];
      int j = static_cast<int>(std::find(childs.begin(), childs.end(), entry_child) - childs.begin());
      int jstep;
      int endptrick;
      if (j & 1) {
        j -= len;
        jstep = 1;
        endptrick = 0;
      } else {
        jstep = -1;
        endptrick = 1;
      }
      int p = label_end_[b];
      while (j != 0) {
        label_[endpoint_[p ^ 1]] = 0;
        label_[endpoint_[endps[wrap(j - endptrick, len)] ^ endptrick ^ 1]] = 0;
        assign_label(endpoint_[p ^ 1], 2, p);
        allow_edge_[endps[wrap(j - endptrick, len)] / 2] = 1;
        j += jstep;
        p = endps[wrap(j - endptrick, len)] ^ endptrick;
        allow_edge_[p / 2] = 1;
        j += jstep;
      }
      int bv = childs[wrap(j, len)];
      label_[endpoint_[p ^ 1]] = label_[bv] = 2;
      label_end_[endpoint_[p ^ 1]] = label_end_[bv] = p;
      best_edge_[bv] = -1;
      j += jstep;
      while (childs[wrap(j, len)] != entry_child) {
        bv = childs[wrap(j, len)];
        if (label_[bv] == 1) {
          j += jstep;
          continue;
        }
        int reached = -1;
        for_each_leaf(bv, [&](int leaf) {
          if (reached == -1 && label_[leaf] != 0) reached = leaf;
        });
        if (reached != -1) {
          assert(label_[reached] == 2);
          assert(in_blossom_[reached] == bv);
          label_[reached] = 0;
          label_[endpoint_[mate_[blossom_base_[bv]]]] = 0;
          assign_label(reached, 2, label_end_[reached]);
        }
        j += jstep;
      }
    }

    label_[b] = label_end_[b] = -1;
    blossom_childs_[b].clear();
    blossom_endps_[b].clear();
    blossom_base_[b] = -1;
    blossom_best_edges_[b].clear();
    has_best_list_[b] = 0;
    best_edge_[b] = -1;
    unused_blossoms_.push_back(b);
  }

  // Swap matched/unmatched edges along the even path from v to the base of b,
  // rotating b so that v becomes its new base.
  void augment_blossom(int b, int v) {
    int t = v;
    while (blossom_parent_[t] != b) t = blossom_parent_[t];
    if (t >= n_) augment_blossom(t, v);

    auto& childs = blossom_childs_[b];
    auto& endps = blossom_endps_[b];
    const int len = static_cast<int>(childs.size());
    const int i = static_cast<int>(std::find(childs.begin(), childs.end(), t) - childs.begin());
    int j = i;
    int jstep;
    int endptrick;
    if (i & 1) {
      j -= len;
      jstep = 1;
      endptrick = 0;
    } else {
      jstep = -1;
      endptrick = 1;
    }
    while (j != 0) {
      j += jstep;
      t = childs[wrap(j, len)];
      const int p = endps[wrap(j - endptrick, len)] ^ endptrick;
      if (t >= n_) augment_blossom(t, endpoint_[p]);
      j += jstep;
      t = childs[wrap(j, len)];
      if (t >= n_) augment_blossom(t, endpoint_[p ^ 1]);
      mate_[endpoint_[p]] = p ^ 1;
      mate_[endpoint_[p ^ 1]] = p;
    }
    std::rotate(childs.begin(), childs.begin() + i, childs.end());
    std::rotate(endps.begin(), endps.begin() + i, endps.end());
    blossom_base_[b] = blossom_base_[childs[0]];
    assert(blossom_base_[b] == v);
  }

  void augment_matching(int k) {
    const int ends[2][2] = {{endpoint_[2 * k], 2 * k + 1}, {endpoint_[2 * k + 1], 2 * k}};
    for (const auto& start : ends) {
      int s = start[0];
      int p = start[1];
      while (true) {
        const int bs = in_blossom_[s];
        assert(label_[bs] == 1);
        if (bs >= n_) augment_blossom(bs, s);
        mate_[s] = p;
        if (label_end_[bs] == -1) break;
        const int t = endpoint_[label_end_[bs]];
        const int bt = in_blossom_[t];
        assert(label_[bt] == 2);
        s = endpoint_[label_end_[bt]];
        const int j = endpoint_[label_end_[bt] ^ 1];
        assert(blossom_base_[bt] == t);
        if (bt >= n_) augment_blossom(bt, j);
        mate_[j] = label_end_[bt];
        p = label_end_[bt] ^ 1;
      }
    }
  }

  // Grow trees from queued S-vertices. Returns true after an augmentation.
  bool scan_queue() {
    while (!queue_.empty()) {
      const int v = queue_.back();
      queue_.pop_back();
      assert(label_[in_blossom_[v]] == 1);
      for (int q = neighbor_offset_[v]; q < neighbor_offset_[v + 1]; ++q) {
        const int p = neighbor_end_[q];
        const int k = p / 2;
        const int w = endpoint_[p];
        if (in_blossom_[v] == in_blossom_[w]) continue;
        double kslack = 0.0;
        if (!allow_edge_[k]) {
          kslack = slack(k);
          if (kslack <= 0.0) allow_edge_[k] = 1;
        }
        if (allow_edge_[k]) {
          if (label_[in_blossom_[w]] == 0) {
            assign_label(w, 2, p ^ 1);
          } else if (label_[in_blossom_[w]] == 1) {
            const int base = scan_blossom(v, w);
            if (base >= 0) {
              add_blossom(base, k);
            } else {
              augment_matching(k);
              return true;
            }
          } else if (label_[w] == 0) {
            assert(label_[in_blossom_[w]] == 2);
            label_[w] = 2;
            label_end_[w] = p ^ 1;
          }
        } else if (label_[in_blossom_[w]] == 1) {
          const int b = in_blossom_[v];
          if (best_edge_[b] == -1 || kslack < slack(best_edge_[b])) best_edge_[b] = k;
        } else if (label_[w] == 0) {
          if (best_edge_[w] == -1 || kslack < slack(best_edge_[w])) best_edge_[w] = k;
        }
      }
    }
    return false;
  }

  // Returns false when the optimum has been reached for this stage.
  bool adjust_duals() {
    int delta_type = -1;
    double delta = 0.0;
    int delta_edge = -1;
    int delta_blossom = -1;

    if (mode_ == Mode::kMaxWeight) {
      delta_type = 1;
      delta = *std::min_element(dual_.begin(), dual_.begin() + n_);
    }
    for (int v = 0; v < n_; ++v) {
      if (label_[in_blossom_[v]] == 0 && best_edge_[v] != -1) {
        const double d = slack(best_edge_[v]);
        if (delta_type == -1 || d < delta) {
          delta = d;
          delta_type = 2;
          delta_edge = best_edge_[v];
        }
      }
    }
    for (int b = 0; b < 2 * n_; ++b) {
      if (blossom_parent_[b] == -1 && label_[b] == 1 && best_edge_[b] != -1) {
        const double d = slack(best_edge_[b]) / 2.0;
        if (delta_type == -1 || d < delta) {
          delta = d;
          delta_type = 3;
          delta_edge = best_edge_[b];
        }
      }
    }
    for (int b = n_; b < 2 * n_; ++b) {
      if (blossom_base_[b] >= 0 && blossom_parent_[b] == -1 && label_[b] == 2 &&
          (delta_type == -1 || dual_[b] < delta)) {
        delta = dual_[b];
        delta_type = 4;
        delta_blossom = b;
      }
    }
    if (delta_type == -1) {
      // No tree can grow: the matching already has maximum cardinality.
      if (mode_ == Mode::kPerfect) return false;
      delta_type = 1;
      delta = std::max(0.0, *std::min_element(dual_.begin(), dual_.begin() + n_));
    }

    for (int v = 0; v < n_; ++v) {
      const int lbl = label_[in_blossom_[v]];
      if (lbl == 1) {
        dual_[v] -= delta;
      } else if (lbl == 2) {
        dual_[v] += delta;
      }
    }
    for (int b = n_; b < 2 * n_; ++b) {
      if (blossom_base_[b] >= 0 && blossom_parent_[b] == -1) {
        if (label_[b] == 1) {
          dual_[b] += delta;
        } else if (label_[b] == 2) {
          dual_[b] -= delta;
        }
      }
    }

    switch (delta_type) {
      case 1:
        return false;
      case 2: {
        allow_edge_[delta_edge] = 1;
        int i = endpoint_[2 * delta_edge];
        if (label_[in_blossom_[i]] == 0) i = endpoint_[2 * delta_edge + 1];
        assert(label_[in_blossom_[i]] == 1);
        queue_.push_back(i);
        break;
      }
      case 3: {
        allow_edge_[delta_edge] = 1;
        const int i = endpoint_[2 * delta_edge];
        assert(label_[in_blossom_[i]] == 1);
        queue_.push_back(i);
        break;
      }
      case 4:
        expand_blossom(delta_blossom, false);
        break;
      default:
        break;
    }
    return true;
  }

  // Perfect mode only: vertex duals need not be equal or non-negative, so start
  // each at half its heaviest incident edge, then lower free duals one vertex at
  // a time until an edge goes tight and match it when the far end is free.
  void jump_start() {
    for (int v = 0; v < n_; ++v) {
      double best = -std::numeric_limits<double>::infinity();
      for (int q = neighbor_offset_[v]; q < neighbor_offset_[v + 1]; ++q) {
        best = std::max(best, edges_[neighbor_end_[q] / 2].weight);
      }
      dual_[v] = best;
    }
    for (int u = 0; u < n_; ++u) {
      if (mate_[u] != -1 || neighbor_offset_[u] == neighbor_offset_[u + 1]) continue;
      double lowest = -std::numeric_limits<double>::infinity();
      int pick = -1;
      bool pick_free = false;
      for (int q = neighbor_offset_[u]; q < neighbor_offset_[u + 1]; ++q) {
        const int p = neighbor_end_[q];
        const int v = endpoint_[p];
        const double need = 2.0 * edges_[p / 2].weight - dual_[v];
        const bool free = mate_[v] == -1;
        if (need > lowest || (need == lowest && free && !pick_free)) {
          lowest = need;
          pick = p;
          pick_free = free;
        }
      }
      dual_[u] = lowest;
      if (pick_free) {
        mate_[u] = pick;
        mate_[endpoint_[pick]] = pick ^ 1;
      }
    }
  }

  int n_;
  int m_;
  Mode mode_;
  std::span<const WeightedEdge> edges_;

  std::vector<int> endpoint_;
  std::vector<int> neighbor_offset_;
  std::vector<int> neighbor_end_;

  std::vector<int> mate_;
  std::vector<int> label_;
  std::vector<int> label_end_;
  std::vector<int> in_blossom_;
  std::vector<int> blossom_parent_;
  std::vector<std::vector<int>> blossom_childs_;
  std::vector<std::vector<int>> blossom_endps_;
  std::vector<int> blossom_base_;
  std::vector<int> best_edge_;
  std::vector<std::vector<int>> blossom_best_edges_;
  std::vector<char> has_best_list_;
  std::vector<int> unused_blossoms_;
  std::vector<double> dual_;
  std::vector<char> allow_edge_;
  std::vector<int> queue_;

  std::vector<int> best_edge_to_;
  std::vector<int> touched_;
  std::vector<int> path_;
  std::vector<int> leaf_stack_;
};

}  // namespace

std::vector<std::int64_t> max_weight_matching(std::size_t n_vertices,
                                              std::span<const WeightedEdge> edges,
                                              bool max_cardinality) {
  if (n_vertices > static_cast<std::size_t>(std::numeric_limits<int>::max() / 2) ||
      edges.size() > static_cast<std::size_t>(std::numeric_limits<int>::max() / 2)) {
    throw std::invalid_argument("max_weight_matching: graph too large");
  }
  if (n_vertices == 0) return {};
  if (edges.empty()) return std::vector<std::int64_t>(n_vertices, -1);
  Matcher matcher(n_vertices, edges,
                  max_cardinality ? Matcher::Mode::kMaxCardinality : Matcher::Mode::kMaxWeight);
  return matcher.solve();
}

std::optional<std::vector<std::int64_t>> max_weight_perfect_matching(
    std::size_t n_vertices, std::span<const WeightedEdge> edges) {
  if (n_vertices > static_cast<std::size_t>(std::numeric_limits<int>::max() / 2) ||
      edges.size() > static_cast<std::size_t>(std::numeric_limits<int>::max() / 2)) {
    throw std::invalid_argument("max_weight_perfect_matching: graph too large");
  }
  if (n_vertices == 0) return std::vector<std::int64_t>{};
  if (n_vertices % 2 != 0 || edges.empty()) return std::nullopt;
  Matcher matcher(n_vertices, edges, Matcher::Mode::kPerfect);
  auto mate = matcher.solve();
  if (std::find(mate.begin(), mate.end(), -1) != mate.end()) return std::nullopt;
  return mate;
}

}  // namespace indexmark
