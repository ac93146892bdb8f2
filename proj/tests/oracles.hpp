#pragma once

// Independent reference implementations used by the tests. Nothing here calls
// into the library except for plain data accessors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "indexmark/codebook.hpp"
#include "indexmark/image.hpp"

namespace oracle {

// Dense symmetric weight matrix with NaN for a missing edge.
struct DenseGraph {
  std::size_t n = 0;
  std::vector<double> w;

  explicit DenseGraph(std::size_t n_) : n(n_), w(n_ * n_, std::numeric_limits<double>::quiet_NaN()) {}
  void set(std::size_t i, std::size_t j, double v) { w[i * n + j] = w[j * n + i] = v; }
  [[nodiscard]] double get(std::size_t i, std::size_t j) const { return w[i * n + j]; }
  [[nodiscard]] bool has(std::size_t i, std::size_t j) const { return !std::isnan(get(i, j)); }
};

// Best perfect matching weight by bitmask dynamic programming over the lowest
// unmatched vertex. -inf when no perfect matching exists.
inline double best_perfect_weight(const DenseGraph& g) {
  const std::size_t full = (std::size_t{1} << g.n) - 1;
  std::vector<double> memo(full + 1, std::numeric_limits<double>::quiet_NaN());
  std::function<double(std::size_t)> solve = [&](std::size_t used) -> double {
    if (used == full) return 0.0;
    if (!std::isnan(memo[used])) return memo[used];
    std::size_t i = 0;
    while (used >> i & 1) ++i;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < g.n; ++j) {
      if ((used >> j & 1) || !g.has(i, j)) continue;
      best = std::max(best, g.get(i, j) + solve(used | (std::size_t{1} << i) | (std::size_t{1} << j)));
    }
    return memo[used] = best;
  };
  return solve(0);
}

// Best weight over all matchings, not necessarily perfect.
inline double best_any_weight(const DenseGraph& g) {
  const std::size_t full = (std::size_t{1} << g.n) - 1;
  std::vector<double> memo(full + 1, std::numeric_limits<double>::quiet_NaN());
  std::function<double(std::size_t)> solve = [&](std::size_t used) -> double {
    if (used == full) return 0.0;
    if (!std::isnan(memo[used])) return memo[used];
    std::size_t i = 0;
    while (used >> i & 1) ++i;
    double best = solve(used | (std::size_t{1} << i));  // leave i single
    for (std::size_t j = i + 1; j < g.n; ++j) {
      if ((used >> j & 1) || !g.has(i, j)) continue;
      best = std::max(best, g.get(i, j) + solve(used | (std::size_t{1} << i) | (std::size_t{1} << j)));
    }
    return memo[used] = best;
  };
  return solve(0);
}

inline double cosine(const indexmark::Codebook& cb, std::size_t i, std::size_t j) {
  const auto a = cb.row(i);
  const auto b = cb.row(j);
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += static_cast<long double>(a[k]) * b[k];
    na += static_cast<long double>(a[k]) * a[k];
    nb += static_cast<long double>(b[k]) * b[k];
  }
  return static_cast<double>(dot / std::sqrt(na * nb));
}

// Linear scan nearest row, first minimum wins.
inline std::uint32_t nearest_row(const indexmark::Codebook& cb, const std::vector<double>& v) {
  std::uint32_t best = 0;
  long double best_d = std::numeric_limits<long double>::infinity();
  for (std::size_t k = 0; k < cb.size(); ++k) {
    const auto r = cb.row(k);
    long double d = 0;
    for (std::size_t t = 0; t < v.size(); ++t) d += (static_cast<long double>(v[t]) - r[t]) * (v[t] - r[t]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(k);
    }
  }
  return best;
}

// Standard normal quantile by bisection on erfc; accurate to ~1e-15 absolute.
inline double normal_upper_quantile(double tail) {
  double lo = 0.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(mid / std::sqrt(2.0)) > tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// P(X >= k) for X ~ Binomial(n, 1/2), summed exactly in long double.
inline double binomial_half_upper_tail(unsigned n, unsigned k) {
  long double total = 0;
  for (unsigned i = k; i <= n; ++i) {
    total += std::exp(std::lgamma(n + 1.0L) - std::lgamma(i + 1.0L) - std::lgamma(n - i + 1.0L) - n * std::log(2.0L));
  }
  return static_cast<double>(total);
}

inline double mse(const indexmark::PatchImage& a, const indexmark::PatchImage& b) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.height; ++r) {
    for (std::size_t c = 0; c < a.width; ++c) s += (a.at(r, c) - b.at(r, c)) * (a.at(r, c) - b.at(r, c));
  }
  return s / static_cast<double>(a.height * a.width);
}

// SSIM evaluated window by window with a 2-D Gaussian weight.
inline double windowed_ssim(const indexmark::PatchImage& a, const indexmark::PatchImage& b) {
  constexpr int win = 11;
  double w[win][win];
  double sum = 0.0;
  for (int y = 0; y < win; ++y) {
    for (int x = 0; x < win; ++x) {
      w[y][x] = std::exp(-((y - 5) * (y - 5) + (x - 5) * (x - 5)) / (2 * 1.5 * 1.5));
      sum += w[y][x];
    }
  }
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + win <= a.height; ++r) {
    for (std::size_t c = 0; c + win <= a.width; ++c) {
      double ma = 0, mb = 0;
      for (int y = 0; y < win; ++y) {
        for (int x = 0; x < win; ++x) {
          ma += w[y][x] / sum * a.at(r + y, c + x);
          mb += w[y][x] / sum * b.at(r + y, c + x);
        }
      }
      double va = 0, vb = 0, cov = 0;
      for (int y = 0; y < win; ++y) {
        for (int x = 0; x < win; ++x) {
          const double da = a.at(r + y, c + x) - ma;
          const double db = b.at(r + y, c + x) - mb;
          va += w[y][x] / sum * da * da;
          vb += w[y][x] / sum * db * db;
          cov += w[y][x] / sum * da * db;
        }
      }
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace oracle

namespace fixtures {

inline indexmark::Codebook random_codebook(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n * d);
  for (auto& x : v) x = static_cast<float>(normal(rng));
  return indexmark::Codebook(n, d, std::move(v));
}

}  // namespace fixtures
