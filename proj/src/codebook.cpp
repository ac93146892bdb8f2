#include "indexmark/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "binary_io.hpp"
#include "indexmark/error.hpp"

namespace indexmark {
namespace {

constexpr std::string_view kCodebookMagic = "IMCB";
constexpr std::string_view kGridMagic = "IMIG";
constexpr std::uint32_t kFormatVersion = 1;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    sum += diff * diff;
  }
  return sum;
}

}  // namespace

Codebook::Codebook(std::size_t n_entries, std::size_t dim, std::vector<double> values)
    : n_(n_entries), dim_(dim), values_(std::move(values)) {
  if (n_ == 0 || dim_ == 0) throw Error(ErrorCode::kEmptyInput, "codebook: empty codebook");
  if (n_ % 2 != 0) throw Error(ErrorCode::kOddEntryCount, "codebook: odd entry count " + std::to_string(n_));
  if (values_.size() != n_ * dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "codebook: value count does not match N x d");
  }
  norms_.resize(n_);
  sq_norms_.resize(static_cast<Eigen::Index>(n_));
  rows_f_.resize(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      const double v = values_[i * dim_ + k];
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFiniteVector, "codebook: non-finite vector at row " + std::to_string(i));
      }
      sq += v * v;
      rows_f_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = static_cast<float>(v);
    }
    if (sq == 0.0) throw Error(ErrorCode::kZeroVector, "codebook: zero vector at row " + std::to_string(i));
    norms_[i] = std::sqrt(sq);
    sq_norms_(static_cast<Eigen::Index>(i)) = sq;
  }
}

std::span<const double> Codebook::row(std::size_t i) const {
  if (i >= n_) throw Error(ErrorCode::kIndexOutOfRange, "codebook: row " + std::to_string(i) + " out of range");
  return std::span<const double>(values_).subspan(i * dim_, dim_);
}

Codebook parse_codebook(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader in(bytes, "IMCB");
  in.expect_magic(kCodebookMagic);
  const std::uint32_t version = in.u32();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kBadVersion, "IMCB: unsupported version " + std::to_string(version));
  }
  const std::uint64_t n = in.u64();
  const std::uint64_t d = in.u64();
  if (n % 2 != 0) throw Error(ErrorCode::kOddEntryCount, "IMCB: odd entry count " + std::to_string(n));
  if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
    throw Error(ErrorCode::kTruncated, "IMCB: header overflows");
  }
  in.need_records(n * d, 4);
  std::vector<double> values(n * d);
  for (auto& v : values) v = static_cast<double>(in.f32());
  in.expect_end();
  return Codebook(n, d, std::move(values));
}

std::vector<std::uint8_t> serialize_codebook(const Codebook& cb) {
  detail::ByteWriter out;
  out.magic(kCodebookMagic);
  out.u32(kFormatVersion);
  out.u64(cb.size());
  out.u64(cb.dim());
  for (double v : cb.values()) out.f32(static_cast<float>(v));
  return out.bytes();
}

Codebook load_codebook(const std::filesystem::path& path) { return parse_codebook(detail::read_file(path)); }

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
  detail::write_file(path, serialize_codebook(cb));
}

double cosine_similarity(const Codebook& cb, std::size_t i, std::size_t j) {
  if (i >= cb.size() || j >= cb.size()) throw Error(ErrorCode::kIndexOutOfRange, "cosine_similarity: index out of range");
  if (i == j) throw Error(ErrorCode::kInvalidArgument, "cosine_similarity: i == j");
  const auto a = cb.row(i);
  const auto b = cb.row(j);
  double dot = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
  return std::clamp(dot / (cb.norm(i) * cb.norm(j)), -1.0, 1.0);
}

std::uint32_t quantize_block(const Codebook& cb, std::span<const double> v) {
  if (v.size() != cb.dim()) throw Error(ErrorCode::kDimensionMismatch, "quantize_block: dimension mismatch");
  std::uint32_t best = 0;
  double best_dist = squared_distance(v, cb.row(0));
  for (std::size_t k = 1; k < cb.size(); ++k) {
    const double dist = squared_distance(v, cb.row(k));
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<std::uint32_t>(k);
    }
  }
  return best;
}

std::vector<std::uint32_t> quantize_blocks(const Codebook& cb, std::span<const double> blocks) {
  const std::size_t d = cb.dim();
  if (blocks.size() % d != 0) throw Error(ErrorCode::kDimensionMismatch, "quantize_blocks: dimension mismatch");
  const std::size_t count = blocks.size() / d;
  std::vector<std::uint32_t> out(count);
  const auto& rows = cb.screening_rows();
  const auto& sq_norms = cb.squared_norms();
  const double max_sq_norm = sq_norms.maxCoeff();
  const auto n = static_cast<Eigen::Index>(cb.size());

  constexpr std::size_t kChunk = 256;
  Eigen::MatrixXf chunk;
  Eigen::MatrixXf dots;
  std::vector<double> approx(cb.size());
  for (std::size_t start = 0; start < count; start += kChunk) {
    const std::size_t len = std::min(kChunk, count - start);
    chunk.resize(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(d));
    for (std::size_t b = 0; b < len; ++b) {
      for (std::size_t k = 0; k < d; ++k) {
        chunk(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) =
            static_cast<float>(blocks[(start + b) * d + k]);
      }
    }
    dots.noalias() = chunk * rows;
    for (std::size_t b = 0; b < len; ++b) {
      const auto v = blocks.subspan((start + b) * d, d);
      double v_sq = 0.0;
      for (double x : v) v_sq += x * x;
      double lowest = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < n; ++k) {
        approx[k] = v_sq + sq_norms(k) - 2.0 * static_cast<double>(dots(static_cast<Eigen::Index>(b), k));
        lowest = std::min(lowest, approx[k]);
      }
      // Float screening error is far below this bound; every row that could be
      // the exact argmin survives and is re-ranked in double.
      const double tolerance = 1e-4 * (v_sq + max_sq_norm) + 1e-12;
      std::uint32_t best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < n; ++k) {
        if (approx[k] > lowest + tolerance) continue;
        const double dist = squared_distance(v, cb.row(static_cast<std::size_t>(k)));
        if (dist < best_dist) {
          best_dist = dist;
          best = static_cast<std::uint32_t>(k);
        }
      }
      out[start + b] = best;
    }
  }
  return out;
}

void IndexGrid::validate(std::size_t n_entries) const {
  if (height * width != indices.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "index grid: h*w does not match index count");
  }
  for (auto idx : indices) {
    if (idx >= n_entries) {
      throw Error(ErrorCode::kIndexOutOfRange, "index grid: index " + std::to_string(idx) + " out of range");
    }
  }
}

IndexGrid parse_index_grid(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader in(bytes, "IMIG");
  in.expect_magic(kGridMagic);
  const std::uint32_t version = in.u32();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kBadVersion, "IMIG: unsupported version " + std::to_string(version));
  }
  IndexGrid grid;
  grid.height = in.u64();
  grid.width = in.u64();
  if (grid.width != 0 && grid.height > std::numeric_limits<std::uint64_t>::max() / grid.width) {
    throw Error(ErrorCode::kTruncated, "IMIG: header overflows");
  }
  in.need_records(grid.height * grid.width, 4);
  grid.indices.resize(grid.height * grid.width);
  for (auto& idx : grid.indices) idx = in.u32();
  in.expect_end();
  return grid;
}

std::vector<std::uint8_t> serialize_index_grid(const IndexGrid& grid) {
  if (grid.height * grid.width != grid.indices.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "index grid: h*w does not match index count");
  }
  detail::ByteWriter out;
  out.magic(kGridMagic);
  out.u32(kFormatVersion);
  out.u64(grid.height);
  out.u64(grid.width);
  for (auto idx : grid.indices) out.u32(idx);
  return out.bytes();
}

IndexGrid load_index_grid(const std::filesystem::path& path) { return parse_index_grid(detail::read_file(path)); }

void save_index_grid(const IndexGrid& grid, const std::filesystem::path& path) {
  detail::write_file(path, serialize_index_grid(grid));
}

}  // namespace indexmark
