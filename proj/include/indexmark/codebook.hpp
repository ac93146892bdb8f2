#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace indexmark {

/// N x d table of codebook vectors. Persisted as float32, held as double.
///
/// Construction validates the invariants every other module relies on: even
/// N, finite entries, and no all-zero row. Duplicate rows are allowed.
/// Immutable after construction, so concurrent readers are safe.
class Codebook {
 public:
  Codebook(std::size_t n_entries, std::size_t dim, std::vector<double> values);

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const;
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] double norm(std::size_t i) const { return norms_.at(i); }

  friend bool operator==(const Codebook& a, const Codebook& b) {
    return a.n_ == b.n_ && a.dim_ == b.dim_ && a.values_ == b.values_;
  }

  // Float copy of the rows and their squared norms, used to screen
  // nearest-row candidates in bulk before the exact double comparison.
  [[nodiscard]] const Eigen::MatrixXf& screening_rows() const noexcept { return rows_f_; }
  [[nodiscard]] const Eigen::VectorXd& squared_norms() const noexcept { return sq_norms_; }

 private:
  std::size_t n_;
  std::size_t dim_;
  std::vector<double> values_;
  std::vector<double> norms_;
  Eigen::MatrixXf rows_f_;
  Eigen::VectorXd sq_norms_;
};

[[nodiscard]] Codebook load_codebook(const std::filesystem::path& path);
void save_codebook(const Codebook& cb, const std::filesystem::path& path);
[[nodiscard]] Codebook parse_codebook(const std::vector<std::uint8_t>& bytes);
[[nodiscard]] std::vector<std::uint8_t> serialize_codebook(const Codebook& cb);

/// dot(e_i, e_j) / (|e_i| |e_j|), clamped to [-1, 1]. Requires i != j.
[[nodiscard]] double cosine_similarity(const Codebook& cb, std::size_t i, std::size_t j);

/// Index of the row nearest to `v` in Euclidean distance; the smallest index
/// wins ties.
[[nodiscard]] std::uint32_t quantize_block(const Codebook& cb, std::span<const double> v);

/// quantize_block applied to `count` consecutive d-vectors. Produces exactly
/// the same indices, screening candidates with a float matrix product first.
[[nodiscard]] std::vector<std::uint32_t> quantize_blocks(const Codebook& cb,
                                                         std::span<const double> blocks);

/// h x w grid of codebook indices, stored row-major.
struct IndexGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint32_t> indices;

  [[nodiscard]] std::size_t size() const noexcept { return indices.size(); }
  [[nodiscard]] std::uint32_t at(std::size_t r, std::size_t c) const { return indices.at(r * width + c); }

  /// Throws unless height * width matches the payload and every index < n_entries.
  void validate(std::size_t n_entries) const;

  friend bool operator==(const IndexGrid&, const IndexGrid&) = default;
};

[[nodiscard]] IndexGrid load_index_grid(const std::filesystem::path& path);
void save_index_grid(const IndexGrid& grid, const std::filesystem::path& path);
[[nodiscard]] IndexGrid parse_index_grid(const std::vector<std::uint8_t>& bytes);
[[nodiscard]] std::vector<std::uint8_t> serialize_index_grid(const IndexGrid& grid);

}  // namespace indexmark
