#pragma once

#include <cstddef>

#include "indexmark/codebook.hpp"
#include "indexmark/image.hpp"

namespace indexmark {

/// Toy VQ codec: each codebook vector is a patch_px x patch_px block laid out
/// row-major, so the codebook dimension must equal patch_px^2.
struct CodecConfig {
  std::size_t patch_px = 8;
};

/// Tiles the grid's codebook blocks into an image, clamping pixels to [0, 1].
[[nodiscard]] PatchImage decode(const IndexGrid& grid, const Codebook& cb, const CodecConfig& cfg);

/// Nearest-row index for every block. Dimensions must be multiples of patch_px.
[[nodiscard]] IndexGrid encode(const PatchImage& img, const Codebook& cb, const CodecConfig& cfg);

/// Encodes the largest whole-block region whose top-left corner is (top, left);
/// partial blocks on the bottom and right are discarded.
[[nodiscard]] IndexGrid encode_region(const PatchImage& img, std::size_t top, std::size_t left,
                                      const Codebook& cb, const CodecConfig& cfg);

/// Smallest Euclidean distance between two distinct codebook rows. Any
/// perturbation below gap / (2 * patch_px) in sup-norm leaves encode unchanged.
[[nodiscard]] double min_row_gap(const Codebook& cb);

}  // namespace indexmark
