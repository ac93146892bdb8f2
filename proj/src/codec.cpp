#include "indexmark/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "indexmark/error.hpp"

namespace indexmark {
namespace {

void check_layout(const Codebook& cb, const CodecConfig& cfg) {
  if (cfg.patch_px == 0) throw Error(ErrorCode::kInvalidArgument, "codec: patch_px must be positive");
  if (cb.dim() != cfg.patch_px * cfg.patch_px) {
    throw Error(ErrorCode::kDimensionMismatch, "codec: codebook dimension must equal patch_px^2");
  }
}

}  // namespace

PatchImage decode(const IndexGrid& grid, const Codebook& cb, const CodecConfig& cfg) {
  check_layout(cb, cfg);
  grid.validate(cb.size());
  const std::size_t p = cfg.patch_px;
  PatchImage img(grid.height * p, grid.width * p);
  for (std::size_t r = 0; r < grid.height; ++r) {
    for (std::size_t c = 0; c < grid.width; ++c) {
      const auto block = cb.row(grid.at(r, c));
      for (std::size_t y = 0; y < p; ++y) {
        for (std::size_t x = 0; x < p; ++x) img.at(r * p + y, c * p + x) = std::clamp(block[y * p + x], 0.0, 1.0);
      }
    }
  }
  return img;
}

IndexGrid encode_region(const PatchImage& img, std::size_t top, std::size_t left, const Codebook& cb,
                        const CodecConfig& cfg) {
  check_layout(cb, cfg);
  img.validate();
  const std::size_t p = cfg.patch_px;
  if (top > img.height || left > img.width) throw Error(ErrorCode::kInvalidArgument, "encode: origin outside image");
  IndexGrid grid;
  grid.height = (img.height - top) / p;
  grid.width = (img.width - left) / p;
  if (grid.height == 0 || grid.width == 0) throw Error(ErrorCode::kInvalidArgument, "encode: region smaller than one block");

  std::vector<double> blocks(grid.height * grid.width * p * p);
  auto* out = blocks.data();
  for (std::size_t r = 0; r < grid.height; ++r) {
    for (std::size_t c = 0; c < grid.width; ++c) {
      for (std::size_t y = 0; y < p; ++y) {
        const double* src = img.pixels.data() + (top + r * p + y) * img.width + left + c * p;
        out = std::copy(src, src + p, out);
      }
    }
  }
  grid.indices = quantize_blocks(cb, blocks);
  return grid;
}

IndexGrid encode(const PatchImage& img, const Codebook& cb, const CodecConfig& cfg) {
  check_layout(cb, cfg);
  if (img.height % cfg.patch_px != 0 || img.width % cfg.patch_px != 0) {
    throw Error(ErrorCode::kDimensionMismatch, "encode: image dimensions must be multiples of patch_px");
  }
  return encode_region(img, 0, 0, cb, cfg);
}

double min_row_gap(const Codebook& cb) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cb.size(); ++i) {
    const auto a = cb.row(i);
    for (std::size_t j = i + 1; j < cb.size(); ++j) {
      const auto b = cb.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) acc += (a[k] - b[k]) * (a[k] - b[k]);
      best = std::min(best, acc);
    }
  }
  return std::sqrt(best);
}

}  // namespace indexmark
