#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace indexmark {

/// Single-channel image with finite pixel values, nominally in [0, 1].
struct PatchImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // row-major

  PatchImage() = default;
  PatchImage(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), pixels(h * w, fill) {}

  [[nodiscard]] double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  [[nodiscard]] double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }

  void validate() const;

  friend bool operator==(const PatchImage&, const PatchImage&) = default;
};

/// Window of `h` x `w` pixels with top-left corner (top, left).
[[nodiscard]] PatchImage crop_image(const PatchImage& img, std::size_t top, std::size_t left, std::size_t h,
                                    std::size_t w);

// IMPX: "IMPX", u32 version 1, u64 h, u64 w, h*w float32 pixels.
[[nodiscard]] PatchImage parse_impx(const std::vector<std::uint8_t>& bytes);
[[nodiscard]] std::vector<std::uint8_t> serialize_impx(const PatchImage& img);

// Binary 8-bit PGM. Values are clamped to [0, 1] and rounded on write.
[[nodiscard]] PatchImage parse_pgm(const std::vector<std::uint8_t>& bytes);
[[nodiscard]] std::vector<std::uint8_t> serialize_pgm(const PatchImage& img);

/// Loads IMPX or PGM, chosen by the file's magic bytes.
[[nodiscard]] PatchImage load_image(const std::filesystem::path& path);

/// Writes PGM when the extension is .pgm, IMPX otherwise.
void save_image(const PatchImage& img, const std::filesystem::path& path);

}  // namespace indexmark
