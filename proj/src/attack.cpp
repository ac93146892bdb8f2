#include "indexmark/attack.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "indexmark/error.hpp"

namespace indexmark {
namespace {

constexpr std::array<int, 64> kLuminanceTable = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,  14, 13, 16, 24, 40,  57,
    69, 56, 14, 17, 22,  29,  51,  87,  80, 62, 18, 22, 37,  56,  68,  109, 103, 77, 24, 35, 55, 64,
    81, 104, 113, 92, 49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

// Mirror index without repeating the edge pixel (reflect-101).
std::size_t reflect101(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

PatchImage gaussian_blur(const PatchImage& img, int ksize) {
  const double sigma = blur_sigma(ksize);
  const int radius = ksize / 2;
  std::vector<double> kernel(ksize);
  double sum = 0.0;
  for (int i = 0; i < ksize; ++i) {
    const double x = i - radius;
    kernel[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += kernel[i];
  }
  for (auto& k : kernel) k /= sum;

  const std::size_t h = img.height;
  const std::size_t w = img.width;
  PatchImage tmp(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = 0; k < ksize; ++k) acc += kernel[k] * img.at(r, reflect101(static_cast<std::ptrdiff_t>(c) + k - radius, w));
      tmp.at(r, c) = acc;
    }
  }
  PatchImage out(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = 0; k < ksize; ++k) acc += kernel[k] * tmp.at(reflect101(static_cast<std::ptrdiff_t>(r) + k - radius, h), c);
      out.at(r, c) = std::clamp(acc, 0.0, 1.0);
    }
  }
  return out;
}

PatchImage gaussian_noise(const PatchImage& img, double sigma, std::uint64_t seed) {
  if (sigma == 0.0) return img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  PatchImage out = img;
  for (auto& p : out.pixels) p = std::clamp(p + noise(rng), 0.0, 1.0);
  return out;
}

std::array<double, 64> quant_table(int quality) {
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<double, 64> q{};
  for (int i = 0; i < 64; ++i) q[i] = std::clamp((kLuminanceTable[i] * scale + 50) / 100, 1, 255);
  return q;
}

PatchImage jpeg_like(const PatchImage& img, int quality) {
  std::array<double, 64> basis{};  // basis[u * 8 + x] = C(u) cos((2x + 1) u pi / 16)
  for (int u = 0; u < 8; ++u) {
    const double cu = u == 0 ? std::sqrt(0.125) : 0.5;
    for (int x = 0; x < 8; ++x) basis[u * 8 + x] = cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
  }
  const auto q = quant_table(quality);

  const std::size_t h = img.height;
  const std::size_t w = img.width;
  PatchImage out(h, w);
  std::array<double, 64> block{};
  std::array<double, 64> tmp{};
  for (std::size_t by = 0; by < h; by += 8) {
    for (std::size_t bx = 0; bx < w; bx += 8) {
      // Blocks overhanging the border repeat the last row / column.
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          block[y * 8 + x] = img.at(std::min(by + y, h - 1), std::min(bx + x, w - 1)) * 255.0 - 128.0;
        }
      }
      for (int u = 0; u < 8; ++u) {
        for (int x = 0; x < 8; ++x) {
          double acc = 0.0;
          for (int y = 0; y < 8; ++y) acc += basis[u * 8 + y] * block[y * 8 + x];
          tmp[u * 8 + x] = acc;
        }
      }
      for (int u = 0; u < 8; ++u) {
        for (int v = 0; v < 8; ++v) {
          double acc = 0.0;
          for (int x = 0; x < 8; ++x) acc += tmp[u * 8 + x] * basis[v * 8 + x];
          block[u * 8 + v] = std::round(acc / q[u * 8 + v]) * q[u * 8 + v];
        }
      }
      for (int y = 0; y < 8; ++y) {
        for (int v = 0; v < 8; ++v) {
          double acc = 0.0;
          for (int u = 0; u < 8; ++u) acc += basis[u * 8 + y] * block[u * 8 + v];
          tmp[y * 8 + v] = acc;
        }
      }
      for (int y = 0; y < 8 && by + y < h; ++y) {
        for (int x = 0; x < 8 && bx + x < w; ++x) {
          double acc = 0.0;
          for (int v = 0; v < 8; ++v) acc += tmp[y * 8 + v] * basis[v * 8 + x];
          out.at(by + y, bx + x) = std::clamp((acc + 128.0) / 255.0, 0.0, 1.0);
        }
      }
    }
  }
  return out;
}

PatchImage brightness(const PatchImage& img, double jitter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double factor = std::uniform_real_distribution<double>(1.0 - jitter, 1.0 + jitter)(rng);
  PatchImage out = img;
  for (auto& p : out.pixels) p = std::clamp(p * factor, 0.0, 1.0);
  return out;
}

PatchImage erase(const PatchImage& img, double fraction, std::uint64_t seed) {
  const std::size_t h = img.height;
  const std::size_t w = img.width;
  const auto area = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(h * w)));
  if (area == 0) return img;
  std::mt19937_64 rng(seed);
  const double log_aspect = std::uniform_real_distribution<double>(std::log(0.3), std::log(3.3))(rng);

  // Exact-area rectangle whose aspect (height / width) is nearest the draw.
  std::size_t rh = 0;
  std::size_t rw = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t d = 1; d <= std::min(h, area); ++d) {
    if (area % d != 0 || area / d > w) continue;
    const double dist = std::fabs(std::log(static_cast<double>(d) / static_cast<double>(area / d)) - log_aspect);
    if (dist < best) {
      best = dist;
      rh = d;
      rw = area / d;
    }
  }
  if (rh == 0) {
    // No exact factorisation fits; use the closest-area rectangle at the drawn aspect.
    rh = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(std::sqrt(area * std::exp(log_aspect)))), 1, h);
    rw = std::clamp<std::size_t>(area / rh, 1, w);
  }
  const std::size_t top = std::uniform_int_distribution<std::size_t>(0, h - rh)(rng);
  const std::size_t left = std::uniform_int_distribution<std::size_t>(0, w - rw)(rng);
  PatchImage out = img;
  for (std::size_t r = top; r < top + rh; ++r) {
    std::fill_n(out.pixels.begin() + static_cast<std::ptrdiff_t>(r * w + left), rw, 0.0);
  }
  return out;
}

PatchImage random_crop(const PatchImage& img, double keep, std::uint64_t seed) {
  const auto ch = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(keep * static_cast<double>(img.height))));
  const auto cw = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(keep * static_cast<double>(img.width))));
  std::mt19937_64 rng(seed);
  const std::size_t top = std::uniform_int_distribution<std::size_t>(0, img.height - ch)(rng);
  const std::size_t left = std::uniform_int_distribution<std::size_t>(0, img.width - cw)(rng);
  return crop_image(img, top, left, ch, cw);
}

}  // namespace

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kBlur: return "blur";
    case AttackKind::kNoise: return "noise";
    case AttackKind::kJpegLike: return "jpeg_like";
    case AttackKind::kBrightness: return "brightness";
    case AttackKind::kErase: return "erase";
    case AttackKind::kCrop: return "crop";
  }
  return "unknown";
}

std::optional<AttackKind> parse_attack_kind(std::string_view name) {
  for (auto kind : {AttackKind::kBlur, AttackKind::kNoise, AttackKind::kJpegLike, AttackKind::kBrightness,
                    AttackKind::kErase, AttackKind::kCrop}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

AttackSpec AttackSpec::defaults(AttackKind kind, std::uint64_t seed) {
  switch (kind) {
    case AttackKind::kBlur: return {kind, 11.0, seed};
    case AttackKind::kNoise: return {kind, 0.01, seed};
    case AttackKind::kJpegLike: return {kind, 70.0, seed};
    case AttackKind::kBrightness: return {kind, 0.5, seed};
    case AttackKind::kErase: return {kind, 0.10, seed};
    case AttackKind::kCrop: return {kind, 0.75, seed};
  }
  return {kind, 0.0, seed};
}

void AttackSpec::validate() const {
  const auto bad = [this](const char* what) {
    throw Error(ErrorCode::kInvalidArgument, std::string(to_string(kind)) + ": " + what);
  };
  if (!std::isfinite(param)) bad("parameter must be finite");
  switch (kind) {
    case AttackKind::kBlur:
      if (param < 1 || param != std::floor(param) || static_cast<long>(param) % 2 == 0) bad("kernel size must be a positive odd integer");
      break;
    case AttackKind::kNoise:
      if (param < 0) bad("sigma must be non-negative");
      break;
    case AttackKind::kJpegLike:
      if (param < 1 || param > 100 || param != std::floor(param)) bad("quality must be an integer in [1, 100]");
      break;
    case AttackKind::kBrightness:
      if (param < 0 || param >= 1) bad("jitter must lie in [0, 1)");
      break;
    case AttackKind::kErase:
      if (param < 0 || param > 1) bad("fraction must lie in [0, 1]");
      break;
    case AttackKind::kCrop:
      if (param <= 0 || param > 1) bad("keep fraction must lie in (0, 1]");
      break;
  }
}

double blur_sigma(int kernel_size) { return 0.25 * ((kernel_size - 1) * 0.5 - 1.0) + 0.8; }

PatchImage attack(const PatchImage& img, const AttackSpec& spec) {
  spec.validate();
  img.validate();
  switch (spec.kind) {
    case AttackKind::kBlur: return gaussian_blur(img, static_cast<int>(spec.param));
    case AttackKind::kNoise: return gaussian_noise(img, spec.param, spec.seed);
    case AttackKind::kJpegLike: return jpeg_like(img, static_cast<int>(spec.param));
    case AttackKind::kBrightness: return brightness(img, spec.param, spec.seed);
    case AttackKind::kErase: return erase(img, spec.param, spec.seed);
    case AttackKind::kCrop: return random_crop(img, spec.param, spec.seed);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown attack kind");
}

}  // namespace indexmark
