#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include "indexmark/codebook.hpp"
#include "indexmark/codec.hpp"
#include "indexmark/image.hpp"
#include "indexmark/keying.hpp"

namespace indexmark {

inline constexpr double kThreshold256 = 0.615;   // grids with fewer than 1024 indices
inline constexpr double kThreshold1024 = 0.60;   // grids with 1024 or more indices
inline constexpr double kCropThreshold = 0.7;

/// Default decision threshold for a grid of n_idx indices.
[[nodiscard]] double operational_threshold(std::size_t n_idx);

/// Two-sided critical value z = Phi^-1(1 - beta / 2) for 0 < beta < 1.
[[nodiscard]] double critical_value(double beta);

/// Threshold used for an n_idx grid: the explicit value when given, else the
/// interval's upper endpoint when beta is given, else operational_threshold.
[[nodiscard]] double resolve_threshold(std::size_t n_idx, std::optional<double> threshold,
                                       std::optional<double> beta);

struct CIParams {
  std::size_t n_idx = 0;
  double beta = 0.0;
  double z = 0.0;

  [[nodiscard]] static CIParams make(std::size_t n_idx, double beta);
};

struct ConfidenceInterval {
  double low = 0.5;
  double high = 0.5;
};

/// 0.5 -/+ z / (2 sqrt(n_idx)). The endpoints satisfy low + high == 1 exactly.
[[nodiscard]] ConfidenceInterval confidence_interval(std::size_t n_idx, double beta);

struct GreenCount {
  std::size_t green = 0;
  std::size_t total = 0;
  double rate = 0.0;
};

[[nodiscard]] GreenCount green_rate(const IndexGrid& grid, const Partition& part);

struct VerificationReport {
  std::size_t green = 0;
  std::size_t total = 0;
  double rate = 0.0;
  double threshold = 0.0;
  bool decision = false;
  std::optional<ConfidenceInterval> ci;
  std::optional<std::pair<std::size_t, std::size_t>> best_offset;  // (dy, dx), crop mode only
};

/// Decision is rate >= threshold; threshold must lie in (0.5, 1]. When beta is
/// given the report also carries the confidence interval for the grid size.
[[nodiscard]] VerificationReport verify(const IndexGrid& grid, const Partition& part, double threshold,
                                        std::optional<double> beta = std::nullopt);

struct CropSearchConfig {
  std::size_t patch_px = 8;
  double threshold = kCropThreshold;
  // When set, each candidate's threshold is the upper endpoint of the interval
  // for that candidate's patch count, overriding `threshold`.
  std::optional<double> beta;
};

/// Re-encodes the image from every patch-local offset (dy, dx) in
/// [0, patch_px)^2 and verifies each candidate grid. A detection reports the
/// passing candidate with the highest green rate, ties to the earliest offset in
/// row-major order; otherwise the highest-rate candidate is reported with
/// decision false.
[[nodiscard]] VerificationReport verify_cropped(const PatchImage& img, const Codebook& cb, const Partition& part,
                                                const CropSearchConfig& cfg);

[[nodiscard]] std::string report_to_json(const VerificationReport& report);
[[nodiscard]] VerificationReport report_from_json(const std::string& text);

}  // namespace indexmark
