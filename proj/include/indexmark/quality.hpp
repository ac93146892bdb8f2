#pragma once

#include "indexmark/image.hpp"

namespace indexmark {

/// 10 log10(1 / MSE) for unit-range images; +inf when the images are identical.
[[nodiscard]] double psnr(const PatchImage& a, const PatchImage& b);

/// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5),
/// C1 = 0.01^2, C2 = 0.03^2, averaged over every fully contained window.
[[nodiscard]] double ssim(const PatchImage& a, const PatchImage& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

}  // namespace indexmark
