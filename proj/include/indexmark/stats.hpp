#pragma once

namespace indexmark {

/// Standard normal CDF.
[[nodiscard]] double normal_cdf(double x);

/// Inverse of the standard normal CDF for p in (0, 1); Wichura's AS 241
/// (PPND16), relative error around 1e-16.
[[nodiscard]] double inverse_normal_cdf(double p);

}  // namespace indexmark
