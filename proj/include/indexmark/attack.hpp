#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "indexmark/image.hpp"

namespace indexmark {

enum class AttackKind { kBlur, kNoise, kJpegLike, kBrightness, kErase, kCrop };

[[nodiscard]] std::string_view to_string(AttackKind kind);
[[nodiscard]] std::optional<AttackKind> parse_attack_kind(std::string_view name);

/// One perturbation with a single kind-specific parameter:
///   blur        odd Gaussian kernel size (default 11)
///   noise       standard deviation of additive Gaussian noise (0.01)
///   jpeg_like   quality in [1, 100] (70)
///   brightness  jitter j in [0, 1): factor drawn from U[1 - j, 1 + j] (0.5)
///   erase       zeroed area fraction in [0, 1] (0.10)
///   crop        kept linear fraction in (0, 1] (0.75)
struct AttackSpec {
  AttackKind kind = AttackKind::kBlur;
  double param = 11.0;
  std::uint64_t seed = 0;

  [[nodiscard]] static AttackSpec defaults(AttackKind kind, std::uint64_t seed = 0);
  void validate() const;
};

/// Gaussian sigma used for a blur kernel of the given size.
[[nodiscard]] double blur_sigma(int kernel_size);

/// Applies the attack. Stochastic kinds are pure functions of (img, spec).
[[nodiscard]] PatchImage attack(const PatchImage& img, const AttackSpec& spec);

}  // namespace indexmark
