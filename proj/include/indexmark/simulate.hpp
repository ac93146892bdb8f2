#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "indexmark/attack.hpp"
#include "indexmark/codebook.hpp"
#include "indexmark/embed.hpp"
#include "indexmark/keying.hpp"
#include "indexmark/verify.hpp"

namespace indexmark {

[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the k-th independent stream derived from a base seed.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k);

inline constexpr double kSyntheticSpread = 0.2;

/// Codebook of Gaussian patterns centred on 0.5 with pixel standard deviation
/// kSyntheticSpread, so rows share their mean and norm up to float rounding.
/// Rows are redrawn until every pixel lies in [0, 1] and all pairwise
/// Euclidean gaps are at least min_gap.
[[nodiscard]] Codebook synthetic_codebook(std::size_t n_entries, std::size_t patch_px, double min_gap,
                                          std::uint64_t seed);

/// Random trace with uniform indices. p and pp sum to at most 1; about one
/// step in ten has its partner truncated (pp = 0). Values are float32-exact.
[[nodiscard]] GenerationTrace synthetic_trace(std::size_t height, std::size_t width, std::size_t n_entries,
                                              std::uint64_t seed);

struct SimulationConfig {
  std::size_t n_entries = 64;
  std::size_t patch_px = 8;
  std::size_t grid_h = 16;
  std::size_t grid_w = 16;
  std::size_t runs = 200;
  double quantile = 1.0;
  double noise_sigma = 0.01;     // sets the required codebook gap
  double gap_factor = 10.0;      // min gap = gap_factor * noise_sigma * patch_px
  std::vector<AttackSpec> attacks;  // seeds are replaced per run; none = clean only
  std::optional<double> threshold;  // override of the operational default
  std::optional<double> beta;
  std::uint64_t seed = 0;
  std::string key_hex = "696e6465786d61726b";
};

struct AttackOutcome {
  std::string name;  // "clean" or the attack kind
  std::size_t runs = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  double mean_rate_marked = 0.0;
  double mean_rate_unmarked = 0.0;

  [[nodiscard]] double accuracy() const;  // over one marked and one unmarked image per run
  [[nodiscard]] double tpr() const;
  [[nodiscard]] double fpr() const;
};

struct SimulationSummary {
  SimulationConfig config;
  double codebook_gap = 0.0;
  // Watermarked vs. unwatermarked decode before any attack. PSNR is averaged
  // over runs where the images differ; identical_runs counts the rest.
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::size_t identical_runs = 0;
  std::vector<AttackOutcome> outcomes;  // "clean" first, then config.attacks in order
};

/// For each run: synthetic trace -> embed -> decode -> attack -> verify, with an
/// unembedded control image taken through the same attack. Crop attacks are
/// verified with the offset search, everything else by direct re-encoding.
/// With dump_dir set, every intermediate artifact is written there.
[[nodiscard]] SimulationSummary run_simulation(const SimulationConfig& cfg,
                                               const std::optional<std::filesystem::path>& dump_dir = std::nullopt);

[[nodiscard]] std::string summary_to_json(const SimulationSummary& s);

}  // namespace indexmark
