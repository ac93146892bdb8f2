#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "indexmark/codebook.hpp"
#include "indexmark/keying.hpp"

namespace indexmark {

/// One generated position: the sampled index, its probability, and the
/// probability the model gave the index's pair partner at the same step.
struct TraceStep {
  std::uint32_t index = 0;
  double prob = 1.0;       // in (0, 1]
  double pair_prob = 0.0;  // in [0, 1]; 0 when the partner was truncated away

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct GenerationTrace {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<TraceStep> steps;  // row-major, height * width entries

  [[nodiscard]] IndexGrid grid() const;
  void validate() const;

  friend bool operator==(const GenerationTrace&, const GenerationTrace&) = default;
};

struct EmbedConfig {
  double quantile = 1.0;   // watermark strength q in [0, 1]
  double epsilon = 1e-12;  // floor for the partner probability
};

struct EmbedResult {
  IndexGrid indices;
  std::size_t replaced = 0;
  std::size_t red_total = 0;
  std::vector<std::size_t> red_positions;  // ascending
  std::vector<double> relative_confs;      // parallel to red_positions
};

/// ln(prob / max(pair_prob, eps)).
[[nodiscard]] double relative_confidence(const TraceStep& step, double eps);

/// Nearest-rank selection size ceil(q * n_red). Products within 1e-9 of an
/// integer are snapped to it, so q = 0.6 with n_red = 5 selects 3.
[[nodiscard]] std::size_t replacement_count(double quantile, std::size_t n_red);

/// Replaces the ceil(q * N_red) red positions of smallest relative confidence
/// (ties by position) with their green partners. Green positions are never
/// touched.
[[nodiscard]] EmbedResult embed_watermark(const GenerationTrace& trace, const Partition& part,
                                          const EmbedConfig& cfg);

/// Zeroes every red entry of a probability vector and renormalises.
[[nodiscard]] std::vector<double> mask_red_logits(std::span<const double> dist, const Partition& part);

/// JSON-lines trace: a {"h","w","n"} header, then one {"idx","p","pp"} per step.
[[nodiscard]] GenerationTrace parse_trace(const std::string& text);
[[nodiscard]] std::string trace_to_jsonl(const GenerationTrace& trace);
[[nodiscard]] GenerationTrace load_trace(const std::filesystem::path& path);
void save_trace(const GenerationTrace& trace, const std::filesystem::path& path);

}  // namespace indexmark
