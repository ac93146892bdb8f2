#include "indexmark/embed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "binary_io.hpp"
#include "indexmark/error.hpp"
#include "json.hpp"

namespace indexmark {

using nlohmann::json;

IndexGrid GenerationTrace::grid() const {
  IndexGrid g;
  g.height = height;
  g.width = width;
  g.indices.reserve(steps.size());
  for (const auto& s : steps) g.indices.push_back(s.index);
  return g;
}

void GenerationTrace::validate() const {
  if (steps.empty()) throw Error(ErrorCode::kEmptyInput, "trace: empty trace");
  if (height * width != steps.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "trace: step count does not match grid shape");
  }
  for (const auto& s : steps) {
    if (!(s.prob > 0.0 && s.prob <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "trace: p must lie in (0, 1]");
    if (!(s.pair_prob >= 0.0 && s.pair_prob <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "trace: pp must lie in [0, 1]");
    }
  }
}

double relative_confidence(const TraceStep& step, double eps) {
  return std::log(step.prob / std::max(step.pair_prob, eps));
}

std::size_t replacement_count(double quantile, std::size_t n_red) {
  const double target = quantile * static_cast<double>(n_red);
  const double nearest = std::round(target);
  if (std::fabs(target - nearest) <= 1e-9 * std::max(1.0, target)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(target));
}

EmbedResult embed_watermark(const GenerationTrace& trace, const Partition& part, const EmbedConfig& cfg) {
  trace.validate();
  if (!(cfg.quantile >= 0.0 && cfg.quantile <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "embed: quantile must lie in [0, 1]");
  }
  if (!(cfg.epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "embed: epsilon must be positive");

  EmbedResult result;
  result.indices = trace.grid();
  result.indices.validate(part.size());

  for (std::size_t pos = 0; pos < trace.steps.size(); ++pos) {
    const auto& step = trace.steps[pos];
    if (!part.is_green(step.index)) {
      result.red_positions.push_back(pos);
      result.relative_confs.push_back(relative_confidence(step, cfg.epsilon));
    }
  }
  result.red_total = result.red_positions.size();

  // Rank red positions by relative confidence; stable sort keeps position
  // order among equal values.
  std::vector<std::size_t> order(result.red_total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.relative_confs[a] < result.relative_confs[b];
  });

  result.replaced = replacement_count(cfg.quantile, result.red_total);
  for (std::size_t r = 0; r < result.replaced; ++r) {
    const std::size_t pos = result.red_positions[order[r]];
    auto& idx = result.indices.indices[pos];
    idx = part.pair_of(idx);
  }
  return result;
}

std::vector<double> mask_red_logits(std::span<const double> dist, const Partition& part) {
  if (dist.size() != part.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "mask_red_logits: distribution size differs from codebook");
  }
  double total = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::kInvalidArgument, "mask_red_logits: invalid probability");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-6) throw Error(ErrorCode::kInvalidArgument, "mask_red_logits: distribution must sum to 1");

  std::vector<double> out(dist.size(), 0.0);
  double green_mass = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (part.is_green(i)) green_mass += dist[i];
  }
  if (green_mass <= 0.0) throw Error(ErrorCode::kNoGreenSupport, "mask_red_logits: no green support");
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (part.is_green(i)) out[i] = dist[i] / green_mass;
  }
  return out;
}

GenerationTrace parse_trace(const std::string& text) {
  GenerationTrace trace;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::size_t expected = 0;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const json obj = json::parse(line);
      if (!have_header) {
        trace.height = obj.at("h").get<std::size_t>();
        trace.width = obj.at("w").get<std::size_t>();
        expected = obj.at("n").get<std::size_t>();
        if (expected != trace.height * trace.width) {
          throw Error(ErrorCode::kDimensionMismatch, "trace: header n differs from h*w");
        }
        trace.steps.reserve(expected);
        have_header = true;
        continue;
      }
      // p and pp are float32 fields.
      trace.steps.push_back({obj.at("idx").get<std::uint32_t>(),
                             static_cast<double>(obj.at("p").get<float>()),
                             static_cast<double>(obj.at("pp").get<float>())});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, "trace line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw Error(ErrorCode::kParse, "trace: missing header line");
  if (trace.steps.size() != expected) {
    throw Error(ErrorCode::kDimensionMismatch, "trace: line count differs from header n");
  }
  trace.validate();
  return trace;
}

std::string trace_to_jsonl(const GenerationTrace& trace) {
  std::string out = json{{"h", trace.height}, {"w", trace.width}, {"n", trace.steps.size()}}.dump() + "\n";
  for (const auto& s : trace.steps) {
    // Probabilities are persisted at float32 precision.
    out += json{{"idx", s.index},
                {"p", static_cast<float>(s.prob)},
                {"pp", static_cast<float>(s.pair_prob)}}
               .dump();
    out += "\n";
  }
  return out;
}

GenerationTrace load_trace(const std::filesystem::path& path) { return parse_trace(detail::read_text(path)); }

void save_trace(const GenerationTrace& trace, const std::filesystem::path& path) {
  detail::write_text(path, trace_to_jsonl(trace));
}

}  // namespace indexmark
