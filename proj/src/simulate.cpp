#include "indexmark/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "binary_io.hpp"
#include "indexmark/codec.hpp"
#include "indexmark/error.hpp"
#include "indexmark/pairing.hpp"
#include "indexmark/quality.hpp"
#include "json.hpp"

namespace indexmark {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k) {
  return splitmix64(splitmix64(base) ^ (k * 0xd1b54a32d192ed03ULL));
}

Codebook synthetic_codebook(std::size_t n_entries, std::size_t patch_px, double min_gap, std::uint64_t seed) {
  const std::size_t d = patch_px * patch_px;
  if (d < 2) throw Error(ErrorCode::kInvalidArgument, "synthetic_codebook: patch_px must be at least 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> values;
  values.reserve(n_entries * d);
  std::vector<double> row(d);
  constexpr int kMaxAttempts = 100000;
  for (std::size_t i = 0; i < n_entries; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxAttempts) {
        throw Error(ErrorCode::kInvalidArgument, "synthetic_codebook: cannot reach the requested gap");
      }
      double mean = 0.0;
      for (auto& v : row) mean += (v = normal(rng));
      mean /= static_cast<double>(d);
      double sq = 0.0;
      for (auto& v : row) {
        v -= mean;
        sq += v * v;
      }
      const double scale = kSyntheticSpread / std::sqrt(sq / static_cast<double>(d));
      bool ok = true;
      for (auto& v : row) {
        v = static_cast<float>(0.5 + scale * v);
        ok = ok && v >= 0.0 && v <= 1.0;
      }
      for (std::size_t j = 0; j < i && ok; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += (row[k] - values[j * d + k]) * (row[k] - values[j * d + k]);
        ok = std::sqrt(acc) >= min_gap;
      }
      if (ok) break;
    }
    values.insert(values.end(), row.begin(), row.end());
  }
  return Codebook(n_entries, d, std::move(values));
}

GenerationTrace synthetic_trace(std::size_t height, std::size_t width, std::size_t n_entries, std::uint64_t seed) {
  if (n_entries == 0) throw Error(ErrorCode::kInvalidArgument, "synthetic_trace: empty codebook");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n_entries - 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GenerationTrace trace;
  trace.height = height;
  trace.width = width;
  trace.steps.reserve(height * width);
  for (std::size_t i = 0; i < height * width; ++i) {
    TraceStep step;
    step.index = pick(rng);
    step.prob = static_cast<float>(0.02 + 0.98 * unit(rng));
    const double partner = unit(rng) < 0.1 ? 0.0 : unit(rng) * (1.0 - step.prob);
    step.pair_prob = static_cast<float>(partner);
    trace.steps.push_back(step);
  }
  trace.validate();
  return trace;
}

double AttackOutcome::accuracy() const {
  if (runs == 0) return 0.0;
  return static_cast<double>(true_positives + (runs - false_positives)) / static_cast<double>(2 * runs);
}

double AttackOutcome::tpr() const { return runs ? static_cast<double>(true_positives) / static_cast<double>(runs) : 0.0; }
double AttackOutcome::fpr() const { return runs ? static_cast<double>(false_positives) / static_cast<double>(runs) : 0.0; }

namespace {

// Attacked images are held at the float32 precision of an IMPX file so that a
// dumped run replays bit-for-bit through the file-based tools.
PatchImage persisted(PatchImage img) {
  for (auto& p : img.pixels) p = static_cast<float>(p);
  return img;
}

VerificationReport detect(const PatchImage& img, bool cropped, const Codebook& cb, const Partition& part,
                          const SimulationConfig& cfg) {
  if (cropped) {
    CropSearchConfig crop{cfg.patch_px, cfg.threshold.value_or(kCropThreshold), cfg.threshold ? std::nullopt : cfg.beta};
    return verify_cropped(img, cb, part, crop);
  }
  const auto grid = encode(img, cb, CodecConfig{cfg.patch_px});
  return verify(grid, part, resolve_threshold(grid.size(), cfg.threshold, cfg.beta), cfg.beta);
}

json spec_json(const AttackSpec& spec) {
  return {{"kind", std::string(to_string(spec.kind))}, {"param", spec.param}, {"seed", spec.seed}};
}

}  // namespace

SimulationSummary run_simulation(const SimulationConfig& cfg, const std::optional<std::filesystem::path>& dump_dir) {
  if (cfg.runs == 0) throw Error(ErrorCode::kInvalidArgument, "simulate: runs must be positive");
  if (cfg.grid_h == 0 || cfg.grid_w == 0) throw Error(ErrorCode::kInvalidArgument, "simulate: empty grid");
  for (const auto& a : cfg.attacks) a.validate();

  SimulationSummary summary;
  summary.config = cfg;
  const double min_gap = cfg.gap_factor * cfg.noise_sigma * static_cast<double>(cfg.patch_px);
  const auto cb = synthetic_codebook(cfg.n_entries, cfg.patch_px, min_gap, derive_seed(cfg.seed, 0));
  summary.codebook_gap = min_row_gap(cb);
  const auto pairs = pair_codebook(cb, PairingConfig{});
  const auto key = WatermarkKey::from_hex(cfg.key_hex);
  const auto part = derive_partition(pairs, key);
  const CodecConfig codec{cfg.patch_px};

  if (dump_dir) {
    std::filesystem::create_directories(*dump_dir);
    save_codebook(cb, *dump_dir / "codebook.imcb");
    save_pairing(pairs, *dump_dir / "pairs.json");
    detail::write_text(*dump_dir / "key.txt", key.to_hex() + "\n");
  }

  summary.outcomes.resize(cfg.attacks.size() + 1);
  summary.outcomes[0].name = "clean";
  for (std::size_t a = 0; a < cfg.attacks.size(); ++a) summary.outcomes[a + 1].name = to_string(cfg.attacks[a].kind);

  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  std::size_t psnr_runs = 0;
  for (std::size_t run = 0; run < cfg.runs; ++run) {
    const auto trace = synthetic_trace(cfg.grid_h, cfg.grid_w, cfg.n_entries, derive_seed(cfg.seed, 2 * run + 1));
    const std::uint64_t attack_seed = derive_seed(cfg.seed, 2 * run + 2);
    const auto embedded = embed_watermark(trace, part, EmbedConfig{cfg.quantile});
    const auto marked = decode(embedded.indices, cb, codec);
    const auto unmarked = decode(trace.grid(), cb, codec);

    const double run_psnr = psnr(marked, unmarked);
    if (std::isinf(run_psnr)) {
      ++summary.identical_runs;
    } else {
      psnr_sum += run_psnr;
      ++psnr_runs;
    }
    ssim_sum += ssim(marked, unmarked);

    std::filesystem::path run_dir;
    if (dump_dir) {
      run_dir = *dump_dir / ("run_" + std::to_string(run));
      std::filesystem::create_directories(run_dir);
      save_trace(trace, run_dir / "trace.jsonl");
      save_index_grid(embedded.indices, run_dir / "marked.imig");
      save_index_grid(trace.grid(), run_dir / "unmarked.imig");
      save_image(marked, run_dir / "marked.impx");
      save_image(unmarked, run_dir / "unmarked.impx");
    }

    for (std::size_t a = 0; a <= cfg.attacks.size(); ++a) {
      auto& outcome = summary.outcomes[a];
      PatchImage marked_img = marked;
      PatchImage unmarked_img = unmarked;
      bool cropped = false;
      std::optional<AttackSpec> spec;
      if (a > 0) {
        spec = cfg.attacks[a - 1];
        spec->seed = attack_seed;
        cropped = spec->kind == AttackKind::kCrop;
        marked_img = persisted(attack(marked, *spec));
        unmarked_img = persisted(attack(unmarked, *spec));
      }
      const auto marked_report = detect(marked_img, cropped, cb, part, cfg);
      const auto unmarked_report = detect(unmarked_img, cropped, cb, part, cfg);
      ++outcome.runs;
      outcome.true_positives += marked_report.decision ? 1 : 0;
      outcome.false_positives += unmarked_report.decision ? 1 : 0;
      outcome.mean_rate_marked += marked_report.rate;
      outcome.mean_rate_unmarked += unmarked_report.rate;

      if (dump_dir) {
        const auto dir = run_dir / outcome.name;
        std::filesystem::create_directories(dir);
        if (spec) {
          detail::write_text(dir / "attack.json", spec_json(*spec).dump() + "\n");
          save_image(marked_img, dir / "marked.impx");
          save_image(unmarked_img, dir / "unmarked.impx");
        }
        detail::write_text(dir / "marked_report.json", report_to_json(marked_report) + "\n");
        detail::write_text(dir / "unmarked_report.json", report_to_json(unmarked_report) + "\n");
      }
    }
  }
  for (auto& outcome : summary.outcomes) {
    outcome.mean_rate_marked /= static_cast<double>(outcome.runs);
    outcome.mean_rate_unmarked /= static_cast<double>(outcome.runs);
  }
  summary.mean_psnr = psnr_runs ? psnr_sum / static_cast<double>(psnr_runs) : std::numeric_limits<double>::infinity();
  summary.mean_ssim = ssim_sum / static_cast<double>(cfg.runs);
  return summary;
}

std::string summary_to_json(const SimulationSummary& s) {
  const auto& c = s.config;
  json attacks = json::array();
  for (const auto& a : c.attacks) attacks.push_back({{"kind", std::string(to_string(a.kind))}, {"param", a.param}});
  json outcomes = json::array();
  for (const auto& o : s.outcomes) {
    outcomes.push_back({{"attack", o.name},
                        {"runs", o.runs},
                        {"true_positives", o.true_positives},
                        {"false_positives", o.false_positives},
                        {"tpr", o.tpr()},
                        {"fpr", o.fpr()},
                        {"accuracy", o.accuracy()},
                        {"mean_rate_marked", o.mean_rate_marked},
                        {"mean_rate_unmarked", o.mean_rate_unmarked}});
  }
  json j = {{"config",
             {{"n", c.n_entries},
              {"patch_px", c.patch_px},
              {"grid", {c.grid_h, c.grid_w}},
              {"runs", c.runs},
              {"quantile", c.quantile},
              {"seed", c.seed},
              {"key", c.key_hex},
              {"threshold", c.threshold ? json(*c.threshold) : json(nullptr)},
              {"beta", c.beta ? json(*c.beta) : json(nullptr)},
              {"attacks", attacks}}},
            {"codebook_gap", s.codebook_gap},
            {"mean_psnr", std::isinf(s.mean_psnr) ? json(nullptr) : json(s.mean_psnr)},
            {"mean_ssim", s.mean_ssim},
            {"identical_runs", s.identical_runs},
            {"outcomes", outcomes}};
  return j.dump(2);
}

}  // namespace indexmark
