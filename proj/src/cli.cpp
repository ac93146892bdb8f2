#include "indexmark/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "binary_io.hpp"
#include "indexmark/attack.hpp"
#include "indexmark/codebook.hpp"
#include "indexmark/codec.hpp"
#include "indexmark/embed.hpp"
#include "indexmark/error.hpp"
#include "indexmark/image.hpp"
#include "indexmark/keying.hpp"
#include "indexmark/pairing.hpp"
#include "indexmark/simulate.hpp"
#include "indexmark/verify.hpp"
#include "json.hpp"

namespace indexmark {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes to the --out path when given, otherwise to standard output.
void emit(const std::string& text, const std::optional<fs::path>& path, std::ostream& out) {
  if (path) {
    detail::write_text(*path, text + "\n");
  } else {
    out << text << "\n";
  }
}

Partition load_partition(const fs::path& pairs, const std::string& key_hex) {
  return derive_partition(load_pairing(pairs), WatermarkKey::from_hex(key_hex));
}

enum class InputKind { kGrid, kImage };

InputKind sniff(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  const std::string tag(magic, static_cast<std::size_t>(in.gcount()));
  if (tag == "IMIG") return InputKind::kGrid;
  if (tag == "IMPX" || tag.rfind("P5", 0) == 0) return InputKind::kImage;
  throw Error(ErrorCode::kBadMagic, path.string() + ": not an IMIG, IMPX or PGM file");
}

int decision_code(const VerificationReport& r) { return r.decision ? kExitPresent : kExitAbsent; }

struct Common {
  std::string codebook;
  std::string pairs;
  std::string key;
  std::optional<fs::path> out;
  std::optional<double> threshold;
  std::optional<double> beta;
  std::size_t patch_px = 8;
  std::optional<std::uint64_t> seed;
};

void add_threshold_flags(CLI::App* sub, Common& c) {
  sub->add_option("--threshold", c.threshold, "Decision threshold in (0.5, 1]")
      ->check(CLI::Range(0.5, 1.0))
      ->check([](const std::string& s) { return std::stod(s) > 0.5 ? std::string() : "threshold must exceed 0.5"; });
  sub->add_option("--beta", c.beta, "Confidence level for the interval threshold, in (0, 1)")
      ->check([](const std::string& s) {
        const double b = std::stod(s);
        return b > 0.0 && b < 1.0 ? std::string() : "beta must lie in (0, 1)";
      });
}

std::vector<double> random_unit_rows(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> values(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        values[i * dim + k] = normal(rng);
        norm += values[i * dim + k] * values[i * dim + k];
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < dim; ++k) values[i * dim + k] = static_cast<float>(values[i * dim + k] / norm);
  }
  return values;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Codebook-pair watermarking for VQ index grids"};
  app.name("indexmark");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Common c;

  // pair
  auto* pair = app.add_subcommand("pair", "Pair codebook entries by maximum-weight matching");
  PairingConfig pair_cfg;
  std::string fallback = "greedy";
  pair->add_option("--codebook", c.codebook, "IMCB codebook")->required();
  pair->add_option("--top-k", pair_cfg.top_k, "Neighbours kept per entry")->check(CLI::PositiveNumber);
  pair->add_option("--fallback", fallback, "greedy or error, when the pruned graph has no perfect matching")
      ->check(CLI::IsMember({"greedy", "error"}));
  pair->add_option("--out", c.out, "Pairing JSON output");

  // oracle-match
  auto* oracle = app.add_subcommand("oracle-match", "Brute-force matching over the complete graph (N <= 14)");
  oracle->add_option("--codebook", c.codebook, "IMCB codebook")->required();
  oracle->add_option("--out", c.out, "Pairing JSON output");

  // embed
  auto* embed = app.add_subcommand("embed", "Replace red indices of a generation trace");
  EmbedConfig embed_cfg;
  std::string trace_path;
  embed->add_option("--pairs", c.pairs, "Pairing JSON")->required();
  embed->add_option("--key", c.key, "Watermark key (hex)")->required();
  embed->add_option("--trace", trace_path, "Trace JSONL")->required();
  embed->add_option("--quantile", embed_cfg.quantile, "Watermark strength in [0, 1]")->check(CLI::Range(0.0, 1.0));
  embed->add_option("--epsilon", embed_cfg.epsilon, "Floor for partner probabilities")->check(CLI::PositiveNumber);
  embed->add_option("--out", c.out, "IMIG output")->required();

  // decode
  auto* decode_cmd = app.add_subcommand("decode", "Render an index grid with the toy codec");
  std::string grid_path;
  decode_cmd->add_option("--grid", grid_path, "IMIG index grid")->required();
  decode_cmd->add_option("--codebook", c.codebook, "IMCB codebook")->required();
  decode_cmd->add_option("--patch-px", c.patch_px, "Block side in pixels")->check(CLI::PositiveNumber);
  decode_cmd->add_option("--out", c.out, "Image output (.pgm for PGM, IMPX otherwise)")->required();

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Test a grid or image for the watermark");
  std::string input_path;
  verify_cmd->add_option("--input", input_path, "IMIG grid, IMPX or PGM image")->required();
  verify_cmd->add_option("--pairs", c.pairs, "Pairing JSON")->required();
  verify_cmd->add_option("--key", c.key, "Watermark key (hex)")->required();
  verify_cmd->add_option("--codebook", c.codebook, "IMCB codebook, required for image input");
  verify_cmd->add_option("--patch-px", c.patch_px, "Block side in pixels")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--out", c.out, "Also write the report here");
  add_threshold_flags(verify_cmd, c);

  // verify-crop
  auto* crop_cmd = app.add_subcommand("verify-crop", "Test a possibly cropped image by patch-offset search");
  crop_cmd->add_option("--input", input_path, "IMPX or PGM image")->required();
  crop_cmd->add_option("--codebook", c.codebook, "IMCB codebook")->required();
  crop_cmd->add_option("--pairs", c.pairs, "Pairing JSON")->required();
  crop_cmd->add_option("--key", c.key, "Watermark key (hex)")->required();
  crop_cmd->add_option("--patch-px", c.patch_px, "Block side in pixels")->check(CLI::PositiveNumber);
  crop_cmd->add_option("--out", c.out, "Also write the report here");
  add_threshold_flags(crop_cmd, c);

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "Apply one image perturbation");
  std::string kind_name;
  std::map<AttackKind, std::optional<double>> kind_params;
  attack_cmd->add_option("--input", input_path, "IMPX or PGM image")->required();
  attack_cmd->add_option("--kind", kind_name, "blur, noise, jpeg_like, brightness, erase or crop")
      ->required()
      ->check(CLI::IsMember({"blur", "noise", "jpeg_like", "brightness", "erase", "crop"}));
  attack_cmd->add_option("--kernel-size", kind_params[AttackKind::kBlur], "blur: odd kernel size (11)");
  attack_cmd->add_option("--sigma", kind_params[AttackKind::kNoise], "noise: standard deviation (0.01)");
  attack_cmd->add_option("--quality", kind_params[AttackKind::kJpegLike], "jpeg_like: quality 1-100 (70)");
  attack_cmd->add_option("--jitter", kind_params[AttackKind::kBrightness], "brightness: factor jitter (0.5)");
  attack_cmd->add_option("--fraction", kind_params[AttackKind::kErase], "erase: area fraction (0.10)");
  attack_cmd->add_option("--keep", kind_params[AttackKind::kCrop], "crop: kept linear fraction (0.75)");
  attack_cmd->add_option("--seed", c.seed, "Seed, required for stochastic kinds");
  attack_cmd->add_option("--out", c.out, "Image output")->required();

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "End-to-end synthetic experiment");
  SimulationConfig sim_cfg;
  std::vector<std::string> sim_attacks = {"noise", "erase", "crop"};
  std::optional<fs::path> dump_dir;
  std::size_t grid_side = 16;
  sim_cmd->add_option("--seed", c.seed, "Experiment seed")->required();
  sim_cmd->add_option("--runs", sim_cfg.runs, "Number of runs")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--n", sim_cfg.n_entries, "Codebook size (even)")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--grid", grid_side, "Grid side in blocks")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--patch-px", c.patch_px, "Block side in pixels")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--quantile", sim_cfg.quantile, "Watermark strength in [0, 1]")->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--attacks", sim_attacks, "Attacks besides clean (default: noise erase crop)")
      ->delimiter(',')
      ->check(CLI::IsMember({"blur", "noise", "jpeg_like", "brightness", "erase", "crop"}));
  sim_cmd->add_option("--key", sim_cfg.key_hex, "Watermark key (hex)");
  sim_cmd->add_option("--dump-dir", dump_dir, "Write every intermediate artifact here");
  sim_cmd->add_option("--out", c.out, "Summary JSON output");
  add_threshold_flags(sim_cmd, c);

  // bench
  auto* bench = app.add_subcommand("bench", "Time pairing and verification on random data");
  std::size_t bench_n = 16384;
  std::size_t bench_dim = 8;
  std::size_t bench_grids = 10000;
  std::size_t bench_grid_side = 16;
  bench->add_option("--n", bench_n, "Codebook size (even)")->check(CLI::PositiveNumber);
  bench->add_option("--dim", bench_dim, "Vector dimension")->check(CLI::PositiveNumber);
  bench->add_option("--top-k", pair_cfg.top_k, "Neighbours kept per entry")->check(CLI::PositiveNumber);
  bench->add_option("--grids", bench_grids, "Random grids to verify")->check(CLI::PositiveNumber);
  bench->add_option("--grid", bench_grid_side, "Grid side in indices")->check(CLI::PositiveNumber);
  bench->add_option("--seed", c.seed, "Seed")->required();
  bench->add_option("--out", c.out, "Summary JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPresent : kExitUsage;
  }

  try {
    if (pair->parsed()) {
      pair_cfg.fallback = fallback == "error" ? FallbackPolicy::kError : FallbackPolicy::kGreedyComplete;
      emit(pairset_to_json(pair_codebook(load_codebook(c.codebook), pair_cfg)), c.out, out);
      return 0;
    }
    if (oracle->parsed()) {
      const auto cb = load_codebook(c.codebook);
      emit(pairset_to_json(brute_force_mwpm(build_complete_graph(cb))), c.out, out);
      return 0;
    }
    if (embed->parsed()) {
      const auto part = load_partition(c.pairs, c.key);
      const auto result = embed_watermark(load_trace(trace_path), part, embed_cfg);
      save_index_grid(result.indices, *c.out);
      err << "replaced " << result.replaced << " of " << result.red_total << " red positions\n";
      return 0;
    }
    if (decode_cmd->parsed()) {
      save_image(decode(load_index_grid(grid_path), load_codebook(c.codebook), CodecConfig{c.patch_px}), *c.out);
      return 0;
    }
    if (verify_cmd->parsed()) {
      const auto part = load_partition(c.pairs, c.key);
      IndexGrid grid;
      if (sniff(input_path) == InputKind::kGrid) {
        grid = load_index_grid(input_path);
      } else {
        if (c.codebook.empty()) throw UsageError("verify: --codebook is required for image input");
        grid = encode(load_image(input_path), load_codebook(c.codebook), CodecConfig{c.patch_px});
      }
      const auto report = verify(grid, part, resolve_threshold(grid.size(), c.threshold, c.beta), c.beta);
      const auto text = report_to_json(report);
      if (c.out) detail::write_text(*c.out, text + "\n");
      out << text << "\n";
      return decision_code(report);
    }
    if (crop_cmd->parsed()) {
      const auto part = load_partition(c.pairs, c.key);
      CropSearchConfig cfg{c.patch_px, c.threshold.value_or(kCropThreshold), c.threshold ? std::nullopt : c.beta};
      const auto report = verify_cropped(load_image(input_path), load_codebook(c.codebook), part, cfg);
      const auto text = report_to_json(report);
      if (c.out) detail::write_text(*c.out, text + "\n");
      out << text << "\n";
      return decision_code(report);
    }
    if (attack_cmd->parsed()) {
      const auto kind = *parse_attack_kind(kind_name);
      for (const auto& [k, v] : kind_params) {
        if (v && k != kind) throw UsageError("attack: flag does not apply to --kind " + kind_name);
      }
      const bool stochastic = kind != AttackKind::kBlur && kind != AttackKind::kJpegLike;
      if (stochastic && !c.seed) throw UsageError("attack: --seed is required for --kind " + kind_name);
      auto spec = AttackSpec::defaults(kind, c.seed.value_or(0));
      if (kind_params[kind]) spec.param = *kind_params[kind];
      try {
        spec.validate();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      save_image(attack(load_image(input_path), spec), *c.out);
      return 0;
    }
    if (sim_cmd->parsed()) {
      sim_cfg.seed = *c.seed;
      sim_cfg.patch_px = c.patch_px;
      sim_cfg.grid_h = sim_cfg.grid_w = grid_side;
      sim_cfg.threshold = c.threshold;
      sim_cfg.beta = c.beta;
      for (const auto& name : sim_attacks) sim_cfg.attacks.push_back(AttackSpec::defaults(*parse_attack_kind(name)));
      emit(summary_to_json(run_simulation(sim_cfg, dump_dir)), c.out, out);
      return 0;
    }
    if (bench->parsed()) {
      const Codebook cb(bench_n, bench_dim, random_unit_rows(bench_n, bench_dim, derive_seed(*c.seed, 0)));

      auto t0 = std::chrono::steady_clock::now();
      const auto graph = build_pruned_graph(cb, pair_cfg);
      const double graph_s = seconds_since(t0);
      t0 = std::chrono::steady_clock::now();
      const auto ps = pair_codebook(cb, pair_cfg);
      const double pair_s = seconds_since(t0);

      std::vector<bool> green(bench_n);
      std::vector<std::uint32_t> partner(bench_n);
      for (std::size_t i = 0; i < bench_n; i += 2) {
        green[i] = true;
        partner[i] = static_cast<std::uint32_t>(i + 1);
        partner[i + 1] = static_cast<std::uint32_t>(i);
      }
      const Partition part(std::move(green), std::move(partner));
      std::mt19937_64 rng(derive_seed(*c.seed, 1));
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(bench_n - 1));
      IndexGrid grid{bench_grid_side, bench_grid_side, std::vector<std::uint32_t>(bench_grid_side * bench_grid_side)};
      std::size_t detections = 0;
      t0 = std::chrono::steady_clock::now();
      for (std::size_t g = 0; g < bench_grids; ++g) {
        for (auto& idx : grid.indices) idx = pick(rng);
        detections += verify(grid, part, operational_threshold(grid.size())).decision ? 1 : 0;
      }
      const double verify_s = seconds_since(t0);

      json j = {{"n", bench_n},
                {"dim", bench_dim},
                {"top_k", pair_cfg.top_k},
                {"graph_edges", graph.edges.size()},
                {"graph_seconds", graph_s},
                {"pairing_seconds", pair_s},
                {"fallback_pairs", ps.fallback_pairs},
                {"total_weight", ps.total_weight},
                {"verify_grids", bench_grids},
                {"verify_seconds", verify_s},
                {"false_positive_rate", static_cast<double>(detections) / static_cast<double>(bench_grids)}};
      emit(j.dump(2), c.out, out);
      return 0;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return kExitRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitUsage;
}

}  // namespace indexmark
