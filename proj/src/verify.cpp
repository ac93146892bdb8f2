#include "indexmark/verify.hpp"

#include <atomic>
#include <cmath>
#include <limits>

#include "indexmark/error.hpp"
#include "indexmark/stats.hpp"
#include "json.hpp"
#include "parallel.hpp"

namespace indexmark {

using nlohmann::json;

double operational_threshold(std::size_t n_idx) { return n_idx >= 1024 ? kThreshold1024 : kThreshold256; }

double critical_value(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorCode::kInvalidArgument, "beta must lie in (0, 1)");
  return -inverse_normal_cdf(beta / 2.0);
}

CIParams CIParams::make(std::size_t n_idx, double beta) {
  if (n_idx == 0) throw Error(ErrorCode::kInvalidArgument, "n_idx must be positive");
  return {n_idx, beta, critical_value(beta)};
}

ConfidenceInterval confidence_interval(std::size_t n_idx, double beta) {
  const auto params = CIParams::make(n_idx, beta);
  const double high = 0.5 + params.z / (2.0 * std::sqrt(static_cast<double>(n_idx)));
  return {1.0 - high, high};
}

double resolve_threshold(std::size_t n_idx, std::optional<double> threshold, std::optional<double> beta) {
  if (threshold) return *threshold;
  if (!beta) return operational_threshold(n_idx);
  const double high = confidence_interval(n_idx, *beta).high;
  if (high > 1.0) throw Error(ErrorCode::kInvalidThreshold, "grid too small for the requested beta");
  return high;
}

GreenCount green_rate(const IndexGrid& grid, const Partition& part) {
  if (grid.size() == 0) throw Error(ErrorCode::kEmptyInput, "green_rate: empty grid");
  grid.validate(part.size());
  const auto& mask = part.green_mask();
  GreenCount out;
  out.total = grid.size();
  for (auto idx : grid.indices) out.green += mask[idx] ? 1 : 0;
  out.rate = static_cast<double>(out.green) / static_cast<double>(out.total);
  return out;
}

VerificationReport verify(const IndexGrid& grid, const Partition& part, double threshold, std::optional<double> beta) {
  if (!(threshold > 0.5 && threshold <= 1.0)) throw Error(ErrorCode::kInvalidThreshold, "threshold must lie in (0.5, 1]");
  const auto count = green_rate(grid, part);
  VerificationReport report;
  report.green = count.green;
  report.total = count.total;
  report.rate = count.rate;
  report.threshold = threshold;
  report.decision = count.rate >= threshold;
  if (beta) report.ci = confidence_interval(count.total, *beta);
  return report;
}

VerificationReport verify_cropped(const PatchImage& img, const Codebook& cb, const Partition& part,
                                  const CropSearchConfig& cfg) {
  if (cfg.patch_px == 0) throw Error(ErrorCode::kInvalidArgument, "patch_px must be positive");
  if (!(cfg.threshold > 0.5 && cfg.threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidThreshold, "threshold must lie in (0.5, 1]");
  }
  if (cfg.beta) (void)critical_value(*cfg.beta);
  img.validate();
  const std::size_t p = cfg.patch_px;
  if (img.height < 2 * p || img.width < 2 * p) {
    throw Error(ErrorCode::kInvalidArgument, "verify_cropped: image smaller than two patches per axis");
  }
  if (cb.size() != part.size()) throw Error(ErrorCode::kDimensionMismatch, "codebook and partition sizes differ");

  struct Candidate {
    GreenCount count;
    double threshold = 0.0;
    bool evaluated = false;
  };
  const std::size_t n_candidates = p * p;
  std::vector<Candidate> candidates(n_candidates);
  // A candidate at rate 1.0 cannot be beaten, so later offsets are skipped once
  // one is found.
  std::atomic<std::size_t> first_perfect{n_candidates};
  detail::parallel_for(n_candidates, [&](std::size_t k) {
    if (k > first_perfect.load()) return;
    const auto grid = encode_region(img, k / p, k % p, cb, CodecConfig{p});
    auto& cand = candidates[k];
    cand.count = green_rate(grid, part);
    cand.threshold = cfg.beta ? confidence_interval(cand.count.total, *cfg.beta).high : cfg.threshold;
    cand.evaluated = true;
    if (cand.count.green == cand.count.total) {
      std::size_t cur = first_perfect.load();
      while (k < cur && !first_perfect.compare_exchange_weak(cur, k)) {
      }
    }
  });

  std::size_t best = n_candidates;
  bool best_pass = false;
  for (std::size_t k = 0; k < n_candidates; ++k) {
    const auto& cand = candidates[k];
    if (!cand.evaluated) continue;
    const bool pass = cand.count.rate >= cand.threshold;
    if (best == n_candidates || (pass && !best_pass) ||
        (pass == best_pass && cand.count.rate > candidates[best].count.rate)) {
      best = k;
      best_pass = pass;
    }
  }

  const auto& chosen = candidates[best];
  VerificationReport report;
  report.green = chosen.count.green;
  report.total = chosen.count.total;
  report.rate = chosen.count.rate;
  report.threshold = chosen.threshold;
  report.decision = best_pass;
  report.best_offset = std::pair{best / p, best % p};
  if (cfg.beta) report.ci = confidence_interval(chosen.count.total, *cfg.beta);
  return report;
}

std::string report_to_json(const VerificationReport& r) {
  json j = {{"green", r.green}, {"total", r.total}, {"rate", r.rate},
            {"threshold", r.threshold}, {"decision", r.decision}, {"best_offset", nullptr}, {"ci", nullptr}};
  if (r.best_offset) j["best_offset"] = {r.best_offset->first, r.best_offset->second};
  if (r.ci) j["ci"] = {r.ci->low, r.ci->high};
  return j.dump();
}

VerificationReport report_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    VerificationReport r;
    r.green = j.at("green").get<std::size_t>();
    r.total = j.at("total").get<std::size_t>();
    r.rate = j.at("rate").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.decision = j.at("decision").get<bool>();
    if (const auto& off = j.at("best_offset"); !off.is_null()) {
      r.best_offset = std::pair{off.at(0).get<std::size_t>(), off.at(1).get<std::size_t>()};
    }
    if (const auto& ci = j.at("ci"); !ci.is_null()) r.ci = ConfidenceInterval{ci.at(0).get<double>(), ci.at(1).get<double>()};
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("report: ") + e.what());
  }
}

}  // namespace indexmark
