#include <cmath>
#include <random>

#include "doctest.h"
#include "indexmark/stats.hpp"
#include "indexmark/verify.hpp"
#include "pipeline.hpp"
#include "test_support.hpp"

using namespace indexmark;
using fixtures::code_of;

namespace {

Partition alternating(std::size_t n) {
  std::vector<bool> green(n);
  std::vector<std::uint32_t> partner(n);
  for (std::uint32_t i = 0; i < n; i += 2) {
    green[i] = true;
    partner[i] = i + 1;
    partner[i + 1] = i;
  }
  return Partition(std::move(green), std::move(partner));
}

IndexGrid grid_with_green(std::size_t h, std::size_t w, std::size_t green) {
  IndexGrid g{h, w, std::vector<std::uint32_t>(h * w, 1)};
  for (std::size_t i = 0; i < green; ++i) g.indices[i] = 0;
  return g;
}

}  // namespace

TEST_CASE("normal quantiles agree with the bisection oracle") {
  for (double p : {1e-12, 1e-6, 5e-5, 5e-4, 0.01, 0.025, 0.2, 0.5, 0.77, 0.975, 0.9995, 1 - 1e-9}) {
    const double expect = p < 0.5 ? -oracle::normal_upper_quantile(p) : oracle::normal_upper_quantile(1 - p);
    CHECK(std::fabs(inverse_normal_cdf(p) - expect) < 1e-9 * std::max(1.0, std::fabs(expect)));
    CHECK(normal_cdf(inverse_normal_cdf(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(code_of([] { (void)inverse_normal_cdf(0.0); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { (void)inverse_normal_cdf(1.0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("critical value and interval endpoints") {
  CHECK(std::fabs(critical_value(0.001) - oracle::normal_upper_quantile(0.0005)) < 1e-12);
  CHECK(std::fabs(critical_value(0.001) - 3.2905267314918948) < 1e-12);
  CHECK(std::fabs(critical_value(0.0001) - 3.890591886413094) < 1e-12);

  const auto ci256 = confidence_interval(256, 0.001);
  CHECK(std::fabs(ci256.high - (0.5 + oracle::normal_upper_quantile(0.0005) / 32.0)) < 1e-12);
  CHECK(std::fabs(ci256.high - 0.6028289603591217) < 1e-12);
  const auto ci1024 = confidence_interval(1024, 0.0001);
  CHECK(std::fabs(ci1024.high - 0.5607904982252045) < 1e-12);

  CHECK(kThreshold256 >= ci256.high);
  CHECK(kThreshold1024 >= ci1024.high);
  CHECK(operational_threshold(256) == kThreshold256);
  CHECK(operational_threshold(1023) == kThreshold256);
  CHECK(operational_threshold(1024) == kThreshold1024);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 1 + rng() % 5000;
    const double beta = std::ldexp(1.0, -static_cast<int>(1 + rng() % 30));
    const auto ci = confidence_interval(n, beta);
    CHECK(ci.low + ci.high == 1.0);
    CHECK(ci.low <= 0.5);
  }
  CHECK(code_of([] { (void)confidence_interval(0, 0.01); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { (void)confidence_interval(10, 1.0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("operational thresholds bound the exact binomial false-positive rate") {
  // P(green >= ceil(0.615 * 256)) for an unmarked 16x16 grid.
  const auto k256 = static_cast<unsigned>(std::ceil(kThreshold256 * 256));
  CHECK(k256 == 158);
  CHECK(oracle::binomial_half_upper_tail(256, k256) == doctest::Approx(1.0657e-4).epsilon(1e-3));
  CHECK(oracle::binomial_half_upper_tail(256, k256) <= 0.001);
  const auto k1024 = static_cast<unsigned>(std::ceil(kThreshold1024 * 1024));
  CHECK(oracle::binomial_half_upper_tail(1024, k1024) <= 0.0001);
}

TEST_CASE("threshold resolution") {
  CHECK(resolve_threshold(256, 0.7, 0.001) == 0.7);
  CHECK(resolve_threshold(256, std::nullopt, 0.001) == confidence_interval(256, 0.001).high);
  CHECK(resolve_threshold(256, std::nullopt, std::nullopt) == kThreshold256);
  CHECK(resolve_threshold(4096, std::nullopt, std::nullopt) == kThreshold1024);
  CHECK(code_of([] { (void)resolve_threshold(4, std::nullopt, 1e-6); }) == ErrorCode::kInvalidThreshold);
}

TEST_CASE("green rate counts") {
  const auto part = alternating(8);
  CHECK(green_rate(IndexGrid{1, 4, {0, 2, 4, 6}}, part).rate == 1.0);
  CHECK(green_rate(IndexGrid{1, 4, {1, 3, 5, 7}}, part).rate == 0.0);
  const auto mixed = green_rate(IndexGrid{2, 2, {0, 1, 2, 3}}, part);
  CHECK(mixed.green == 2);
  CHECK(mixed.total == 4);
  CHECK(mixed.rate == 0.5);
  CHECK(code_of([&] { (void)green_rate(IndexGrid{0, 0, {}}, part); }) == ErrorCode::kEmptyInput);
  CHECK(code_of([&] { (void)green_rate(IndexGrid{1, 1, {8}}, part); }) == ErrorCode::kIndexOutOfRange);
}

TEST_CASE("unmarked random grids sit at one half") {
  const auto part = alternating(64);
  std::mt19937_64 rng(9);
  double sum = 0.0;
  std::size_t detections = 0;
  for (int i = 0; i < 1000; ++i) {
    IndexGrid g{16, 16, std::vector<std::uint32_t>(256)};
    for (auto& v : g.indices) v = static_cast<std::uint32_t>(rng() % 64);
    const auto rep = verify(g, part, kThreshold256);
    sum += rep.rate;
    detections += rep.decision;
  }
  CHECK(std::fabs(sum / 1000 - 0.5) < 0.01);
  // About 0.1 expected at the exact tail of 1.07e-4.
  CHECK(detections <= 3);
}

TEST_CASE("decision uses >= and validates the threshold") {
  const auto part = alternating(2);
  CHECK(verify(grid_with_green(2, 2, 3), part, 0.75).decision);
  CHECK_FALSE(verify(grid_with_green(2, 2, 2), part, 0.75).decision);
  CHECK(verify(grid_with_green(16, 16, 158), part, kThreshold256).decision);
  CHECK_FALSE(verify(grid_with_green(16, 16, 157), part, kThreshold256).decision);
  CHECK(verify(grid_with_green(1, 1, 1), part, 1.0).decision);
  CHECK(code_of([&] { (void)verify(grid_with_green(2, 2, 2), part, 0.5); }) == ErrorCode::kInvalidThreshold);
  CHECK(code_of([&] { (void)verify(grid_with_green(2, 2, 2), part, 1.01); }) == ErrorCode::kInvalidThreshold);

  const auto with_ci = verify(grid_with_green(16, 16, 200), part, kThreshold256, 0.001);
  REQUIRE(with_ci.ci.has_value());
  CHECK(with_ci.ci->high == confidence_interval(256, 0.001).high);
  CHECK_FALSE(verify(grid_with_green(16, 16, 200), part, kThreshold256).ci.has_value());
}

TEST_CASE("report JSON round trip") {
  VerificationReport r{150, 256, 150 / 256.0, 0.615, false, ConfidenceInterval{0.4, 0.6}, std::pair<std::size_t, std::size_t>{3, 5}};
  const auto back = report_from_json(report_to_json(r));
  CHECK(back.green == 150);
  CHECK(back.total == 256);
  CHECK(back.rate == r.rate);
  CHECK(back.threshold == 0.615);
  CHECK_FALSE(back.decision);
  REQUIRE(back.ci.has_value());
  CHECK(back.ci->low == 0.4);
  REQUIRE(back.best_offset.has_value());
  CHECK(*back.best_offset == std::pair<std::size_t, std::size_t>{3, 5});

  const auto plain = report_from_json(report_to_json(VerificationReport{1, 1, 1.0, 0.6, true, {}, {}}));
  CHECK_FALSE(plain.ci.has_value());
  CHECK_FALSE(plain.best_offset.has_value());
  CHECK(code_of([] { (void)report_from_json("{}"); }) == ErrorCode::kParse);
}

TEST_CASE("crop search recovers the patch alignment") {
  const auto setup = fixtures::Setup::make(21);
  const auto img = setup.image(setup.marked_grid(setup.trace(16, 5)));
  const CropSearchConfig cfg{};

  const auto whole = verify_cropped(img, setup.codebook, setup.partition, cfg);
  CHECK(whole.decision);
  CHECK(whole.rate == 1.0);
  CHECK(*whole.best_offset == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(whole.total == 256);

  const auto cropped = crop_image(img, 11, 10, 96, 96);
  const auto rep = verify_cropped(cropped, setup.codebook, setup.partition, cfg);
  CHECK(rep.decision);
  CHECK(rep.rate == 1.0);
  CHECK(*rep.best_offset == std::pair<std::size_t, std::size_t>{5, 6});
  CHECK(rep.total == 11 * 11);

  CropSearchConfig with_beta{};
  with_beta.beta = 0.001;
  const auto rb = verify_cropped(cropped, setup.codebook, setup.partition, with_beta);
  CHECK(rb.decision);
  REQUIRE(rb.ci.has_value());
  CHECK(rb.threshold == confidence_interval(121, 0.001).high);
}

TEST_CASE("crop search on unmarked images") {
  const auto setup = fixtures::Setup::make(22);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t detections = 0;
  for (int i = 0; i < 20; ++i) {
    PatchImage noise(128, 128);
    for (auto& v : noise.pixels) v = unit(rng);
    const auto rep = verify_cropped(noise, setup.codebook, setup.partition, CropSearchConfig{});
    detections += rep.decision;
    CHECK(rep.best_offset.has_value());
  }
  // Union bound over 64 offsets of P(Bin(225, 1/2) >= 158) is below 1e-8.
  CHECK(detections == 0);

  const auto unmarked = setup.image(setup.trace(16, 6).grid());
  CHECK_FALSE(verify_cropped(unmarked, setup.codebook, setup.partition, CropSearchConfig{}).decision);
}

TEST_CASE("crop search validates its inputs") {
  const auto setup = fixtures::Setup::make(23);
  const PatchImage tiny(15, 40, 0.5);
  CHECK(code_of([&] { (void)verify_cropped(tiny, setup.codebook, setup.partition, {}); }) ==
        ErrorCode::kInvalidArgument);
  CropSearchConfig bad{};
  bad.threshold = 0.4;
  CHECK(code_of([&] { (void)verify_cropped(PatchImage(32, 32, 0.5), setup.codebook, setup.partition, bad); }) ==
        ErrorCode::kInvalidThreshold);
  const Partition other({true, false}, {1, 0});
  CHECK(code_of([&] { (void)verify_cropped(PatchImage(32, 32, 0.5), setup.codebook, other, {}); }) ==
        ErrorCode::kDimensionMismatch);
}
