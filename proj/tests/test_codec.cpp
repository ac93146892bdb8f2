#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "indexmark/attack.hpp"
#include "indexmark/quality.hpp"
#include "pipeline.hpp"
#include "test_support.hpp"

using namespace indexmark;
using fixtures::code_of;

namespace {

PatchImage random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PatchImage img(h, w);
  for (auto& v : img.pixels) v = unit(rng);
  return img;
}

double brute_min_gap(const Codebook& cb) {
  double best = INFINITY;
  for (std::size_t i = 0; i < cb.size(); ++i) {
    for (std::size_t j = i + 1; j < cb.size(); ++j) {
      double s = 0;
      for (std::size_t k = 0; k < cb.dim(); ++k) s += (cb.row(i)[k] - cb.row(j)[k]) * (cb.row(i)[k] - cb.row(j)[k]);
      best = std::min(best, std::sqrt(s));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("decode then encode is the identity on codebook images") {
  const auto setup = fixtures::Setup::make(1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto grid = setup.trace(4 + seed, seed).grid();
    const auto img = setup.image(grid);
    CHECK(img.height == grid.height * 8);
    CHECK(img.width == grid.width * 8);
    CHECK(encode(img, setup.codebook, setup.codec) == grid);
  }
}

TEST_CASE("decode tiles rows and clamps") {
  const Codebook cb(2, 4, {-1.0, 0.25, 0.5, 2.0, 0.1, 0.2, 0.3, 0.4});
  const auto img = decode(IndexGrid{1, 2, {0, 1}}, cb, CodecConfig{2});
  CHECK(img.pixels == std::vector<double>{0.0, 0.25, 0.1, 0.2, 0.5, 1.0, 0.3, 0.4});
  CHECK(code_of([&] { (void)decode(IndexGrid{1, 1, {0}}, cb, CodecConfig{3}); }) == ErrorCode::kDimensionMismatch);
  CHECK(code_of([&] { (void)decode(IndexGrid{1, 1, {2}}, cb, CodecConfig{2}); }) == ErrorCode::kIndexOutOfRange);
}

TEST_CASE("encode rejects partial blocks, encode_region drops them") {
  const auto setup = fixtures::Setup::make(2);
  const auto grid = setup.trace(5, 1).grid();
  const auto img = setup.image(grid);
  CHECK(code_of([&] { (void)encode(crop_image(img, 0, 0, 39, 40), setup.codebook, setup.codec); }) ==
        ErrorCode::kDimensionMismatch);

  const auto region = encode_region(img, 8, 16, setup.codebook, setup.codec);
  CHECK(region.height == 4);
  CHECK(region.width == 3);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(region.at(r, c) == grid.at(r + 1, c + 2));
  }
  CHECK(encode_region(img, 3, 3, setup.codebook, setup.codec).height == 4);
  CHECK(code_of([&] { (void)encode_region(img, 36, 0, setup.codebook, setup.codec); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("minimum row gap and the sup-norm margin") {
  const auto setup = fixtures::Setup::make(3);
  const double gap = min_row_gap(setup.codebook);
  CHECK(gap == doctest::Approx(brute_min_gap(setup.codebook)).epsilon(1e-12));
  CHECK(gap >= 0.8);

  std::mt19937_64 rng(8);
  const double margin = gap / (2.0 * 8);
  std::uniform_real_distribution<double> shake(-0.999 * margin, 0.999 * margin);
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    const auto grid = setup.trace(6, 100 + trial).grid();
    auto img = setup.image(grid);
    for (auto& v : img.pixels) v += shake(rng);
    CHECK(encode(img, setup.codebook, setup.codec) == grid);
  }
}

TEST_CASE("all-zero image encodes to the row nearest the origin") {
  const auto setup = fixtures::Setup::make(4);
  const auto grid = encode(PatchImage(16, 16, 0.0), setup.codebook, setup.codec);
  const auto expect = oracle::nearest_row(setup.codebook, std::vector<double>(64, 0.0));
  for (auto v : grid.indices) CHECK(v == expect);
}

TEST_CASE("attack parameter validation and names") {
  for (auto kind : {AttackKind::kBlur, AttackKind::kNoise, AttackKind::kJpegLike, AttackKind::kBrightness,
                    AttackKind::kErase, AttackKind::kCrop}) {
    CHECK(parse_attack_kind(to_string(kind)) == kind);
    CHECK_NOTHROW(AttackSpec::defaults(kind).validate());
  }
  CHECK_FALSE(parse_attack_kind("sharpen").has_value());
  CHECK(code_of([] { AttackSpec{AttackKind::kBlur, 4, 0}.validate(); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { AttackSpec{AttackKind::kNoise, -0.1, 0}.validate(); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { AttackSpec{AttackKind::kJpegLike, 0, 0}.validate(); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { AttackSpec{AttackKind::kBrightness, 1.0, 0}.validate(); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { AttackSpec{AttackKind::kErase, 1.5, 0}.validate(); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { AttackSpec{AttackKind::kCrop, 0.0, 0}.validate(); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("blur") {
  CHECK(blur_sigma(11) == doctest::Approx(1.8));
  CHECK(blur_sigma(3) == doctest::Approx(0.8));
  const PatchImage flat(20, 30, 0.4);
  const auto out = attack(flat, AttackSpec::defaults(AttackKind::kBlur));
  for (double v : out.pixels) CHECK(v == doctest::Approx(0.4).epsilon(1e-12));

  // An impulse spreads into a normalised, symmetric Gaussian.
  PatchImage dot(21, 21, 0.0);
  dot.at(10, 10) = 1.0;
  const auto spread = attack(dot, AttackSpec{AttackKind::kBlur, 5, 0});
  double total = 0.0;
  for (double v : spread.pixels) total += v;
  CHECK(total == doctest::Approx(1.0));
  CHECK(spread.at(10, 8) == doctest::Approx(spread.at(8, 10)));
  CHECK(spread.at(10, 12) == doctest::Approx(spread.at(10, 8)));
  CHECK(spread.at(10, 7) == 0.0);
}

TEST_CASE("noise") {
  const auto img = random_image(32, 32, 1);
  CHECK(attack(img, AttackSpec{AttackKind::kNoise, 0.0, 5}) == img);
  const PatchImage flat(64, 64, 0.5);
  const auto a = attack(flat, AttackSpec{AttackKind::kNoise, 0.05, 5});
  CHECK(a == attack(flat, AttackSpec{AttackKind::kNoise, 0.05, 5}));
  CHECK_FALSE(a == attack(flat, AttackSpec{AttackKind::kNoise, 0.05, 6}));
  double sum = 0, sq = 0;
  for (double v : a.pixels) {
    sum += v - 0.5;
    sq += (v - 0.5) * (v - 0.5);
  }
  const double n = 64 * 64;
  CHECK(std::fabs(sum / n) < 0.005);
  CHECK(std::sqrt(sq / n) == doctest::Approx(0.05).epsilon(0.05));
}

TEST_CASE("jpeg-like compression") {
  const PatchImage flat(24, 24, 0.5);
  const auto f = attack(flat, AttackSpec{AttackKind::kJpegLike, 70, 0});
  for (double v : f.pixels) CHECK(std::fabs(v - 0.5) < 0.5 / 255);

  const auto img = random_image(32, 40, 2);
  const double q95 = psnr(img, attack(img, AttackSpec{AttackKind::kJpegLike, 95, 0}));
  const double q30 = psnr(img, attack(img, AttackSpec{AttackKind::kJpegLike, 30, 0}));
  const double q5 = psnr(img, attack(img, AttackSpec{AttackKind::kJpegLike, 5, 0}));
  CHECK(q95 > q30);
  CHECK(q30 > q5);
  // Edge replication handles sizes that are not multiples of 8.
  CHECK(attack(random_image(13, 19, 3), AttackSpec{AttackKind::kJpegLike, 50, 0}).width == 19);
}

TEST_CASE("brightness jitter") {
  const PatchImage flat(8, 8, 0.4);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto out = attack(flat, AttackSpec{AttackKind::kBrightness, 0.5, seed});
    const double factor = out.pixels[0] / 0.4;
    CHECK(factor >= 0.5);
    CHECK(factor <= 1.5);
    for (double v : out.pixels) CHECK(v == doctest::Approx(out.pixels[0]));
  }
}

TEST_CASE("erase zeroes an exact area") {
  const PatchImage flat(128, 128, 0.5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto out = attack(flat, AttackSpec{AttackKind::kErase, 0.10, seed});
    std::size_t zeros = 0, same = 0;
    for (double v : out.pixels) {
      zeros += v == 0.0;
      same += v == 0.5;
    }
    CHECK(zeros == static_cast<std::size_t>(std::floor(0.10 * 128 * 128)));
    CHECK(zeros + same == 128 * 128);
  }
  CHECK(attack(flat, AttackSpec{AttackKind::kErase, 0.0, 1}) == flat);
}

TEST_CASE("random crop keeps a window of the original") {
  const auto img = random_image(128, 96, 5);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto out = attack(img, AttackSpec{AttackKind::kCrop, 0.75, seed});
    REQUIRE(out.height == 96);
    REQUIRE(out.width == 72);
    bool found = false;
    for (std::size_t t = 0; t <= 32 && !found; ++t) {
      for (std::size_t l = 0; l <= 24 && !found; ++l) found = crop_image(img, t, l, 96, 72) == out;
    }
    CHECK(found);
  }
  CHECK(attack(img, AttackSpec{AttackKind::kCrop, 1.0, 3}) == img);
}

TEST_CASE("psnr") {
  const auto img = random_image(16, 16, 6);
  CHECK(std::isinf(psnr(img, img)));
  auto shifted = PatchImage(16, 16, 0.3);
  const auto base = PatchImage(16, 16, 0.2);
  CHECK(psnr(base, shifted) == doctest::Approx(20.0));
  const auto other = random_image(16, 16, 7);
  CHECK(std::fabs(psnr(img, other) - 10 * std::log10(1.0 / oracle::mse(img, other))) < 1e-9);
  CHECK(code_of([&] { (void)psnr(img, PatchImage(16, 15)); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("ssim") {
  const auto img = random_image(40, 33, 8);
  CHECK(ssim(img, img) == doctest::Approx(1.0));
  const auto other = random_image(40, 33, 9);
  CHECK(std::fabs(ssim(img, other) - oracle::windowed_ssim(img, other)) < 1e-6);
  auto blurred = attack(img, AttackSpec::defaults(AttackKind::kBlur));
  CHECK(std::fabs(ssim(img, blurred) - oracle::windowed_ssim(img, blurred)) < 1e-6);
  CHECK(ssim(img, blurred) > ssim(img, other));
  CHECK(ssim(PatchImage(12, 12, 0.5), PatchImage(12, 12, 0.5)) == doctest::Approx(1.0));
  CHECK(code_of([] { (void)ssim(PatchImage(10, 20, 0.5), PatchImage(10, 20, 0.5)); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("IMPX round trip at float32") {
  auto img = random_image(5, 7, 10);
  for (auto& v : img.pixels) v = static_cast<float>(v);
  const auto bytes = serialize_impx(img);
  CHECK(bytes.size() == 4 + 4 + 8 + 8 + 35 * 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "IMPX");
  CHECK(parse_impx(bytes) == img);

  auto bad = bytes;
  bad[4] = 9;
  CHECK(code_of([&] { (void)parse_impx(bad); }) == ErrorCode::kBadVersion);
  auto cut = bytes;
  cut.pop_back();
  CHECK(code_of([&] { (void)parse_impx(cut); }) == ErrorCode::kTruncated);
  auto extra = bytes;
  extra.push_back(1);
  CHECK(code_of([&] { (void)parse_impx(extra); }) == ErrorCode::kParse);
  auto magic = bytes;
  magic[0] = 'Q';
  CHECK(code_of([&] { (void)parse_impx(magic); }) == ErrorCode::kBadMagic);
}

TEST_CASE("PGM read and write") {
  PatchImage img(2, 3);
  img.pixels = {0.0, 1.0, 0.5, -0.2, 1.7, 100.0 / 255};
  const auto bytes = serialize_pgm(img);
  const std::string header = "P5\n3 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 6);
  CHECK(std::string(bytes.begin(), bytes.begin() + header.size()) == header);
  CHECK(bytes[header.size() + 2] == 128);
  const auto back = parse_pgm(bytes);
  CHECK(back.pixels[0] == 0.0);
  CHECK(back.pixels[1] == 1.0);
  CHECK(back.pixels[3] == 0.0);
  CHECK(back.pixels[4] == 1.0);
  CHECK(back.pixels[5] == doctest::Approx(100.0 / 255));

  const std::string commented = "P5\n# made by hand\n2 1\n# max\n15\n";
  std::vector<std::uint8_t> raw(commented.begin(), commented.end());
  raw.push_back(15);
  raw.push_back(0);
  const auto small = parse_pgm(raw);
  CHECK(small.pixels == std::vector<double>{1.0, 0.0});

  const std::string p2 = "P2\n1 1\n255\n0";
  CHECK(code_of([&] { (void)parse_pgm({p2.begin(), p2.end()}); }) == ErrorCode::kBadMagic);
  const std::string wide = "P5\n1 1\n65535\n00";
  CHECK(code_of([&] { (void)parse_pgm({wide.begin(), wide.end()}); }) == ErrorCode::kParse);
  const std::string shortr = "P5\n2 2\n255\n";
  CHECK(code_of([&] { (void)parse_pgm({shortr.begin(), shortr.end()}); }) == ErrorCode::kTruncated);
}

TEST_CASE("image files are chosen by extension on write and magic on read") {
  fixtures::TempDir dir("img");
  auto img = random_image(8, 8, 11);
  for (auto& v : img.pixels) v = static_cast<float>(v);
  save_image(img, dir / "a.impx");
  CHECK(load_image(dir / "a.impx") == img);
  save_image(img, dir / "a.pgm");
  const auto q = load_image(dir / "a.pgm");
  for (std::size_t i = 0; i < 64; ++i) CHECK(std::fabs(q.pixels[i] - img.pixels[i]) <= 0.5 / 255 + 1e-12);
  std::filesystem::copy_file(dir / "a.pgm", dir / "renamed.bin");
  CHECK(load_image(dir / "renamed.bin") == q);
  CHECK(code_of([&] { (void)load_image(dir / "missing.impx"); }) == ErrorCode::kIo);
}

TEST_CASE("round trip is exhaustive on small grids") {
  const auto cb = synthetic_codebook(4, 2, 0.3, 12);
  const CodecConfig cfg{2};
  for (std::uint32_t code = 0; code < 256; ++code) {
    const IndexGrid g{2, 2, {code & 3, code >> 2 & 3, code >> 4 & 3, code >> 6 & 3}};
    REQUIRE(encode(decode(g, cb, cfg), cb, cfg) == g);
  }
}

TEST_CASE("psnr against the unmarked decode falls as strength rises") {
  const auto setup = fixtures::Setup::make(13);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto trace = setup.trace(16, 300 + seed);
    const auto plain = setup.image(trace.grid());
    CHECK(std::isinf(psnr(plain, setup.image(setup.marked_grid(trace, 0.0)))));
    double last = INFINITY;
    for (int step = 1; step <= 10; ++step) {
      const double value = psnr(plain, setup.image(setup.marked_grid(trace, step / 10.0)));
      CHECK(value <= last);
      last = value;
    }
  }
}
