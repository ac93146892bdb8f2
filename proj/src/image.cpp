#include "indexmark/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "indexmark/error.hpp"

namespace indexmark {

void PatchImage::validate() const {
  if (height == 0 || width == 0) throw Error(ErrorCode::kEmptyInput, "image: dimensions must be positive");
  if (pixels.size() != height * width) throw Error(ErrorCode::kDimensionMismatch, "image: pixel count differs from h*w");
  for (double v : pixels) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteVector, "image: non-finite pixel");
  }
}

PatchImage crop_image(const PatchImage& img, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
  if (top + h > img.height || left + w > img.width || h == 0 || w == 0) {
    throw Error(ErrorCode::kInvalidArgument, "crop window outside image");
  }
  PatchImage out(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    const double* src = img.pixels.data() + (top + r) * img.width + left;
    std::copy(src, src + w, out.pixels.data() + r * w);
  }
  return out;
}

PatchImage parse_impx(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader in(bytes, "IMPX");
  in.expect_magic("IMPX");
  if (const auto version = in.u32(); version != 1) {
    throw Error(ErrorCode::kBadVersion, "IMPX: unsupported version " + std::to_string(version));
  }
  const auto h = in.u64();
  const auto w = in.u64();
  if (h != 0 && w > UINT64_MAX / h) throw Error(ErrorCode::kParse, "IMPX: dimensions overflow");
  in.need_records(h * w, 4);
  PatchImage img(h, w);
  for (auto& p : img.pixels) p = in.f32();
  in.expect_end();
  img.validate();
  return img;
}

std::vector<std::uint8_t> serialize_impx(const PatchImage& img) {
  img.validate();
  detail::ByteWriter out;
  out.magic("IMPX");
  out.u32(1);
  out.u64(img.height);
  out.u64(img.width);
  for (double p : img.pixels) out.f32(static_cast<float>(p));
  return out.bytes();
}

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') tok.push_back(static_cast<char>(bytes[pos++]));
  if (tok.empty()) throw Error(ErrorCode::kTruncated, "PGM: truncated header");
  return tok;
}

std::size_t pgm_number(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
  const auto tok = pgm_token(bytes, pos);
  if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw Error(ErrorCode::kParse, "PGM: bad header field '" + tok + "'");
  }
  if (tok.size() > 9) throw Error(ErrorCode::kParse, "PGM: header field too large");
  return std::stoul(tok);
}

}  // namespace

PatchImage parse_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  if (pgm_token(bytes, pos) != "P5") throw Error(ErrorCode::kBadMagic, "PGM: expected P5");
  const auto w = pgm_number(bytes, pos);
  const auto h = pgm_number(bytes, pos);
  const auto maxval = pgm_number(bytes, pos);
  if (maxval == 0 || maxval > 255) throw Error(ErrorCode::kParse, "PGM: only 8-bit images are supported");
  ++pos;  // single whitespace before the raster
  if (pos > bytes.size() || bytes.size() - pos < w * h) throw Error(ErrorCode::kTruncated, "PGM: truncated raster");
  PatchImage img(h, w);
  for (std::size_t i = 0; i < w * h; ++i) img.pixels[i] = bytes[pos + i] / static_cast<double>(maxval);
  img.validate();
  return img;
}

std::vector<std::uint8_t> serialize_pgm(const PatchImage& img) {
  img.validate();
  const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.pixels.size());
  for (double p : img.pixels) out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0)));
  return out;
}

PatchImage load_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return parse_pgm(bytes);
  return parse_impx(bytes);
}

void save_image(const PatchImage& img, const std::filesystem::path& path) {
  detail::write_file(path, path.extension() == ".pgm" ? serialize_pgm(img) : serialize_impx(img));
}

}  // namespace indexmark
