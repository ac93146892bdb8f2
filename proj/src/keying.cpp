#include "indexmark/keying.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <memory>

#include "indexmark/error.hpp"

namespace indexmark {

WatermarkKey::WatermarkKey(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {
  if (bytes_.empty() || bytes_.size() > 64) {
    throw Error(ErrorCode::kInvalidArgument, "watermark key must be 1 to 64 bytes");
  }
}

WatermarkKey WatermarkKey::from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw Error(ErrorCode::kInvalidArgument, "key hex string has odd length");
  std::vector<std::uint8_t> bytes;
  bytes.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]);
    const int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::kInvalidArgument, "key is not a hex string");
    bytes.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return WatermarkKey(std::move(bytes));
}

std::string WatermarkKey::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (auto b : bytes_) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

Partition::Partition(std::vector<bool> green, std::vector<std::uint32_t> pair_of)
    : green_(std::move(green)), pair_of_(std::move(pair_of)) {
  if (green_.size() != pair_of_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "partition: mask and pair map differ in size");
  }
  for (std::size_t i = 0; i < pair_of_.size(); ++i) {
    const auto j = pair_of_[i];
    if (j >= pair_of_.size() || j == i || pair_of_[j] != i) {
      throw Error(ErrorCode::kInvalidArgument, "partition: pair map is not an involution");
    }
    if (green_[i] == green_[j]) {
      throw Error(ErrorCode::kInvalidArgument, "partition: each pair needs one green and one red index");
    }
    if (green_[i]) ++green_count_;
  }
}

bool Partition::is_green(std::size_t idx) const {
  if (idx >= green_.size()) throw Error(ErrorCode::kIndexOutOfRange, "partition: index out of range");
  return green_[idx];
}

std::uint32_t Partition::pair_of(std::size_t idx) const {
  if (idx >= pair_of_.size()) throw Error(ErrorCode::kIndexOutOfRange, "partition: index out of range");
  return pair_of_[idx];
}

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, 32> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32) {
    throw Error(ErrorCode::kInvalidArgument, "sha256 failed");
  }
  return digest;
}

Partition derive_partition(const PairSet& input, const WatermarkKey& key) {
  // Hash each pair as (min, max) so the result ignores list and member order.
  PairSet ps = input;
  for (auto& p : ps.pairs) {
    if (p.first > p.second) std::swap(p.first, p.second);
  }
  std::sort(ps.pairs.begin(), ps.pairs.end());
  validate_pairset(ps);
  std::vector<bool> green(ps.n, false);
  std::vector<std::uint32_t> pair_of(ps.n, 0);

  const auto key_bytes = key.bytes();
  std::vector<std::uint8_t> message(key_bytes.begin(), key_bytes.end());
  const std::size_t prefix = message.size();
  message.resize(prefix + 16);
  for (const auto& pair : ps.pairs) {
    const std::uint64_t i = pair.first;
    const std::uint64_t j = pair.second;
    for (int b = 0; b < 8; ++b) {
      message[prefix + b] = static_cast<std::uint8_t>(i >> (8 * b));
      message[prefix + 8 + b] = static_cast<std::uint8_t>(j >> (8 * b));
    }
    const auto digest = sha256(message);
    const bool first_green = (digest[31] & 1u) != 0;
    green[pair.first] = first_green;
    green[pair.second] = !first_green;
    pair_of[pair.first] = pair.second;
    pair_of[pair.second] = pair.first;
  }
  return Partition(std::move(green), std::move(pair_of));
}

}  // namespace indexmark
