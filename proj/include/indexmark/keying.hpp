#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "indexmark/pairing.hpp"

namespace indexmark {

/// Secret watermark key, 1 to 64 bytes.
class WatermarkKey {
 public:
  explicit WatermarkKey(std::vector<std::uint8_t> bytes);

  /// Parses an even-length hex string (case-insensitive).
  [[nodiscard]] static WatermarkKey from_hex(std::string_view hex);

  [[nodiscard]] std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }
  [[nodiscard]] std::string to_hex() const;

 private:
  std::vector<std::uint8_t> bytes_;
};

/// Red/green split with exactly one green index per pair.
class Partition {
 public:
  Partition(std::vector<bool> green, std::vector<std::uint32_t> pair_of);

  [[nodiscard]] std::size_t size() const noexcept { return green_.size(); }
  [[nodiscard]] bool is_green(std::size_t idx) const;
  [[nodiscard]] std::uint32_t pair_of(std::size_t idx) const;
  [[nodiscard]] std::size_t green_count() const noexcept { return green_count_; }
  [[nodiscard]] const std::vector<bool>& green_mask() const noexcept { return green_; }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.green_ == b.green_ && a.pair_of_ == b.pair_of_;
  }

 private:
  std::vector<bool> green_;
  std::vector<std::uint32_t> pair_of_;
  std::size_t green_count_ = 0;
};

[[nodiscard]] std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

/// For each pair {i, j} with i < j, index i is green iff the least significant
/// bit of SHA-256(key || LE64(i) || LE64(j)), read as a big-endian integer,
/// is set; otherwise j is green. Pair and list order do not matter.
[[nodiscard]] Partition derive_partition(const PairSet& ps, const WatermarkKey& key);

[[nodiscard]] inline bool is_green(const Partition& p, std::size_t idx) { return p.is_green(idx); }

}  // namespace indexmark
