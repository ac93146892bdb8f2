#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace indexmark {

enum class ErrorCode {
  kIo,
  kBadMagic,
  kBadVersion,
  kTruncated,
  kOddEntryCount,
  kNonFiniteVector,
  kZeroVector,
  kIndexOutOfRange,
  kDimensionMismatch,
  kInvalidArgument,
  kParse,
  kGraphTooLarge,
  kNoPerfectMatching,
  kNoGreenSupport,
  kEmptyInput,
  kInvalidThreshold,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a graph admits no perfect matching; carries the vertices left
/// free by a maximum-cardinality matching, when known.
class NoPerfectMatchingError : public Error {
 public:
  explicit NoPerfectMatchingError(std::vector<std::uint32_t> unmatched = {})
      : Error(ErrorCode::kNoPerfectMatching, "no perfect matching exists"),
        unmatched_(std::move(unmatched)) {}

  [[nodiscard]] const std::vector<std::uint32_t>& unmatched() const noexcept { return unmatched_; }

 private:
  std::vector<std::uint32_t> unmatched_;
};

}  // namespace indexmark
