#include "indexmark/error.hpp"

namespace indexmark {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kBadVersion: return "bad version";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kOddEntryCount: return "odd entry count";
    case ErrorCode::kNonFiniteVector: return "non-finite vector";
    case ErrorCode::kZeroVector: return "zero vector";
    case ErrorCode::kIndexOutOfRange: return "index out of range";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kGraphTooLarge: return "graph too large";
    case ErrorCode::kNoPerfectMatching: return "no perfect matching";
    case ErrorCode::kNoGreenSupport: return "no green support";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kInvalidThreshold: return "invalid threshold";
  }
  return "unknown";
}

}  // namespace indexmark
