#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "doctest.h"
#include "indexmark/error.hpp"
#include "oracles.hpp"

namespace fixtures {

// Code of the indexmark::Error thrown by fn; fails the test if none is thrown.
inline indexmark::ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const indexmark::Error& e) {
    return e.code();
  }
  FAIL("expected an indexmark::Error");
  return indexmark::ErrorCode::kIo;
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("indexmark_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
