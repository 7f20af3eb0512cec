#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#ifndef LSHPR_FIXTURE_DIR
#error "LSHPR_FIXTURE_DIR must point at tests/fixtures"
#endif

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(LSHPR_FIXTURE_DIR) / name;
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("lshpr-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};
