#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "eqe/collect.hpp"

namespace testing_support {

inline eqe::TriggerLexicon small_lexicon() {
  eqe::TriggerLexicon lex;
  lex.triggers = {"acquires", "wins", "loses", "quits", "launches", "resigns"};
  lex.interrogatives = {"how", "why", "what"};
  lex.entity_lexicon = {"acme", "beta", "gamma"};
  return lex;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("eqe_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
