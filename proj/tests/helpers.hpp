#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "embkit/corpus.hpp"
#include "embkit/embstore.hpp"
#include "embkit/numerics.hpp"

namespace testutil {

inline std::shared_ptr<embkit::corpus::Vocabulary> make_vocab(
    const std::vector<std::string>& words) {
  auto vocab = std::make_shared<embkit::corpus::Vocabulary>();
  for (const auto& w : words) vocab->add(w, 1);
  return vocab;
}

/// Space with explicitly planted vectors, in word order.
inline embkit::embstore::EmbeddingSpace make_space(
    const std::vector<std::string>& words,
    const std::vector<std::vector<double>>& vectors, std::string name = "test") {
  auto vocab = make_vocab(words);
  embkit::num::Matrix m(static_cast<std::size_t>(vocab->size()), vectors.front().size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    const int id = vocab->id(words[i]);
    for (std::size_t j = 0; j < vectors[i].size(); ++j) {
      m(static_cast<std::size_t>(id), j) = vectors[i][j];
    }
  }
  return embkit::embstore::EmbeddingSpace(*vocab, std::move(m), std::move(name));
}

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 10000; ++i) {
      auto candidate = base / ("embkit_test_" + std::to_string(counter_++));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testutil
