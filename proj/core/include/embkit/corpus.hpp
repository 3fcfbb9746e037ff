#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

// Text ingestion: tokenization, vocabulary construction, mono and parallel
// corpus loading, and deterministic sentence subsampling.

namespace embkit::corpus {

inline constexpr std::string_view kUnkToken = "<unk>";

/// Bidirectional word<->id map with occurrence counts. Ids are dense in
/// [0, size) and every vocabulary reserves an id for out-of-vocabulary tokens.
class Vocabulary {
 public:
  /// Starts with only the unk token at id 0.
  Vocabulary();

  /// Builds from an explicit word list (e.g. an embedding file). Appends the
  /// unk token at the end when the list does not already contain it.
  static Vocabulary from_words(const std::vector<std::string>& words,
                               const std::vector<std::int64_t>& counts = {});

  /// Appends a new word; throws on duplicates. Returns the new id.
  int add(const std::string& word, std::int64_t count = 0);

  int size() const { return static_cast<int>(words_.size()); }
  int unk_id() const { return unk_id_; }

  /// Id of the word, or unk_id when absent.
  int id(std::string_view word) const;
  bool contains(std::string_view word) const;

  const std::string& word(int id) const { return words_[static_cast<std::size_t>(id)]; }
  std::int64_t count(int id) const { return counts_[static_cast<std::size_t>(id)]; }
  void set_count(int id, std::int64_t count) { counts_[static_cast<std::size_t>(id)] = count; }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

 private:
  Vocabulary(std::vector<std::string> words, std::vector<std::int64_t> counts, int unk_id);

  std::vector<std::string> words_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, int> index_;
  int unk_id_ = 0;
};

struct MonoCorpus {
  std::vector<std::vector<int>> sentences;
  std::shared_ptr<const Vocabulary> vocab;
  std::size_t token_count = 0;
};

struct ParallelCorpus {
  std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
  std::shared_ptr<const Vocabulary> source_vocab;
  std::shared_ptr<const Vocabulary> target_vocab;
};

/// Whitespace-delimited tokens, ASCII-lowercased. Leading and trailing ASCII
/// punctuation characters are split off as single-character tokens ("sat." ->
/// "sat", "."); interior punctuation stays attached ("don't", "e-mail").
std::vector<std::string> tokenize(std::string_view text);

/// Keeps the max_size-1 most frequent tokens with count >= min_count plus the
/// unk token. Frequency ties break by first occurrence in the stream.
Vocabulary build_vocab(const std::vector<std::string>& tokens, std::size_t max_size,
                       std::int64_t min_count = 1);
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences,
                       std::size_t max_size, std::int64_t min_count = 1);

/// One sentence per line; lines are tokenized with tokenize().
std::vector<std::vector<std::string>> read_token_lines(const std::string& path);

MonoCorpus load_mono(const std::string& path, std::shared_ptr<const Vocabulary> vocab);

/// Line i of each file becomes pair i; OOV tokens map to unk. Throws on
/// unequal line counts, naming both.
ParallelCorpus load_parallel(const std::string& source_path, const std::string& target_path,
                             std::shared_ptr<const Vocabulary> source_vocab,
                             std::shared_ptr<const Vocabulary> target_vocab);

/// Uniformly samples ceil(fraction * N) sentences without replacement,
/// preserving order; identical output for identical (fraction, seed).
MonoCorpus subsample(const MonoCorpus& corpus, double fraction, std::uint64_t seed);

}  // namespace embkit::corpus
