#include "embkit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "embkit/numerics.hpp"

namespace embkit::corpus {

namespace {

bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

char ascii_lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

Vocabulary::Vocabulary() {
  words_.emplace_back(kUnkToken);
  counts_.push_back(0);
  index_.emplace(std::string(kUnkToken), 0);
  unk_id_ = 0;
}

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<std::int64_t> counts,
                       int unk_id)
    : words_(std::move(words)), counts_(std::move(counts)), unk_id_(unk_id) {
  for (int i = 0; i < size(); ++i) {
    if (!index_.emplace(words_[static_cast<std::size_t>(i)], i).second) {
      throw std::invalid_argument("Vocabulary: duplicate word '" +
                                  words_[static_cast<std::size_t>(i)] + "'");
    }
  }
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words,
                                  const std::vector<std::int64_t>& counts) {
  std::vector<std::string> ws = words;
  std::vector<std::int64_t> cs = counts;
  cs.resize(ws.size(), 0);
  int unk = -1;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (ws[i] == kUnkToken) unk = static_cast<int>(i);
  }
  if (unk < 0) {
    unk = static_cast<int>(ws.size());
    ws.emplace_back(kUnkToken);
    cs.push_back(0);
  }
  return Vocabulary(std::move(ws), std::move(cs), unk);
}

int Vocabulary::add(const std::string& word, std::int64_t count) {
  const int id = size();
  if (!index_.emplace(word, id).second) {
    throw std::invalid_argument("Vocabulary: duplicate word '" + word + "'");
  }
  words_.push_back(word);
  counts_.push_back(count);
  return id;
}

int Vocabulary::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? unk_id_ : it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  return index_.contains(std::string(word));
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int i : ids) {
    if (i < 0 || i >= size()) throw std::out_of_range("Vocabulary: id out of range");
    tokens.push_back(word(i));
  }
  return tokens;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t lo = i, hi = j;  // [lo, hi) is the chunk
    // split leading punctuation
    std::vector<std::string> trailing;
    while (lo < hi && is_ascii_punct(text[lo])) {
      tokens.emplace_back(1, text[lo]);
      ++lo;
    }
    while (hi > lo && is_ascii_punct(text[hi - 1])) {
      trailing.emplace_back(1, text[hi - 1]);
      --hi;
    }
    if (lo < hi) {
      std::string core(text.substr(lo, hi - lo));
      for (char& c : core) c = ascii_lower(c);
      tokens.push_back(std::move(core));
    }
    tokens.insert(tokens.end(), trailing.rbegin(), trailing.rend());
    i = j;
  }
  return tokens;
}

Vocabulary build_vocab(const std::vector<std::string>& tokens, std::size_t max_size,
                       std::int64_t min_count) {
  if (max_size < 1) throw std::invalid_argument("build_vocab: max_size must be >= 1");
  if (tokens.empty()) throw std::runtime_error("empty corpus");
  std::unordered_map<std::string, std::size_t> first_seen;
  std::unordered_map<std::string, std::int64_t> counts;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto [it, inserted] = counts.try_emplace(tokens[i], 0);
    ++it->second;
    if (inserted) {
      first_seen.emplace(tokens[i], i);
      order.push_back(tokens[i]);
    }
  }
  // most frequent first; ties by first occurrence
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    const auto ca = counts.at(a), cb = counts.at(b);
    if (ca != cb) return ca > cb;
    return first_seen.at(a) < first_seen.at(b);
  });
  Vocabulary vocab;
  for (const auto& w : order) {
    if (static_cast<std::size_t>(vocab.size()) >= max_size) break;
    if (counts.at(w) < min_count) continue;
    vocab.add(w, counts.at(w));
  }
  return vocab;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences,
                       std::size_t max_size, std::int64_t min_count) {
  std::vector<std::string> flat;
  for (const auto& s : sentences) flat.insert(flat.end(), s.begin(), s.end());
  return build_vocab(flat, max_size, min_count);
}

std::vector<std::vector<std::string>> read_token_lines(const std::string& path) {
  std::vector<std::vector<std::string>> out;
  for (const auto& line : read_lines(path)) out.push_back(tokenize(line));
  return out;
}

MonoCorpus load_mono(const std::string& path, std::shared_ptr<const Vocabulary> vocab) {
  MonoCorpus corpus;
  corpus.vocab = std::move(vocab);
  for (const auto& tokens : read_token_lines(path)) {
    corpus.sentences.push_back(corpus.vocab->encode(tokens));
    corpus.token_count += tokens.size();
  }
  return corpus;
}

ParallelCorpus load_parallel(const std::string& source_path, const std::string& target_path,
                             std::shared_ptr<const Vocabulary> source_vocab,
                             std::shared_ptr<const Vocabulary> target_vocab) {
  const auto src_lines = read_token_lines(source_path);
  const auto tgt_lines = read_token_lines(target_path);
  if (src_lines.size() != tgt_lines.size()) {
    throw std::runtime_error("line count mismatch " + std::to_string(src_lines.size()) +
                             " vs " + std::to_string(tgt_lines.size()));
  }
  ParallelCorpus corpus;
  corpus.source_vocab = std::move(source_vocab);
  corpus.target_vocab = std::move(target_vocab);
  corpus.pairs.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    corpus.pairs.emplace_back(corpus.source_vocab->encode(src_lines[i]),
                              corpus.target_vocab->encode(tgt_lines[i]));
  }
  return corpus;
}

MonoCorpus subsample(const MonoCorpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("subsample: fraction out of range (0, 1]");
  }
  const std::size_t n = corpus.sentences.size();
  const auto k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  num::Rng rng(seed);
  for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
    std::swap(idx[i], idx[i + rng.below(n - i)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  MonoCorpus out;
  out.vocab = corpus.vocab;
  out.sentences.reserve(k);
  for (std::size_t i : idx) {
    out.sentences.push_back(corpus.sentences[i]);
    out.token_count += corpus.sentences[i].size();
  }
  return out;
}

}  // namespace embkit::corpus
