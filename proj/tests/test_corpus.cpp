#include <doctest.h>

#include <algorithm>

#include "embkit/corpus.hpp"
#include "helpers.hpp"

using namespace embkit;

TEST_CASE("tokenize lowercases and splits trailing punctuation") {
  const auto tokens = corpus::tokenize("The cat sat.");
  REQUIRE(tokens.size() == 4);
  CHECK(tokens[0] == "the");
  CHECK(tokens[1] == "cat");
  CHECK(tokens[2] == "sat");
  CHECK(tokens[3] == ".");
}

TEST_CASE("tokenize of empty input is empty") {
  CHECK(corpus::tokenize("").empty());
  CHECK(corpus::tokenize("   \t\n").empty());
}

TEST_CASE("tokenize collapses whitespace runs") {
  const auto tokens = corpus::tokenize("A  b\tc");
  REQUIRE(tokens.size() == 3);
  CHECK(tokens[0] == "a");
  CHECK(tokens[1] == "b");
  CHECK(tokens[2] == "c");
}

TEST_CASE("tokenize keeps interior punctuation and splits leading marks") {
  const auto tokens = corpus::tokenize("\"Don't stop,\" he said.");
  const std::vector<std::string> want{"\"", "don't", "stop", ",", "\"", "he", "said", "."};
  CHECK(tokens == want);
}

TEST_CASE("build_vocab keeps the most frequent words plus unk") {
  const std::vector<std::string> tokens{"a", "a", "b", "c"};
  const auto vocab = corpus::build_vocab(tokens, 3, 1);
  CHECK(vocab.size() == 3);
  CHECK(vocab.contains("a"));
  CHECK(vocab.contains("b"));  // ties with c, b seen first
  CHECK(!vocab.contains("c"));
  CHECK(vocab.word(vocab.unk_id()) == corpus::kUnkToken);
  CHECK(vocab.count(vocab.id("a")) == 2);
}

TEST_CASE("build_vocab honours min_count") {
  const std::vector<std::string> tokens{"a", "b"};
  const auto vocab = corpus::build_vocab(tokens, 10, 2);
  CHECK(vocab.size() == 1);  // only unk survives
}

TEST_CASE("build_vocab counts match a brute-force tally") {
  std::vector<std::string> tokens(5, "x");
  tokens.insert(tokens.end(), 3, "y");
  const auto vocab = corpus::build_vocab(tokens, 3, 1);
  CHECK(vocab.size() == 3);
  CHECK(vocab.count(vocab.id("x")) == 5);
  CHECK(vocab.count(vocab.id("y")) == 3);
}

TEST_CASE("build_vocab rejects an empty corpus") {
  try {
    corpus::build_vocab(std::vector<std::string>{}, 5, 1);
    FAIL("expected error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "empty corpus");
  }
}

TEST_CASE("build_vocab counts are permutation-stable") {
  std::vector<std::string> tokens{"a", "a", "a", "b", "b", "c", "d", "d", "d", "d"};
  const auto v1 = corpus::build_vocab(tokens, 100, 1);
  num::Rng rng(3);
  rng.shuffle(tokens);
  const auto v2 = corpus::build_vocab(tokens, 100, 1);
  REQUIRE(v1.size() == v2.size());
  for (const auto& w : {"a", "b", "c", "d"}) {
    CHECK(v1.count(v1.id(w)) == v2.count(v2.id(w)));
  }
}

TEST_CASE("encode round trips in-vocabulary ids") {
  const std::vector<std::string> tokens{"a", "b", "c", "a"};
  auto vocab = corpus::build_vocab(tokens, 10, 1);
  const std::vector<int> ids{vocab.id("c"), vocab.id("a"), vocab.id("b")};
  CHECK(vocab.encode(vocab.decode(ids)) == ids);
}

TEST_CASE("encode maps unknown words to unk") {
  const auto vocab = corpus::build_vocab(std::vector<std::string>{"a", "b"}, 10, 1);
  const auto ids = vocab.encode({"a", "zz"});
  CHECK(ids[0] == vocab.id("a"));
  CHECK(ids[1] == vocab.unk_id());
}

TEST_CASE("load_parallel pairs lines and maps OOV to unk") {
  testutil::TempDir dir;
  const auto src = dir.file("src.txt");
  const auto tgt = dir.file("tgt.txt");
  testutil::write_file(src, "a b\nzz\n");
  testutil::write_file(tgt, "x y\nx\n");
  auto sv = std::make_shared<corpus::Vocabulary>(
      corpus::build_vocab(std::vector<std::string>{"a", "b"}, 10, 1));
  auto tv = std::make_shared<corpus::Vocabulary>(
      corpus::build_vocab(std::vector<std::string>{"x", "y"}, 10, 1));
  const auto parallel = corpus::load_parallel(src, tgt, sv, tv);
  REQUIRE(parallel.pairs.size() == 2);
  CHECK(parallel.pairs[0].first == std::vector<int>{sv->id("a"), sv->id("b")});
  CHECK(parallel.pairs[1].first == std::vector<int>{sv->unk_id()});
  CHECK(parallel.pairs[1].second == std::vector<int>{tv->id("x")});
}

TEST_CASE("load_parallel names both counts on a mismatch") {
  testutil::TempDir dir;
  const auto src = dir.file("src.txt");
  const auto tgt = dir.file("tgt.txt");
  testutil::write_file(src, "a\nb\nc\n");
  testutil::write_file(tgt, "x\ny\n");
  auto sv = std::make_shared<corpus::Vocabulary>();
  auto tv = std::make_shared<corpus::Vocabulary>();
  try {
    corpus::load_parallel(src, tgt, sv, tv);
    FAIL("expected error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "line count mismatch 3 vs 2");
  }
}

TEST_CASE("load_parallel reports unreadable files") {
  auto sv = std::make_shared<corpus::Vocabulary>();
  CHECK_THROWS(corpus::load_parallel("/nonexistent/a", "/nonexistent/b", sv, sv));
}

namespace {

corpus::MonoCorpus ten_sentences() {
  corpus::MonoCorpus mono;
  mono.vocab = std::make_shared<corpus::Vocabulary>(
      corpus::build_vocab(std::vector<std::string>{"w"}, 5, 1));
  for (int i = 0; i < 10; ++i) {
    mono.sentences.push_back(std::vector<int>(static_cast<std::size_t>(i % 3 + 1), 1));
    mono.token_count += mono.sentences.back().size();
  }
  return mono;
}

}  // namespace

TEST_CASE("subsample with fraction 1 is the identity") {
  const auto mono = ten_sentences();
  const auto out = corpus::subsample(mono, 1.0, 9);
  CHECK(out.sentences == mono.sentences);
  CHECK(out.token_count == mono.token_count);
}

TEST_CASE("subsample draws exactly ceil(fraction * N) sentences") {
  const auto mono = ten_sentences();
  CHECK(corpus::subsample(mono, 0.5, 1).sentences.size() == 5);
  CHECK(corpus::subsample(mono, 0.31, 1).sentences.size() == 4);
}

TEST_CASE("subsample is deterministic per seed") {
  const auto mono = ten_sentences();
  const auto a = corpus::subsample(mono, 0.4, 7);
  const auto b = corpus::subsample(mono, 0.4, 7);
  CHECK(a.sentences == b.sentences);
}

TEST_CASE("subsample rejects out-of-range fractions") {
  const auto mono = ten_sentences();
  CHECK_THROWS(corpus::subsample(mono, 0.0, 1));
  CHECK_THROWS(corpus::subsample(mono, 1.5, 1));
}

TEST_CASE("token_count equals the sum of sentence lengths after loading") {
  testutil::TempDir dir;
  const auto path = dir.file("mono.txt");
  testutil::write_file(path, "a b c\n\nb c\n");
  auto vocab = std::make_shared<corpus::Vocabulary>(
      corpus::build_vocab(std::vector<std::string>{"a", "b", "c"}, 10, 1));
  const auto mono = corpus::load_mono(path, vocab);
  REQUIRE(mono.sentences.size() == 3);  // empty line stays an empty sentence
  std::size_t total = 0;
  for (const auto& s : mono.sentences) total += s.size();
  CHECK(mono.token_count == total);
  CHECK(mono.token_count == 5);
}
