#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "embkit/embstore.hpp"
#include "helpers.hpp"

using namespace embkit;

TEST_CASE("save_text writes header plus one line per word") {
  const auto space = testutil::make_space({"a", "b"}, {{1.0, 2.0}, {3.0, 4.0}});
  testutil::TempDir dir;
  const auto path = dir.file("s.vec");
  embstore::save_text(space, path);
  const auto content = testutil::read_file(path);
  std::istringstream in(content);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 4);  // header + a + b + unk
  CHECK(content.substr(0, 4) == "3 2\n");
}

TEST_CASE("text round trip preserves values") {
  num::Rng rng(2);
  num::Matrix m(5, 7);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-10.0, 10.0);
  std::vector<std::string> words;
  for (int i = 0; i < 4; ++i) words.push_back("w" + std::to_string(i));
  const auto vocab = testutil::make_vocab(words);
  const embstore::EmbeddingSpace space(*vocab, m, "orig");
  testutil::TempDir dir;
  const auto path = dir.file("r.vec");
  embstore::save_text(space, path);
  const auto loaded = embstore::load_text(path);
  REQUIRE(loaded.matrix().rows() == 5);
  REQUIRE(loaded.dim() == 7);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(std::abs(loaded.matrix().data()[i] - m.data()[i]) <= 1e-8);
  }
  // 17 significant digits actually round trip doubles exactly
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(loaded.matrix().data()[i] == m.data()[i]);
  }
}

TEST_CASE("load_text reports row arity errors with the line number") {
  testutil::TempDir dir;
  const auto path = dir.file("bad.vec");
  testutil::write_file(path, "2 2\na 1.0 2.0\nb 1.0\n");
  try {
    embstore::load_text(path);
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("expected 2 values, got 1") != std::string::npos);
  }
}

TEST_CASE("load_text rejects malformed headers") {
  testutil::TempDir dir;
  const auto path = dir.file("hdr.vec");
  testutil::write_file(path, "banana\n");
  CHECK_THROWS(embstore::load_text(path));
}

TEST_CASE("load_text without an unk row appends a zero one") {
  testutil::TempDir dir;
  const auto path = dir.file("ext.vec");
  testutil::write_file(path, "2 3\nfoo 1 2 3\nbar 4 5 6\n");
  const auto space = embstore::load_text(path);
  CHECK(space.vocab().size() == 3);
  CHECK(space.matrix().rows() == 3);
  CHECK(space.vocab().contains("foo"));
  const int unk = space.vocab().unk_id();
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(space.matrix()(static_cast<std::size_t>(unk), c) == 0.0);
  }
  CHECK(!space.has_vector(corpus::kUnkToken));
}

TEST_CASE("intersect_vocab of a single space is its non-unk vocabulary") {
  const auto space = testutil::make_space({"b", "a"}, {{1.0}, {2.0}});
  const auto shared = embstore::intersect_vocab({&space});
  CHECK(shared == std::vector<std::string>{"a", "b"});
}

TEST_CASE("intersect_vocab of disjoint spaces is empty") {
  const auto s1 = testutil::make_space({"a"}, {{1.0}});
  const auto s2 = testutil::make_space({"b"}, {{1.0}});
  CHECK(embstore::intersect_vocab({&s1, &s2}).empty());
}

TEST_CASE("intersect_vocab keeps exactly the common words, order-insensitively") {
  const auto s1 = testutil::make_space({"a", "b", "c"}, {{1.0}, {2.0}, {3.0}});
  const auto s2 = testutil::make_space({"d", "c", "b"}, {{1.0}, {2.0}, {3.0}});
  const auto want = std::vector<std::string>{"b", "c"};
  CHECK(embstore::intersect_vocab({&s1, &s2}) == want);
  CHECK(embstore::intersect_vocab({&s2, &s1}) == want);
  // idempotent
  CHECK(embstore::intersect_vocab({&s1, &s1}) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("cosine of identical, orthogonal and known vectors") {
  const auto space = testutil::make_space(
      {"same1", "same2", "ortho", "diag"},
      {{1.0, 0.0}, {2.0, 0.0}, {0.0, 3.0}, {1.0, 1.0}});
  CHECK(*embstore::cosine(space, "same1", "same2") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*embstore::cosine(space, "same1", "ortho") == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(*embstore::cosine(space, "same1", "diag") ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("cosine is symmetric") {
  num::Rng rng(9);
  std::vector<std::vector<double>> vectors;
  std::vector<std::string> words;
  for (int i = 0; i < 6; ++i) {
    words.push_back("w" + std::to_string(i));
    vectors.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
  }
  const auto space = testutil::make_space(words, vectors);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const auto a = embstore::cosine(space, words[static_cast<std::size_t>(i)],
                                      words[static_cast<std::size_t>(j)]);
      const auto b = embstore::cosine(space, words[static_cast<std::size_t>(j)],
                                      words[static_cast<std::size_t>(i)]);
      CHECK(std::abs(*a - *b) < 1e-12);
    }
  }
}

TEST_CASE("cosine flags OOV words and zero vectors instead of failing") {
  const auto space = testutil::make_space({"a", "zero"}, {{1.0, 0.0}, {0.0, 0.0}});
  CHECK(!embstore::cosine(space, "a", "missing").has_value());
  CHECK(!embstore::cosine(space, "a", "zero").has_value());
  CHECK(embstore::cosine(space, "a", "a").has_value());
}

TEST_CASE("neighbors ranks a planted duplicate first with cosine 1") {
  const auto space = testutil::make_space(
      {"q", "dup", "other"}, {{1.0, 1.0}, {2.0, 2.0}, {-1.0, 0.5}});
  const auto result = embstore::neighbors(space, "q", 2);
  REQUIRE(!result.empty());
  CHECK(result[0].word == "dup");
  CHECK(result[0].cosine == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("neighbors truncates k to the available candidates") {
  const auto space = testutil::make_space({"q", "x"}, {{1.0}, {1.0}});
  const auto result = embstore::neighbors(space, "q", 50);
  CHECK(result.size() == 1);
}

TEST_CASE("neighbors matches a brute-force ranking oracle") {
  const auto space = testutil::make_space(
      {"q", "a", "b", "c", "d"},
      {{1.0, 0.2}, {0.9, 0.1}, {-0.3, 0.8}, {0.5, 0.5}, {1.0, 0.19}});
  const auto result = embstore::neighbors(space, "q", 4);

  // oracle: normalize by hand, sort descending
  struct Scored {
    std::string word;
    double cos;
  };
  std::vector<Scored> oracle;
  auto unit = [](std::vector<double> v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1]);
    return std::vector<double>{v[0] / n, v[1] / n};
  };
  const auto q = unit({1.0, 0.2});
  const std::vector<std::pair<std::string, std::vector<double>>> rows{
      {"a", {0.9, 0.1}}, {"b", {-0.3, 0.8}}, {"c", {0.5, 0.5}}, {"d", {1.0, 0.19}}};
  for (const auto& [w, v] : rows) {
    const auto u = unit(v);
    oracle.push_back({w, q[0] * u[0] + q[1] * u[1]});
  }
  std::sort(oracle.begin(), oracle.end(),
            [](const Scored& x, const Scored& y) { return x.cos > y.cos; });
  REQUIRE(result.size() == oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(result[i].word == oracle[i].word);
    CHECK(result[i].cosine == doctest::Approx(oracle[i].cos).epsilon(1e-12));
  }
}

TEST_CASE("neighbors honours restrict, exclude and the plural heuristic") {
  const auto space = testutil::make_space(
      {"teacher", "teachers", "tutor", "mentor", "student"},
      {{1.0, 0.0}, {0.99, 0.01}, {0.98, 0.02}, {0.9, 0.1}, {0.5, 0.5}});
  embstore::NeighborQuery query;
  query.k = 10;
  query.exclude_plurals = true;
  const std::vector<std::string> exclude{"mentor"};
  query.exclude = &exclude;
  const std::vector<std::string> restrict_to{"teachers", "tutor", "mentor"};
  query.restrict_to = &restrict_to;
  const auto result = embstore::neighbors(space, "teacher", query);
  REQUIRE(result.size() == 1);  // teachers dropped by plural rule, mentor excluded
  CHECK(result[0].word == "tutor");
}

TEST_CASE("neighbors throws on an OOV query") {
  const auto space = testutil::make_space({"a"}, {{1.0}});
  CHECK_THROWS(embstore::neighbors(space, "zzzz", 3));
}

TEST_CASE("zero rows never appear among neighbors") {
  const auto space = testutil::make_space(
      {"q", "ok", "zero"}, {{1.0, 0.0}, {0.5, 0.5}, {0.0, 0.0}});
  const auto result = embstore::neighbors(space, "q", 10);
  for (const auto& n : result) CHECK(n.word != "zero");
}
