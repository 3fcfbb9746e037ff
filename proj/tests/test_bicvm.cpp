#include <doctest.h>

#include <cmath>

#include "embkit/bicvm.hpp"
#include "helpers.hpp"

using namespace embkit;

namespace {

std::shared_ptr<corpus::Vocabulary> words(const std::vector<std::string>& ws) {
  return testutil::make_vocab(ws);
}

}  // namespace

TEST_CASE("compose of a singleton is that embedding") {
  num::Matrix emb(3, 2);
  emb(1, 0) = 0.5;
  emb(1, 1) = -2.0;
  const std::vector<int> sentence{1};
  const auto r = bicvm::compose(emb, sentence);
  CHECK(r[0] == 0.5);
  CHECK(r[1] == -2.0);
}

TEST_CASE("compose of the empty sentence is zero") {
  num::Matrix emb(3, 4, 1.0);
  const auto r = bicvm::compose(emb, {});
  for (double v : r) CHECK(v == 0.0);
}

TEST_CASE("compose sums with multiplicity") {
  num::Matrix emb(3, 2);
  emb(1, 0) = 1.0;
  emb(1, 1) = 2.0;
  emb(2, 0) = -0.5;
  emb(2, 1) = 4.0;
  const std::vector<int> sentence{1, 2, 1};
  const auto r = bicvm::compose(emb, sentence);
  CHECK(r[0] == doctest::Approx(2.0 * 1.0 - 0.5).epsilon(1e-15));
  CHECK(r[1] == doctest::Approx(2.0 * 2.0 + 4.0).epsilon(1e-15));
}

TEST_CASE("compose rejects invalid ids") {
  num::Matrix emb(2, 2);
  const std::vector<int> bad{5};
  CHECK_THROWS(bicvm::compose(emb, bad));
}

TEST_CASE("contrastive loss clamps at zero when the margin is satisfied") {
  const num::Vector r_e{1.0, 0.0};
  const num::Vector r_f{1.0, 0.0};
  num::Vector r_n{1.0, 0.0};
  r_n[1] = std::sqrt(2.0);  // |r_e - r_n|^2 = 2
  CHECK(bicvm::contrastive_loss(r_e, r_f, r_n, 1.0) == 0.0);
}

TEST_CASE("contrastive loss equals the margin when noise duplicates the target") {
  const num::Vector r_e{0.3, -0.7, 2.0};
  const num::Vector r_f{1.0, 0.25, -1.0};
  CHECK(bicvm::contrastive_loss(r_e, r_f, r_f, 1.5) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("contrastive loss matches hand arithmetic on random triples") {
  num::Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    num::Vector r_e(3), r_f(3), r_n(3);
    for (int i = 0; i < 3; ++i) {
      r_e[static_cast<std::size_t>(i)] = rng.uniform(-2.0, 2.0);
      r_f[static_cast<std::size_t>(i)] = rng.uniform(-2.0, 2.0);
      r_n[static_cast<std::size_t>(i)] = rng.uniform(-2.0, 2.0);
    }
    double d_pos = 0.0, d_neg = 0.0;
    for (int i = 0; i < 3; ++i) {
      d_pos += std::pow(r_e[static_cast<std::size_t>(i)] - r_f[static_cast<std::size_t>(i)], 2);
      d_neg += std::pow(r_e[static_cast<std::size_t>(i)] - r_n[static_cast<std::size_t>(i)], 2);
    }
    const double want = std::max(0.0, 1.0 + d_pos - d_neg);
    CHECK(bicvm::contrastive_loss(r_e, r_f, r_n, 1.0) ==
          doctest::Approx(want).epsilon(1e-12));
    CHECK(bicvm::contrastive_loss(r_e, r_f, r_n, 1.0) >= 0.0);
  }
}

TEST_CASE("all-zero embeddings give loss = margin for every triple") {
  num::ParamSet params;
  params.add("src", 4, 3);
  params.add("tgt", 4, 3);
  const std::vector<int> s{1, 2}, t{1}, n{2, 3};
  const double loss = bicvm::triple_loss_grad(params, s, t, n, 0.7);
  CHECK(loss == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("triple gradients agree with finite differences in both hinge regions") {
  num::Rng init(31);
  for (const bool active : {true, false}) {
    num::ParamSet params;
    params.add("src", 4, 3);
    params.add("tgt", 4, 3);
    for (auto name : {"src", "tgt"}) {
      auto& m = params.value(name);
      for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = init.uniform(-0.8, 0.8);
    }
    const std::vector<int> s{1, 2}, t{2, 3}, n{1};
    // margin choice pushes the hinge into the wanted region
    const double base = bicvm::triple_loss_grad(params, s, t, n, 1.0);
    const double margin = active ? 1.0 + std::max(0.0, 1.0 - base) + 1.0 : 1e-9;
    params.zero_grads();
    auto loss = [&](num::ParamSet& ps) {
      return bicvm::triple_loss_grad(ps, s, t, n, margin);
    };
    const double at_margin = loss(params);
    params.zero_grads();
    if (active) REQUIRE(at_margin > 0.0);
    num::Rng rng(5);
    num::GradCheckOptions opts;
    opts.samples_per_matrix = 12;
    const auto report = num::grad_check(loss, params, opts, rng);
    CHECK(report.max_rel_error <= 1e-4);
  }
}

TEST_CASE("train requires at least two pairs") {
  corpus::ParallelCorpus parallel;
  parallel.source_vocab = words({"a"});
  parallel.target_vocab = words({"x"});
  parallel.pairs.push_back({{1}, {1}});
  bicvm::Config config;
  try {
    bicvm::train(parallel, config);
    FAIL("expected error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("need >=2 pairs") != std::string::npos);
  }
}

TEST_CASE("zero epochs leave the initialization untouched") {
  corpus::ParallelCorpus parallel;
  parallel.source_vocab = words({"a", "b"});
  parallel.target_vocab = words({"x", "y"});
  parallel.pairs.push_back({{1}, {1}});
  parallel.pairs.push_back({{2}, {2}});
  bicvm::Config config;
  config.epochs = 0;
  config.dim = 4;
  config.seed = 17;
  const auto model = bicvm::train(parallel, config);
  num::Rng rng(config.seed);
  const auto fresh = bicvm::init_model(parallel.source_vocab, parallel.target_vocab, 4,
                                       config.margin, rng);
  CHECK(model.source() == fresh.source());
  CHECK(model.target() == fresh.target());
}

TEST_CASE("training is deterministic for a fixed seed") {
  corpus::ParallelCorpus parallel;
  parallel.source_vocab = words({"a", "b", "c"});
  parallel.target_vocab = words({"x", "y", "z"});
  num::Rng gen(2);
  for (int i = 0; i < 12; ++i) {
    const int w = 1 + static_cast<int>(gen.below(3));
    parallel.pairs.push_back({{w}, {w}});
  }
  bicvm::Config config;
  config.dim = 6;
  config.epochs = 3;
  config.seed = 99;
  const auto m1 = bicvm::train(parallel, config);
  const auto m2 = bicvm::train(parallel, config);
  CHECK(m1.source() == m2.source());
  CHECK(m1.target() == m2.target());
}

TEST_CASE("aligned lexicon pairs score above random pairs after training") {
  // source word s_i always co-occurs with target t_i
  std::vector<std::string> src_words, tgt_words;
  for (int i = 0; i < 6; ++i) {
    src_words.push_back("s" + std::to_string(i));
    tgt_words.push_back("t" + std::to_string(i));
  }
  corpus::ParallelCorpus parallel;
  parallel.source_vocab = words(src_words);
  parallel.target_vocab = words(tgt_words);
  num::Rng gen(5);
  for (int n = 0; n < 300; ++n) {
    std::vector<int> s, t;
    for (int j = 0; j < 3; ++j) {
      const int w = 1 + static_cast<int>(gen.below(6));
      s.push_back(w);
      t.push_back(w);
    }
    parallel.pairs.push_back({std::move(s), std::move(t)});
  }
  bicvm::Config config;
  config.dim = 12;
  config.epochs = 10;
  config.lr = 0.02;
  config.seed = 3;
  const auto model = bicvm::train(parallel, config);

  // probe: cosine between the source table row and the target table row
  const auto& src = model.source();
  const auto& tgt = model.target();
  auto cosine_rows = [&](int i, int j) {
    const auto a = src.row(static_cast<std::size_t>(i));
    const auto b = tgt.row(static_cast<std::size_t>(j));
    return num::dot(a, b) / (std::sqrt(num::dot(a, a)) * std::sqrt(num::dot(b, b)));
  };
  double aligned = 0.0, mismatched = 0.0;
  int n_aligned = 0, n_mismatched = 0;
  for (int i = 1; i <= 6; ++i) {
    for (int j = 1; j <= 6; ++j) {
      if (i == j) {
        aligned += cosine_rows(i, j);
        ++n_aligned;
      } else {
        mismatched += cosine_rows(i, j);
        ++n_mismatched;
      }
    }
  }
  CHECK(aligned / n_aligned > mismatched / n_mismatched);
}
