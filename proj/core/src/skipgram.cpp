#include "embkit/skipgram.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace embkit::skipgram {

using num::Matrix;
using num::Rng;
using num::Vector;

NoiseDistribution::NoiseDistribution(const corpus::Vocabulary& vocab, double exponent) {
  double total = 0.0;
  for (int id = 0; id < vocab.size(); ++id) {
    if (id == vocab.unk_id()) continue;
    const auto count = std::max<std::int64_t>(vocab.count(id), 1);
    const double mass = std::pow(static_cast<double>(count), exponent);
    ids_.push_back(id);
    probs_.push_back(mass);
    total += mass;
  }
  if (ids_.empty()) throw std::runtime_error("NoiseDistribution: empty support");
  cumulative_.resize(ids_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    probs_[i] /= total;
    acc += probs_[i];
    cumulative_[i] = acc;
  }
  cumulative_.back() = 1.0;
}

int NoiseDistribution::sample(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto i = static_cast<std::size_t>(it - cumulative_.begin());
  return ids_[std::min(i, ids_.size() - 1)];
}

double NoiseDistribution::probability(int id) const {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == id) return probs_[i];
  }
  return 0.0;
}

embstore::EmbeddingSpace SkipgramModel::export_space(std::string name) const {
  return embstore::EmbeddingSpace(*vocab, cue(), std::move(name));
}

SkipgramModel init_model(std::shared_ptr<const corpus::Vocabulary> vocab, std::size_t dim,
                         Rng& rng) {
  SkipgramModel model;
  model.vocab = std::move(vocab);
  model.dim = dim;
  const auto v = static_cast<std::size_t>(model.vocab->size());
  model.params.add("cue", v, dim);
  model.params.add("ctx", v, dim);
  const double bound = 0.5 / static_cast<double>(dim);
  Matrix& cue = model.cue();
  for (std::size_t i = 0; i < cue.size(); ++i) cue.data()[i] = rng.uniform(-bound, bound);
  // context table starts at zero, as in the canonical trainer
  return model;
}

std::vector<TrainingPair> sample_window_pairs(std::span<const int> sentence,
                                              std::size_t max_window, Rng& rng) {
  if (max_window < 1) throw std::invalid_argument("sample_window_pairs: max_window >= 1");
  std::vector<TrainingPair> pairs;
  const auto n = static_cast<std::ptrdiff_t>(sentence.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const auto b = static_cast<std::ptrdiff_t>(1 + rng.below(max_window));
    for (std::ptrdiff_t j = -b; j <= b; ++j) {
      if (j == 0) continue;
      const std::ptrdiff_t s = t + j;
      if (s < 0 || s >= n) continue;
      pairs.push_back({sentence[static_cast<std::size_t>(t)],
                       sentence[static_cast<std::size_t>(s)]});
    }
  }
  return pairs;
}

double sgns_loss(const Matrix& cue, const Matrix& ctx, TrainingPair pair,
                 std::span<const int> negatives, PairGrads* grads) {
  const auto v = cue.row(static_cast<std::size_t>(pair.cue));
  const auto u = ctx.row(static_cast<std::size_t>(pair.context));
  const std::size_t d = cue.cols();

  double loss = -num::log_sigmoid(num::dot(u, v));
  if (grads) {
    grads->cue.assign(d, 0.0);
    grads->ctx.assign(d, 0.0);
    grads->neg.assign(negatives.size(), Vector(d, 0.0));
    const double g_pos = num::sigmoid(num::dot(u, v)) - 1.0;  // d(loss)/d(u.v)
    num::axpy(g_pos, u, grads->cue);
    num::axpy(g_pos, v, grads->ctx);
  }
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    const auto un = ctx.row(static_cast<std::size_t>(negatives[i]));
    const double s = num::dot(un, v);
    loss -= num::log_sigmoid(-s);
    if (grads) {
      const double g_neg = num::sigmoid(s);
      num::axpy(g_neg, un, grads->cue);
      num::axpy(g_neg, v, grads->neg[i]);
    }
  }
  return loss;
}

double sgns_loss_grad(num::ParamSet& params, TrainingPair pair,
                      std::span<const int> negatives) {
  PairGrads g;
  const double loss = sgns_loss(params.value("cue"), params.value("ctx"), pair,
                                negatives, &g);
  num::axpy(1.0, g.cue, params.grad("cue").row(static_cast<std::size_t>(pair.cue)));
  num::axpy(1.0, g.ctx, params.grad("ctx").row(static_cast<std::size_t>(pair.context)));
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    num::axpy(1.0, g.neg[i], params.grad("ctx").row(static_cast<std::size_t>(negatives[i])));
  }
  return loss;
}

double sgns_step(SkipgramModel& model, TrainingPair pair, std::size_t k,
                 const NoiseDistribution& noise, Rng& rng, double lr) {
  if (k < 1) throw std::invalid_argument("sgns_step: k must be >= 1");
  std::vector<int> negatives(k);
  for (auto& n : negatives) n = noise.sample(rng);
  PairGrads g;
  const double loss = sgns_loss(model.cue(), model.ctx(), pair, negatives, &g);
  num::axpy(-lr, g.cue, model.cue().row(static_cast<std::size_t>(pair.cue)));
  num::axpy(-lr, g.ctx, model.ctx().row(static_cast<std::size_t>(pair.context)));
  for (std::size_t i = 0; i < k; ++i) {
    num::axpy(-lr, g.neg[i], model.ctx().row(static_cast<std::size_t>(negatives[i])));
  }
  return loss;
}

namespace {

// word2vec-style occurrence drop for very frequent words
std::vector<int> apply_word_subsampling(std::span<const int> sentence,
                                        const corpus::Vocabulary& vocab,
                                        std::size_t total_tokens, double threshold,
                                        Rng& rng) {
  std::vector<int> kept;
  kept.reserve(sentence.size());
  for (int id : sentence) {
    const double f = static_cast<double>(vocab.count(id)) /
                     static_cast<double>(std::max<std::size_t>(total_tokens, 1));
    if (f > 0.0) {
      const double keep = std::min(1.0, std::sqrt(threshold / f) + threshold / f);
      if (rng.uniform() >= keep) continue;
    }
    kept.push_back(id);
  }
  return kept;
}

struct EpochAccumulator {
  double loss_sum = 0.0;
  std::size_t pairs = 0;
};

void train_range(SkipgramModel& model, const corpus::MonoCorpus& corpus,
                 const Config& config, const NoiseDistribution& noise,
                 std::span<const std::size_t> order, std::size_t begin, std::size_t end,
                 Rng rng, double lr_start, double lr_min, std::size_t total_sentences,
                 std::atomic<std::size_t>& progress, EpochAccumulator& acc) {
  for (std::size_t i = begin; i < end; ++i) {
    const auto done = progress.fetch_add(1, std::memory_order_relaxed);
    const double frac = static_cast<double>(done) / static_cast<double>(total_sentences);
    const double lr = std::max(lr_min, lr_start * (1.0 - frac));
    const auto& sentence = corpus.sentences[order[i]];
    std::vector<int> filtered;
    std::span<const int> view(sentence);
    if (config.subsample_threshold > 0.0) {
      filtered = apply_word_subsampling(sentence, *corpus.vocab, corpus.token_count,
                                        config.subsample_threshold, rng);
      view = filtered;
    }
    for (const auto pair : sample_window_pairs(view, config.max_window, rng)) {
      if (pair.cue == corpus.vocab->unk_id()) continue;
      acc.loss_sum += sgns_step(model, pair, config.negatives, noise, rng, lr);
      ++acc.pairs;
    }
  }
}

}  // namespace

SkipgramModel train(const corpus::MonoCorpus& corpus, const Config& config,
                    TrainStats* stats) {
  if (corpus.sentences.empty()) throw std::runtime_error("empty corpus");
  Rng init_rng(config.seed);
  SkipgramModel model = init_model(corpus.vocab, config.dim, init_rng);
  const NoiseDistribution noise(*corpus.vocab, config.noise_exponent);

  const std::size_t n = corpus.sentences.size();
  const std::size_t total = config.epochs * n;
  const double lr_min = 1e-4 * config.lr;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::atomic<std::size_t> progress{0};
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochAccumulator total_acc;
    if (config.workers <= 1) {
      train_range(model, corpus, config, noise, order, 0, n,
                  init_rng.spawn(epoch + 1), config.lr, lr_min, total, progress,
                  total_acc);
    } else {
      // unsynchronized shard updates; callers must treat the run as
      // nondeterministic
      const std::size_t w = config.workers;
      std::vector<EpochAccumulator> accs(w);
      std::vector<std::thread> threads;
      for (std::size_t t = 0; t < w; ++t) {
        const std::size_t begin = n * t / w;
        const std::size_t end = n * (t + 1) / w;
        threads.emplace_back([&, t, begin, end] {
          train_range(model, corpus, config, noise, order, begin, end,
                      init_rng.spawn(epoch * w + t + 1), config.lr, lr_min, total,
                      progress, accs[t]);
        });
      }
      for (auto& th : threads) th.join();
      for (const auto& a : accs) {
        total_acc.loss_sum += a.loss_sum;
        total_acc.pairs += a.pairs;
      }
    }
    if (stats) {
      stats->epoch_mean_loss.push_back(
          total_acc.pairs ? total_acc.loss_sum / static_cast<double>(total_acc.pairs) : 0.0);
      stats->pairs += total_acc.pairs;
    }
  }
  return model;
}

}  // namespace embkit::skipgram
