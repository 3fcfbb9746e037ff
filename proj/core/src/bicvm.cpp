#include "embkit/bicvm.hpp"

#include <cmath>
#include <stdexcept>

namespace embkit::bicvm {

using num::Matrix;
using num::Rng;
using num::Vector;

embstore::EmbeddingSpace BicvmModel::export_source(std::string name) const {
  return embstore::EmbeddingSpace(*source_vocab, source(), std::move(name));
}

embstore::EmbeddingSpace BicvmModel::export_target(std::string name) const {
  return embstore::EmbeddingSpace(*target_vocab, target(), std::move(name));
}

BicvmModel init_model(std::shared_ptr<const corpus::Vocabulary> source_vocab,
                      std::shared_ptr<const corpus::Vocabulary> target_vocab,
                      std::size_t dim, double margin, Rng& rng) {
  if (margin <= 0.0) throw std::invalid_argument("bicvm: margin must be positive");
  BicvmModel model;
  model.source_vocab = std::move(source_vocab);
  model.target_vocab = std::move(target_vocab);
  model.dim = dim;
  model.margin = margin;
  model.params.add("src", static_cast<std::size_t>(model.source_vocab->size()), dim);
  model.params.add("tgt", static_cast<std::size_t>(model.target_vocab->size()), dim);
  const double bound = 0.5 / static_cast<double>(dim);
  for (auto name : {"src", "tgt"}) {
    Matrix& m = model.params.value(name);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  }
  return model;
}

Vector compose(const Matrix& embeddings, std::span<const int> sentence) {
  Vector r(embeddings.cols(), 0.0);
  for (int id : sentence) {
    if (id < 0 || static_cast<std::size_t>(id) >= embeddings.rows()) {
      throw std::out_of_range("compose: invalid word id " + std::to_string(id));
    }
    num::axpy(1.0, embeddings.row(static_cast<std::size_t>(id)), r);
  }
  return r;
}

double contrastive_loss(std::span<const double> r_e, std::span<const double> r_f,
                        std::span<const double> r_noise, double margin) {
  if (r_e.size() != r_f.size() || r_e.size() != r_noise.size()) {
    throw std::invalid_argument("contrastive_loss: dimension mismatch");
  }
  double d_pos = 0.0, d_neg = 0.0;
  for (std::size_t i = 0; i < r_e.size(); ++i) {
    const double a = r_e[i] - r_f[i];
    const double b = r_e[i] - r_noise[i];
    d_pos += a * a;
    d_neg += b * b;
  }
  return std::max(0.0, margin + d_pos - d_neg);
}

namespace {

struct TripleGrads {
  Vector d_e, d_f, d_n;  // sentence-level gradients, shared by every word in it
};

double triple_loss(const Matrix& src, const Matrix& tgt, std::span<const int> source,
                   std::span<const int> target, std::span<const int> noise, double margin,
                   TripleGrads* grads) {
  const Vector r_e = compose(src, source);
  const Vector r_f = compose(tgt, target);
  const Vector r_n = compose(tgt, noise);
  const double loss = contrastive_loss(r_e, r_f, r_n, margin);
  if (!grads) return loss;
  const std::size_t d = src.cols();
  grads->d_e.assign(d, 0.0);
  grads->d_f.assign(d, 0.0);
  grads->d_n.assign(d, 0.0);
  if (loss <= 0.0) return loss;  // hinge inactive: exactly zero gradient
  // d/dR_E [ |R_E-R_F|^2 - |R_E-R_N|^2 ] = 2(R_N - R_F); similarly for the others
  for (std::size_t i = 0; i < d; ++i) {
    grads->d_e[i] = 2.0 * (r_n[i] - r_f[i]);
    grads->d_f[i] = -2.0 * (r_e[i] - r_f[i]);
    grads->d_n[i] = 2.0 * (r_e[i] - r_n[i]);
  }
  return loss;
}

}  // namespace

double triple_loss_grad(num::ParamSet& params, std::span<const int> source,
                        std::span<const int> target, std::span<const int> noise,
                        double margin) {
  TripleGrads g;
  const double loss = triple_loss(params.value("src"), params.value("tgt"), source,
                                  target, noise, margin, &g);
  Matrix& g_src = params.grad("src");
  Matrix& g_tgt = params.grad("tgt");
  for (int id : source) num::axpy(1.0, g.d_e, g_src.row(static_cast<std::size_t>(id)));
  for (int id : target) num::axpy(1.0, g.d_f, g_tgt.row(static_cast<std::size_t>(id)));
  for (int id : noise) num::axpy(1.0, g.d_n, g_tgt.row(static_cast<std::size_t>(id)));
  return loss;
}

BicvmModel train(const corpus::ParallelCorpus& corpus, const Config& config,
                 TrainStats* stats) {
  if (corpus.pairs.empty()) throw std::runtime_error("empty corpus");
  if (corpus.pairs.size() < 2) throw std::runtime_error("need >=2 pairs for noise sampling");
  Rng rng(config.seed);
  BicvmModel model = init_model(corpus.source_vocab, corpus.target_vocab, config.dim,
                                config.margin, rng);
  const std::size_t n = corpus.pairs.size();
  TripleGrads g;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // uniform over the other pairs
      std::size_t noise_idx = rng.below(n - 1);
      if (noise_idx >= i) ++noise_idx;
      const auto& pair = corpus.pairs[i];
      const auto& noise = corpus.pairs[noise_idx].second;
      loss_sum += triple_loss(model.source(), model.target(), pair.first, pair.second,
                              noise, config.margin, &g);
      for (int id : pair.first) {
        num::axpy(-config.lr, g.d_e, model.source().row(static_cast<std::size_t>(id)));
      }
      for (int id : pair.second) {
        num::axpy(-config.lr, g.d_f, model.target().row(static_cast<std::size_t>(id)));
      }
      for (int id : noise) {
        num::axpy(-config.lr, g.d_n, model.target().row(static_cast<std::size_t>(id)));
      }
    }
    if (stats) stats->epoch_mean_loss.push_back(loss_sum / static_cast<double>(n));
  }
  return model;
}

}  // namespace embkit::bicvm
