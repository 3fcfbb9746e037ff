#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "embkit/corpus.hpp"
#include "embkit/embstore.hpp"
#include "embkit/numerics.hpp"

// Bilingual compositional model: sentence vectors are sums of word
// embeddings, trained so aligned pairs are closer than noise sentences by a
// margin (hinge on squared Euclidean distances).

namespace embkit::bicvm {

struct Config {
  std::size_t dim = 64;
  std::size_t epochs = 5;
  double lr = 0.01;
  double margin = 1.0;
  std::uint64_t seed = 1;
};

struct BicvmModel {
  num::ParamSet params;  // "src": |V_s| x d, "tgt": |V_t| x d
  std::shared_ptr<const corpus::Vocabulary> source_vocab;
  std::shared_ptr<const corpus::Vocabulary> target_vocab;
  std::size_t dim = 0;
  double margin = 1.0;

  num::Matrix& source() { return params.value("src"); }
  const num::Matrix& source() const { return params.value("src"); }
  num::Matrix& target() { return params.value("tgt"); }
  const num::Matrix& target() const { return params.value("tgt"); }

  embstore::EmbeddingSpace export_source(std::string name = "bicvm-src") const;
  embstore::EmbeddingSpace export_target(std::string name = "bicvm-tgt") const;
};

BicvmModel init_model(std::shared_ptr<const corpus::Vocabulary> source_vocab,
                      std::shared_ptr<const corpus::Vocabulary> target_vocab,
                      std::size_t dim, double margin, num::Rng& rng);

/// Sum of the word embeddings; the empty sentence composes to zero.
num::Vector compose(const num::Matrix& embeddings, std::span<const int> sentence);

/// max(0, margin + |R_E - R_F|^2 - |R_E - R_noise|^2)
double contrastive_loss(std::span<const double> r_e, std::span<const double> r_f,
                        std::span<const double> r_noise, double margin);

/// Loss for one (source, target, noise-target) triple with gradients
/// accumulated into the ParamSet ("src", "tgt"). Zero gradient when the hinge
/// is inactive.
double triple_loss_grad(num::ParamSet& params, std::span<const int> source,
                        std::span<const int> target, std::span<const int> noise,
                        double margin);

struct TrainStats {
  std::vector<double> epoch_mean_loss;
};

/// Per pair, samples one noise target uniformly from the other pairs and takes
/// an SGD step on the triple loss. Throws unless the corpus has >= 2 pairs.
BicvmModel train(const corpus::ParallelCorpus& corpus, const Config& config,
                 TrainStats* stats = nullptr);

}  // namespace embkit::bicvm
