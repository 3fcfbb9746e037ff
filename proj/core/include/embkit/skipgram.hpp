#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "embkit/corpus.hpp"
#include "embkit/embstore.hpp"
#include "embkit/numerics.hpp"

// Monolingual skipgram with negative sampling. The model keeps a cue table
// and a context table; only the cue table is ever exported.

namespace embkit::skipgram {

struct Config {
  std::size_t dim = 64;
  std::size_t epochs = 5;
  std::size_t max_window = 5;
  std::size_t negatives = 5;
  double lr = 0.025;                 // linearly decays to 1e-4 * lr
  double noise_exponent = 0.75;      // noise mass proportional to count^alpha
  double subsample_threshold = 0.0;  // frequent-word subsampling; 0 disables
  std::size_t workers = 1;           // >1 is nondeterministic
  std::uint64_t seed = 1;
};

struct TrainingPair {
  int cue;
  int context;
};

/// Unigram noise distribution with mass proportional to count^alpha over the
/// non-unk vocabulary. Zero counts contribute a floor mass of 1^alpha.
class NoiseDistribution {
 public:
  NoiseDistribution(const corpus::Vocabulary& vocab, double exponent = 0.75);

  int sample(num::Rng& rng) const;
  double probability(int id) const;
  std::size_t support() const { return ids_.size(); }

 private:
  std::vector<int> ids_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

struct SkipgramModel {
  num::ParamSet params;  // "cue" and "ctx", both |V| x d
  std::shared_ptr<const corpus::Vocabulary> vocab;
  std::size_t dim = 0;

  num::Matrix& cue() { return params.value("cue"); }
  const num::Matrix& cue() const { return params.value("cue"); }
  num::Matrix& ctx() { return params.value("ctx"); }
  const num::Matrix& ctx() const { return params.value("ctx"); }

  /// The exported space uses cue embeddings only.
  embstore::EmbeddingSpace export_space(std::string name = "skipgram") const;
};

SkipgramModel init_model(std::shared_ptr<const corpus::Vocabulary> vocab, std::size_t dim,
                         num::Rng& rng);

/// For each position t draws b uniform in [1, max_window] and emits
/// (w_t, w_{t+j}) for 0 < |j| <= b inside the sentence. Closer words have a
/// higher marginal chance of inclusion.
std::vector<TrainingPair> sample_window_pairs(std::span<const int> sentence,
                                              std::size_t max_window, num::Rng& rng);

/// loss = -log sigma(u_c . v_w) - sum_i log sigma(-u_{n_i} . v_w).
/// When grads is given, fills per-row gradient vectors (cue, context, one per
/// negative), all computed from the pre-update values.
struct PairGrads {
  num::Vector cue;
  num::Vector ctx;
  std::vector<num::Vector> neg;
};
double sgns_loss(const num::Matrix& cue, const num::Matrix& ctx, TrainingPair pair,
                 std::span<const int> negatives, PairGrads* grads = nullptr);

/// Convenience for gradient checking: accumulates into the ParamSet's "cue"
/// and "ctx" gradients with frozen negatives.
double sgns_loss_grad(num::ParamSet& params, TrainingPair pair,
                      std::span<const int> negatives);

/// Draws k negatives from the noise distribution, applies one SGD step to the
/// rows involved and returns the pre-update loss.
double sgns_step(SkipgramModel& model, TrainingPair pair, std::size_t k,
                 const NoiseDistribution& noise, num::Rng& rng, double lr);

struct TrainStats {
  std::vector<double> epoch_mean_loss;
  std::size_t pairs = 0;
};

SkipgramModel train(const corpus::MonoCorpus& corpus, const Config& config,
                    TrainStats* stats = nullptr);

}  // namespace embkit::skipgram
