#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embkit/corpus.hpp"
#include "embkit/embstore.hpp"
#include "embkit/numerics.hpp"

// Encoder-decoder translation models: a plain variant that conditions on a
// single encoded vector and an attention variant that attends over
// per-position annotations. The output softmax runs either over the full
// target vocabulary or over a sampled candidate set.

namespace embkit::nmt {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";

enum class Variant { plain, attention };
enum class SoftmaxMode { full, sampled };
enum class Side { source, target };

struct SoftmaxPlan {
  SoftmaxMode mode = SoftmaxMode::full;
  std::size_t budget = 0;  // candidate budget in sampled mode; must be <= |V_t|
};

struct Config {
  Variant variant = Variant::plain;
  std::size_t dim = 64;
  std::size_t hidden = 128;
  std::size_t epochs = 5;
  std::size_t batch = 16;
  double lr = 0.1;
  std::optional<double> clip_norm = 5.0;
  SoftmaxPlan plan{};
  std::uint64_t seed = 1;
};

/// Parameter bundle plus the two vocabularies. The target vocabulary is
/// extended with the reserved <s> and </s> entries at construction.
struct TranslationModel {
  Variant variant = Variant::plain;
  std::size_t dim = 0;
  std::size_t hidden = 0;
  num::ParamSet params;
  std::shared_ptr<const corpus::Vocabulary> source_vocab;
  std::shared_ptr<const corpus::Vocabulary> target_vocab;
  int bos_id = -1;
  int eos_id = -1;

  std::size_t target_size() const { return static_cast<std::size_t>(target_vocab->size()); }
};

/// Copies the vocabulary and appends the reserved decoder tokens when absent.
std::shared_ptr<const corpus::Vocabulary> extend_target_vocab(const corpus::Vocabulary& vocab);

TranslationModel init_model(std::shared_ptr<const corpus::Vocabulary> source_vocab,
                            std::shared_ptr<const corpus::Vocabulary> target_vocab,
                            const Config& config, num::Rng& rng);

/// plain: the final forward GRU state. attention: per-position annotations,
/// row j = concat(forward_j, backward_j), plus their mean in summary.
struct EncodedSource {
  num::Vector summary;
  num::Matrix annotations;  // n x 2h; empty for the plain variant
};

EncodedSource encode(const TranslationModel& model, std::span<const int> source);

struct Attention {
  num::Vector weights;  // alpha over source positions, sums to 1
  num::Vector context; // sum_j alpha_j * annotation_j
};

/// e_j = v_a . tanh(W_a s + U_a h_j); alpha = softmax(e); context = alpha . H
Attention attend(const TranslationModel& model, std::span<const double> state,
                 const num::Matrix& annotations);

/// Sorted candidate ids: the gold ids plus uniform draws without replacement
/// until the budget is reached.
std::vector<int> sample_candidates(std::size_t vocab_size, std::span<const int> gold_ids,
                                   std::size_t budget, num::Rng& rng);

/// -log of the softmax probability restricted to the given candidate logits.
double sampled_logprob(std::span<const double> logits, std::size_t gold_pos);

/// Teacher-forced negative log-likelihood of target plus end-of-sentence
/// token. Sampled plans draw one candidate set per call.
double sequence_loss(const TranslationModel& model, std::span<const int> source,
                     std::span<const int> target, const SoftmaxPlan& plan, num::Rng& rng);

/// Same loss with gradients accumulated into model.params. An empty candidate
/// list means the full softmax; otherwise candidates must be sorted, unique
/// and contain every target id and the EOS id.
double sequence_loss_grad(TranslationModel& model, std::span<const int> source,
                          std::span<const int> target, std::span<const int> candidates);

/// Repeatedly emits the argmax token, feeding it back, until EOS or max_len.
/// The returned sequence excludes EOS.
std::vector<int> translate_greedy(const TranslationModel& model, std::span<const int> source,
                                  std::size_t max_len);

embstore::EmbeddingSpace export_embeddings(const TranslationModel& model, Side side,
                                           std::string name = "");

/// Binary checkpoint: magic, JSON header (variant, sizes, vocabularies), then
/// named matrices as little-endian 64-bit floats.
void save_model(const TranslationModel& model, const std::string& path);
TranslationModel load_model(const std::string& path);

struct TrainStats {
  std::vector<double> epoch_mean_loss;
};

TranslationModel train(const corpus::ParallelCorpus& corpus, const Config& config,
                       TrainStats* stats = nullptr);

}  // namespace embkit::nmt
