#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "embkit/corpus.hpp"
#include "embkit/embstore.hpp"
#include "embkit/numerics.hpp"
#include "embkit/skipgram.hpp"
#include "embkit/svm.hpp"

// Evaluation battery: rank correlation against similarity gold standards,
// four-way synonym questions, analogy resolution by vector offset, supervised
// synonym/antonym classification, and data-quantity learning curves.

namespace embkit::eval {

struct SimilarityDataset {
  struct Item {
    std::string w1, w2;
    double score;
  };
  std::string name;
  std::vector<Item> items;
};

struct ToeflSet {
  struct Question {
    std::string cue;
    std::array<std::string, 4> choices;
    int answer;  // 0..3
  };
  std::string name = "toefl";
  std::vector<Question> questions;
};

struct AnalogySet {
  struct Question {
    std::string a, b, c, d;
    bool syntactic;
  };
  std::string name = "analogy";
  std::vector<Question> questions;
};

struct SynAntSet {
  struct Pair {
    std::string w1, w2;
    bool synonym;
  };
  std::string name = "synant";
  std::vector<Pair> pairs;
};

// Loaders for the file formats described in the README. Dataset files are
// inputs, not bundled; data/manifest.json records names and expected sizes.
SimilarityDataset load_similarity(const std::string& path, std::string name = "");
ToeflSet load_toefl(const std::string& path);
/// Google analogy format; categories whose name starts with one of the given
/// prefixes count as syntactic.
AnalogySet load_analogy(const std::string& path,
                        const std::vector<std::string>& syntactic_prefixes = {"gram"});
SynAntSet load_synant(const std::string& path);

/// Spearman's rho with average ranks for ties. Throws on length mismatch,
/// fewer than two points, or a constant input vector.
double spearman(std::span<const double> xs, std::span<const double> ys);

struct SimilarityResult {
  double rho = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
};

/// Cosine per scored pair; pairs with a missing word (or a word outside
/// restrict) are skipped and counted.
SimilarityResult eval_similarity(const embstore::EmbeddingSpace& space,
                                 const SimilarityDataset& dataset,
                                 const std::vector<std::string>* restrict_to = nullptr);

struct ToeflResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t retained = 0;
  std::size_t dropped = 0;
  std::size_t ties = 0;  // scored as incorrect
};

/// Correct iff the gold choice is the strict cosine argmax among the four
/// choices; full_vocab_search scores the literal protocol instead (the
/// nearest word in the whole searchable vocabulary must be the gold choice).
ToeflResult eval_toefl(const embstore::EmbeddingSpace& space, const ToeflSet& set,
                       const std::vector<std::string>* restrict_to = nullptr,
                       bool full_vocab_search = false);

struct AnalogyResult {
  double syntactic_accuracy = 0.0;
  double semantic_accuracy = 0.0;
  std::size_t syntactic_correct = 0, semantic_correct = 0;
  std::size_t syntactic_used = 0, semantic_used = 0;
  std::size_t syntactic_skipped = 0, semantic_skipped = 0;

  std::size_t retained() const { return syntactic_used + semantic_used; }
};

/// v = e_c + e_b - e_a over unit-normalized rows; the answer is the nearest
/// candidate by cosine excluding the three question words.
AnalogyResult eval_analogy(const embstore::EmbeddingSpace& space, const AnalogySet& set,
                           const std::vector<std::string>* restrict_to = nullptr);

/// Gaussian-kernel max-margin classifier trained by SMO; labels are +1/-1.
KernelSvm train_kernel_classifier(const std::vector<num::Vector>& features,
                                  const std::vector<int>& labels, double gamma, double c,
                                  num::Rng& rng);

struct SynAntResult {
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracies;
  std::size_t used = 0;
  std::size_t skipped = 0;
};

struct SynAntOptions {
  std::size_t folds = 10;
  double c = 10.0;
  std::optional<double> gamma;  // default: 1 / (dim * mean feature variance)
};

/// Features are concat(e_w1, e_w2); seeded shuffle into folds, train on
/// folds-1, test on the held-out fold.
SynAntResult eval_synant(const embstore::EmbeddingSpace& space, const SynAntSet& set,
                         num::Rng& rng, const SynAntOptions& options = {});

struct CurveRow {
  double fraction;
  std::string dataset;
  double rho;
  std::size_t pairs_used;
};

/// For each fraction: subsample, train skipgram, score each dataset. Every
/// cell reuses the base seed so a full-fraction cell equals a direct run.
std::vector<CurveRow> learning_curve(const corpus::MonoCorpus& corpus,
                                     std::span<const double> fractions,
                                     const std::vector<SimilarityDataset>& datasets,
                                     const skipgram::Config& trainer_config);

void write_curve_csv(std::span<const CurveRow> rows, std::ostream& out);

/// One row per (model, dataset): rho for similarity sets, accuracy fractions
/// for the rest.
struct ReportRow {
  std::string model;
  std::string dataset;
  std::string metric;  // "rho" or "pct"
  double value;
  std::size_t used;
  std::size_t skipped;
};

void write_report_csv(std::span<const ReportRow> rows, std::ostream& out);
void write_report_pretty(std::span<const ReportRow> rows, std::ostream& out);

}  // namespace embkit::eval
