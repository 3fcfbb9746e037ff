#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "embkit/corpus.hpp"
#include "embkit/embstore.hpp"

// Shared-translation diagnostic: estimate per-word translation sets from a
// bitext with Dice scores, test whether two source words share a target-side
// pivot, and relate that to their embedding cosine.

namespace embkit::pivot {

struct AlignmentEntry {
  int target;
  double score;  // Dice coefficient in [0, 1]
};

/// Per-source-word translation candidates with score >= threshold, sorted
/// descending by score (ties by target id).
struct AlignmentTable {
  std::vector<std::vector<AlignmentEntry>> by_source;
  std::shared_ptr<const corpus::Vocabulary> source_vocab;
  std::shared_ptr<const corpus::Vocabulary> target_vocab;
  double threshold = 0.0;
};

/// Dice(s, t) = 2 C(s,t) / (C(s) + C(t)) over sentence-pair co-occurrence
/// counts; a word counts once per sentence it appears in.
AlignmentTable estimate_translations(const corpus::ParallelCorpus& corpus,
                                     double threshold = 0.1);

/// Target id both words translate to, picking the witness whose smaller
/// association score is highest; nullopt when the sets are disjoint.
std::optional<int> shares_pivot(const AlignmentTable& table, int s1, int s2);

struct PivotRow {
  std::string w1, w2;
  bool shared = false;
  std::string witness;  // empty when not shared
  double cosine = 0.0;
};

struct PivotReport {
  std::vector<PivotRow> rows;
  std::size_t shared_count = 0;
  std::size_t unshared_count = 0;
  double mean_cosine_shared = 0.0;
  double mean_cosine_unshared = 0.0;
  std::optional<double> point_biserial;  // undefined for degenerate inputs
};

/// Scores each word pair: does it share a pivot, and what is its cosine in
/// the given space. Pairs missing from the table or space are skipped; throws
/// when nothing is resolvable.
PivotReport pivot_report(const AlignmentTable& table, const embstore::EmbeddingSpace& space,
                         const std::vector<std::pair<std::string, std::string>>& pairs);

/// CSV rows plus '#'-prefixed summary lines.
void write_csv(const PivotReport& report, std::ostream& out);

}  // namespace embkit::pivot
