#pragma once

#include <atomic>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "embkit/corpus.hpp"
#include "embkit/numerics.hpp"

// Embedding-space persistence (word2vec-compatible text format), vocabulary
// intersection, cosine queries and exhaustive nearest-neighbor scans.

namespace embkit::embstore {

/// A vocabulary plus a |V| x d matrix. Rows are unit-normalized lazily; rows
/// with zero norm are flagged and excluded from cosine queries.
class EmbeddingSpace {
 public:
  EmbeddingSpace() = default;
  EmbeddingSpace(corpus::Vocabulary vocab, num::Matrix matrix, std::string name = "");

  EmbeddingSpace(const EmbeddingSpace& other);
  EmbeddingSpace& operator=(const EmbeddingSpace& other);
  EmbeddingSpace(EmbeddingSpace&& other) noexcept;
  EmbeddingSpace& operator=(EmbeddingSpace&& other) noexcept;
  ~EmbeddingSpace() = default;

  const corpus::Vocabulary& vocab() const { return vocab_; }
  const num::Matrix& matrix() const { return matrix_; }
  num::Matrix& matrix() { return matrix_; }
  std::size_t dim() const { return matrix_.cols(); }

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  /// Unit-normalized rows, built on first use. Zero rows stay zero.
  const num::Matrix& normalized() const;
  bool is_zero_row(int id) const;

  /// Word is present and has a nonzero vector.
  bool has_vector(std::string_view word) const;

 private:
  void build_normalized() const;

  corpus::Vocabulary vocab_;
  num::Matrix matrix_;
  std::string name_;
  // lazily built; guarded so concurrent readers stay safe
  mutable num::Matrix normalized_;
  mutable std::vector<char> zero_rows_;
  mutable std::atomic<bool> norm_ready_{false};
  mutable std::mutex norm_mutex_;
};

/// Text format: header "<count> <dim>", then one line per word with 17
/// significant digits per value. Round trips are exact for doubles.
void save_text(const EmbeddingSpace& space, const std::string& path);
EmbeddingSpace load_text(const std::string& path);

/// Sorted tokens present in every space; unk is excluded.
std::vector<std::string> intersect_vocab(const std::vector<const EmbeddingSpace*>& spaces);

/// Cosine of the unit-normalized rows; nullopt when either word is missing or
/// has a zero vector.
std::optional<double> cosine(const EmbeddingSpace& space, std::string_view w1,
                             std::string_view w2);

struct Neighbor {
  std::string word;
  double cosine;
};

struct NeighborQuery {
  std::size_t k = 10;
  const std::vector<std::string>* restrict_to = nullptr;
  const std::vector<std::string>* exclude = nullptr;
  bool exclude_plurals = false;  // drops candidates equal to query+"s"/"es"
};

/// Exhaustive cosine scan, descending, ties broken by vocabulary id. The query
/// word itself, zero rows and unk are never returned. Throws on OOV queries.
std::vector<Neighbor> neighbors(const EmbeddingSpace& space, std::string_view word,
                                const NeighborQuery& query);
std::vector<Neighbor> neighbors(const EmbeddingSpace& space, std::string_view word,
                                std::size_t k);

}  // namespace embkit::embstore
