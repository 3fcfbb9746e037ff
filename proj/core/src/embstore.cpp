#include "embkit/embstore.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace embkit::embstore {

EmbeddingSpace::EmbeddingSpace(corpus::Vocabulary vocab, num::Matrix matrix,
                               std::string name)
    : vocab_(std::move(vocab)), matrix_(std::move(matrix)), name_(std::move(name)) {
  if (static_cast<std::size_t>(vocab_.size()) != matrix_.rows()) {
    throw std::invalid_argument("EmbeddingSpace: vocab size " +
                                std::to_string(vocab_.size()) + " != matrix rows " +
                                std::to_string(matrix_.rows()));
  }
}

EmbeddingSpace::EmbeddingSpace(const EmbeddingSpace& other)
    : vocab_(other.vocab_), matrix_(other.matrix_), name_(other.name_) {}

EmbeddingSpace& EmbeddingSpace::operator=(const EmbeddingSpace& other) {
  if (this != &other) {
    vocab_ = other.vocab_;
    matrix_ = other.matrix_;
    name_ = other.name_;
    normalized_ = num::Matrix();
    zero_rows_.clear();
    norm_ready_.store(false);
  }
  return *this;
}

EmbeddingSpace::EmbeddingSpace(EmbeddingSpace&& other) noexcept
    : vocab_(std::move(other.vocab_)),
      matrix_(std::move(other.matrix_)),
      name_(std::move(other.name_)),
      normalized_(std::move(other.normalized_)),
      zero_rows_(std::move(other.zero_rows_)) {
  norm_ready_.store(other.norm_ready_.load());
}

EmbeddingSpace& EmbeddingSpace::operator=(EmbeddingSpace&& other) noexcept {
  if (this != &other) {
    vocab_ = std::move(other.vocab_);
    matrix_ = std::move(other.matrix_);
    name_ = std::move(other.name_);
    normalized_ = std::move(other.normalized_);
    zero_rows_ = std::move(other.zero_rows_);
    norm_ready_.store(other.norm_ready_.load());
  }
  return *this;
}

void EmbeddingSpace::build_normalized() const {
  std::lock_guard<std::mutex> lock(norm_mutex_);
  if (norm_ready_.load(std::memory_order_relaxed)) return;
  normalized_ = matrix_;
  zero_rows_.assign(matrix_.rows(), 0);
  for (std::size_t r = 0; r < normalized_.rows(); ++r) {
    auto row = normalized_.row(r);
    const double n = std::sqrt(num::dot(row, row));
    if (n == 0.0) {
      zero_rows_[r] = 1;
      continue;
    }
    for (double& x : row) x /= n;
  }
  norm_ready_.store(true, std::memory_order_release);
}

const num::Matrix& EmbeddingSpace::normalized() const {
  if (!norm_ready_.load(std::memory_order_acquire)) build_normalized();
  return normalized_;
}

bool EmbeddingSpace::is_zero_row(int id) const {
  normalized();
  return zero_rows_[static_cast<std::size_t>(id)] != 0;
}

bool EmbeddingSpace::has_vector(std::string_view word) const {
  if (!vocab_.contains(word)) return false;
  return !is_zero_row(vocab_.id(word));
}

void save_text(const EmbeddingSpace& space, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << space.vocab().size() << ' ' << space.dim() << '\n';
  char buf[64];
  for (int i = 0; i < space.vocab().size(); ++i) {
    out << space.vocab().word(i);
    const auto row = space.matrix().row(static_cast<std::size_t>(i));
    for (double v : row) {
      std::snprintf(buf, sizeof(buf), " %.17g", v);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

EmbeddingSpace load_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  std::istringstream header(line);
  std::size_t count = 0, dim = 0;
  if (!(header >> count >> dim) || dim == 0) {
    throw std::runtime_error(path + ": line 1: malformed header '" + line + "'");
  }
  std::vector<std::string> words;
  words.reserve(count);
  num::Matrix matrix(count, dim);
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t line_no = r + 2;
    if (!std::getline(in, line)) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": expected " + std::to_string(count) + " rows, got " +
                               std::to_string(r));
    }
    std::istringstream row(line);
    std::string word;
    if (!(row >> word)) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": empty row");
    }
    std::size_t got = 0;
    double v = 0.0;
    while (got < dim && row >> v) matrix(r, got++) = v;
    double extra;
    if (got < dim || (row >> extra)) {
      // count whatever remains to name the actual arity
      std::size_t total = got;
      if (got == dim) {
        ++total;
        while (row >> extra) ++total;
      }
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected " +
                               std::to_string(dim) + " values, got " + std::to_string(total));
    }
    words.push_back(word);
  }
  auto vocab = corpus::Vocabulary::from_words(words);
  if (static_cast<std::size_t>(vocab.size()) != count) {
    // from_words appended an unk row; give it a zero vector
    num::Matrix padded(count + 1, dim);
    std::copy(matrix.data(), matrix.data() + matrix.size(), padded.data());
    matrix = std::move(padded);
  }
  std::string name = path;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos) {
    name = name.substr(slash + 1);
  }
  if (const auto dot = name.find_last_of('.'); dot != std::string::npos && dot > 0) {
    name = name.substr(0, dot);
  }
  return EmbeddingSpace(std::move(vocab), std::move(matrix), name);
}

std::vector<std::string> intersect_vocab(const std::vector<const EmbeddingSpace*>& spaces) {
  if (spaces.empty()) throw std::invalid_argument("intersect_vocab: no spaces");
  std::vector<std::string> shared;
  const auto& first = spaces.front()->vocab();
  for (int i = 0; i < first.size(); ++i) {
    if (i == first.unk_id()) continue;
    const std::string& w = first.word(i);
    bool everywhere = true;
    for (std::size_t s = 1; s < spaces.size(); ++s) {
      const auto& v = spaces[s]->vocab();
      if (!v.contains(w) || v.id(w) == v.unk_id()) {
        everywhere = false;
        break;
      }
    }
    if (everywhere) shared.push_back(w);
  }
  std::sort(shared.begin(), shared.end());
  return shared;
}

std::optional<double> cosine(const EmbeddingSpace& space, std::string_view w1,
                             std::string_view w2) {
  if (!space.has_vector(w1) || !space.has_vector(w2)) return std::nullopt;
  const auto& n = space.normalized();
  const auto r1 = n.row(static_cast<std::size_t>(space.vocab().id(w1)));
  const auto r2 = n.row(static_cast<std::size_t>(space.vocab().id(w2)));
  return num::dot(r1, r2);
}

std::vector<Neighbor> neighbors(const EmbeddingSpace& space, std::string_view word,
                                const NeighborQuery& query) {
  const auto& vocab = space.vocab();
  if (!vocab.contains(word)) {
    throw std::runtime_error("out of vocabulary: " + std::string(word));
  }
  const int qid = vocab.id(word);
  if (space.is_zero_row(qid)) {
    throw std::runtime_error("zero vector for query word: " + std::string(word));
  }
  const auto& norm = space.normalized();
  const auto qrow = norm.row(static_cast<std::size_t>(qid));

  std::vector<int> candidates;
  if (query.restrict_to) {
    candidates.reserve(query.restrict_to->size());
    for (const auto& w : *query.restrict_to) {
      if (vocab.contains(w)) candidates.push_back(vocab.id(w));
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  } else {
    candidates.resize(static_cast<std::size_t>(vocab.size()));
    for (int i = 0; i < vocab.size(); ++i) candidates[static_cast<std::size_t>(i)] = i;
  }

  std::set<std::string> excluded;
  if (query.exclude) excluded.insert(query.exclude->begin(), query.exclude->end());
  const std::string plural_s = std::string(word) + "s";
  const std::string plural_es = std::string(word) + "es";

  std::vector<Neighbor> scored;
  for (int id : candidates) {
    if (id == qid || id == vocab.unk_id() || space.is_zero_row(id)) continue;
    const std::string& w = vocab.word(id);
    if (excluded.contains(w)) continue;
    if (query.exclude_plurals && (w == plural_s || w == plural_es)) continue;
    scored.push_back({w, num::dot(qrow, norm.row(static_cast<std::size_t>(id)))});
  }
  // descending cosine, ties by vocabulary id (candidates are id-ordered, so
  // stable sort preserves that)
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Neighbor& a, const Neighbor& b) { return a.cosine > b.cosine; });
  if (scored.size() > query.k) scored.resize(query.k);
  return scored;
}

std::vector<Neighbor> neighbors(const EmbeddingSpace& space, std::string_view word,
                                std::size_t k) {
  NeighborQuery q;
  q.k = k;
  return neighbors(space, word, q);
}

}  // namespace embkit::embstore
