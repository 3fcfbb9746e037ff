#include "embkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace embkit::eval {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delim)) fields.push_back(field);
  return fields;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

char sniff_delimiter(const std::string& line) {
  if (line.find('\t') != std::string::npos) return '\t';
  if (line.find(',') != std::string::npos) return ',';
  return ' ';
}

std::string stem_of(const std::string& path) {
  std::string name = path;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos) {
    name = name.substr(slash + 1);
  }
  if (const auto dot = name.find_last_of('.'); dot != std::string::npos && dot > 0) {
    name = name.substr(0, dot);
  }
  return name;
}

bool word_allowed(const embstore::EmbeddingSpace& space, const std::string& word,
                  const std::vector<std::string>* restrict_sorted) {
  if (!space.has_vector(word)) return false;
  if (!restrict_sorted) return true;
  return std::binary_search(restrict_sorted->begin(), restrict_sorted->end(), word);
}

}  // namespace

SimilarityDataset load_similarity(const std::string& path, std::string name) {
  SimilarityDataset ds;
  ds.name = name.empty() ? stem_of(path) : std::move(name);
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, sniff_delimiter(line));
    if (fields.size() < 3) {
      throw std::runtime_error(path + ": line " + std::to_string(i + 1) +
                               ": expected word1,word2,score");
    }
    try {
      ds.items.push_back({trim(fields[0]), trim(fields[1]), std::stod(trim(fields[2]))});
    } catch (const std::exception&) {
      if (i == 0) continue;  // header line
      throw std::runtime_error(path + ": line " + std::to_string(i + 1) +
                               ": bad score '" + fields[2] + "'");
    }
  }
  if (ds.items.empty()) throw std::runtime_error(path + ": no scored pairs");
  return ds;
}

ToeflSet load_toefl(const std::string& path) {
  ToeflSet set;
  set.name = stem_of(path);
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    if (line.empty() || line[0] == '#') continue;
    const auto parts = split(line, '|');
    if (parts.size() != 3) {
      throw std::runtime_error(path + ": line " + std::to_string(i + 1) +
                               ": expected 'cue | c1 c2 c3 c4 | answer'");
    }
    ToeflSet::Question q;
    q.cue = trim(parts[0]);
    std::istringstream cs(parts[1]);
    std::vector<std::string> choices;
    std::string w;
    while (cs >> w) choices.push_back(w);
    if (choices.size() != 4) {
      throw std::runtime_error(path + ": line " + std::to_string(i + 1) +
                               ": expected 4 choices, got " + std::to_string(choices.size()));
    }
    std::copy(choices.begin(), choices.end(), q.choices.begin());
    q.answer = std::stoi(trim(parts[2]));
    if (q.answer < 0 || q.answer > 3) {
      throw std::runtime_error(path + ": line " + std::to_string(i + 1) +
                               ": answer index out of range");
    }
    set.questions.push_back(std::move(q));
  }
  if (set.questions.empty()) throw std::runtime_error(path + ": no questions");
  return set;
}

AnalogySet load_analogy(const std::string& path,
                        const std::vector<std::string>& syntactic_prefixes) {
  AnalogySet set;
  set.name = stem_of(path);
  bool syntactic = false;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    if (line.empty()) continue;
    if (line[0] == ':') {
      const std::string category = trim(line.substr(1));
      syntactic = std::any_of(syntactic_prefixes.begin(), syntactic_prefixes.end(),
                              [&](const std::string& p) { return category.starts_with(p); });
      continue;
    }
    std::istringstream in(line);
    AnalogySet::Question q;
    if (!(in >> q.a >> q.b >> q.c >> q.d)) {
      throw std::runtime_error(path + ": line " + std::to_string(i + 1) +
                               ": expected 'a b c d'");
    }
    q.syntactic = syntactic;
    set.questions.push_back(std::move(q));
  }
  if (set.questions.empty()) throw std::runtime_error(path + ": no questions");
  return set;
}

SynAntSet load_synant(const std::string& path) {
  SynAntSet set;
  set.name = stem_of(path);
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, sniff_delimiter(line));
    if (fields.size() < 3) {
      throw std::runtime_error(path + ": line " + std::to_string(i + 1) +
                               ": expected word1,word2,label");
    }
    const std::string label = trim(fields[2]);
    bool synonym;
    if (label == "synonym" || label == "syn") {
      synonym = true;
    } else if (label == "antonym" || label == "ant") {
      synonym = false;
    } else if (i == 0) {
      continue;  // header line
    } else {
      throw std::runtime_error(path + ": line " + std::to_string(i + 1) + ": bad label '" +
                               label + "'");
    }
    set.pairs.push_back({trim(fields[0]), trim(fields[1]), synonym});
  }
  if (set.pairs.empty()) throw std::runtime_error(path + ": no labelled pairs");
  return set;
}

namespace {

std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw std::runtime_error("correlation undefined for constant input");
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("spearman: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("spearman: need at least 2 points");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

SimilarityResult eval_similarity(const embstore::EmbeddingSpace& space,
                                 const SimilarityDataset& dataset,
                                 const std::vector<std::string>* restrict_to) {
  SimilarityResult result;
  std::vector<double> gold, predicted;
  for (const auto& item : dataset.items) {
    if (!word_allowed(space, item.w1, restrict_to) ||
        !word_allowed(space, item.w2, restrict_to)) {
      ++result.skipped;
      continue;
    }
    gold.push_back(item.score);
    predicted.push_back(*embstore::cosine(space, item.w1, item.w2));
  }
  if (gold.size() < 2) {
    throw std::runtime_error("eval_similarity: only " + std::to_string(gold.size()) +
                             " usable pairs (" + std::to_string(result.skipped) +
                             " skipped)");
  }
  result.used = gold.size();
  result.rho = spearman(gold, predicted);
  return result;
}

ToeflResult eval_toefl(const embstore::EmbeddingSpace& space, const ToeflSet& set,
                       const std::vector<std::string>* restrict_to,
                       bool full_vocab_search) {
  ToeflResult result;
  for (const auto& q : set.questions) {
    bool usable = word_allowed(space, q.cue, restrict_to);
    for (const auto& c : q.choices) usable = usable && word_allowed(space, c, restrict_to);
    if (!usable) {
      ++result.dropped;
      continue;
    }
    ++result.retained;
    if (full_vocab_search) {
      // literal protocol: the single nearest word overall must be the answer
      embstore::NeighborQuery query;
      query.k = 1;
      query.restrict_to = restrict_to;
      const auto near = embstore::neighbors(space, q.cue, query);
      if (!near.empty() && near.front().word == q.choices[static_cast<std::size_t>(q.answer)]) {
        ++result.correct;
      }
      continue;
    }
    double best = -2.0, second = -2.0;
    int best_idx = -1;
    for (int i = 0; i < 4; ++i) {
      const double cos = *embstore::cosine(space, q.cue, q.choices[static_cast<std::size_t>(i)]);
      if (cos > best) {
        second = best;
        best = cos;
        best_idx = i;
      } else if (cos > second) {
        second = cos;
      }
    }
    if (best == second) {
      ++result.ties;  // ambiguous winner scores as incorrect
    } else if (best_idx == q.answer) {
      ++result.correct;
    }
  }
  if (result.retained == 0) throw std::runtime_error("eval_toefl: no usable questions");
  result.accuracy = static_cast<double>(result.correct) / static_cast<double>(result.retained);
  return result;
}

AnalogyResult eval_analogy(const embstore::EmbeddingSpace& space, const AnalogySet& set,
                           const std::vector<std::string>* restrict_to) {
  AnalogyResult result;
  const auto& vocab = space.vocab();
  const auto& norm = space.normalized();

  // candidate ids, id-ordered so ties resolve by vocabulary id
  std::vector<int> candidates;
  if (restrict_to) {
    for (const auto& w : *restrict_to) {
      if (space.has_vector(w)) candidates.push_back(vocab.id(w));
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  } else {
    for (int i = 0; i < vocab.size(); ++i) {
      if (i != vocab.unk_id() && !space.is_zero_row(i)) candidates.push_back(i);
    }
  }

  for (const auto& q : set.questions) {
    const bool usable =
        word_allowed(space, q.a, restrict_to) && word_allowed(space, q.b, restrict_to) &&
        word_allowed(space, q.c, restrict_to) && word_allowed(space, q.d, restrict_to);
    if (!usable) {
      ++(q.syntactic ? result.syntactic_skipped : result.semantic_skipped);
      continue;
    }
    ++(q.syntactic ? result.syntactic_used : result.semantic_used);

    const auto ra = norm.row(static_cast<std::size_t>(vocab.id(q.a)));
    const auto rb = norm.row(static_cast<std::size_t>(vocab.id(q.b)));
    const auto rc = norm.row(static_cast<std::size_t>(vocab.id(q.c)));
    num::Vector v(space.dim());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rc[i] + rb[i] - ra[i];
    const double vnorm = std::sqrt(num::dot(v, v));
    if (vnorm > 0.0) {
      for (double& x : v) x /= vnorm;
    }

    const int exclude[3] = {vocab.id(q.a), vocab.id(q.b), vocab.id(q.c)};
    int best_id = -1;
    double best_cos = -2.0;
    for (int id : candidates) {
      if (id == exclude[0] || id == exclude[1] || id == exclude[2]) continue;
      const double cos = num::dot(v, norm.row(static_cast<std::size_t>(id)));
      if (cos > best_cos) {
        best_cos = cos;
        best_id = id;
      }
    }
    if (best_id >= 0 && vocab.word(best_id) == q.d) {
      ++(q.syntactic ? result.syntactic_correct : result.semantic_correct);
    }
  }
  if (result.retained() == 0) throw std::runtime_error("eval_analogy: no usable questions");
  if (result.syntactic_used) {
    result.syntactic_accuracy = static_cast<double>(result.syntactic_correct) /
                                static_cast<double>(result.syntactic_used);
  }
  if (result.semantic_used) {
    result.semantic_accuracy = static_cast<double>(result.semantic_correct) /
                               static_cast<double>(result.semantic_used);
  }
  return result;
}

KernelSvm train_kernel_classifier(const std::vector<num::Vector>& features,
                                  const std::vector<int>& labels, double gamma, double c,
                                  num::Rng& rng) {
  SvmConfig config;
  config.gamma = gamma;
  config.c = c;
  return KernelSvm::train(features, labels, config, rng);
}

SynAntResult eval_synant(const embstore::EmbeddingSpace& space, const SynAntSet& set,
                         num::Rng& rng, const SynAntOptions& options) {
  SynAntResult result;
  std::vector<num::Vector> features;
  std::vector<int> labels;
  const auto& vocab = space.vocab();
  const auto& norm = space.normalized();
  for (const auto& pair : set.pairs) {
    if (!space.has_vector(pair.w1) || !space.has_vector(pair.w2)) {
      ++result.skipped;
      continue;
    }
    const auto r1 = norm.row(static_cast<std::size_t>(vocab.id(pair.w1)));
    const auto r2 = norm.row(static_cast<std::size_t>(vocab.id(pair.w2)));
    num::Vector f(r1.begin(), r1.end());
    f.insert(f.end(), r2.begin(), r2.end());
    features.push_back(std::move(f));
    labels.push_back(pair.synonym ? 1 : -1);
  }
  result.used = features.size();
  if (result.used < options.folds) {
    throw std::runtime_error("eval_synant: " + std::to_string(result.used) +
                             " usable pairs < " + std::to_string(options.folds) + " folds");
  }

  double gamma;
  if (options.gamma) {
    gamma = *options.gamma;
  } else {
    // 1 / (dim * mean feature variance)
    const std::size_t d = features.front().size();
    const auto n = static_cast<double>(features.size());
    double var_sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double m = 0.0, m2 = 0.0;
      for (const auto& f : features) {
        m += f[j];
        m2 += f[j] * f[j];
      }
      m /= n;
      var_sum += m2 / n - m * m;
    }
    const double mean_var = var_sum / static_cast<double>(d);
    gamma = mean_var > 0.0 ? 1.0 / (static_cast<double>(d) * mean_var) : 1.0;
  }

  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  const std::size_t folds = options.folds;
  for (std::size_t fold = 0; fold < folds; ++fold) {
    std::vector<num::Vector> train_x;
    std::vector<int> train_y;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i % folds == fold) {
        test_idx.push_back(order[i]);
      } else {
        train_x.push_back(features[order[i]]);
        train_y.push_back(labels[order[i]]);
      }
    }
    num::Rng fold_rng = rng.spawn(fold + 1);
    const KernelSvm svm =
        train_kernel_classifier(train_x, train_y, gamma, options.c, fold_rng);
    std::size_t correct = 0;
    for (std::size_t idx : test_idx) {
      if (svm.predict(features[idx]) == labels[idx]) ++correct;
    }
    result.fold_accuracies.push_back(static_cast<double>(correct) /
                                     static_cast<double>(test_idx.size()));
  }
  result.mean_accuracy =
      std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) /
      static_cast<double>(folds);
  return result;
}

std::vector<CurveRow> learning_curve(const corpus::MonoCorpus& corpus,
                                     std::span<const double> fractions,
                                     const std::vector<SimilarityDataset>& datasets,
                                     const skipgram::Config& trainer_config) {
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) {
      throw std::invalid_argument("learning_curve: fractions must lie in (0, 1]");
    }
    if (i > 0 && fractions[i] <= fractions[i - 1]) {
      throw std::invalid_argument("learning_curve: fractions must be ascending");
    }
  }
  std::vector<CurveRow> rows;
  for (const double fraction : fractions) {
    const auto sample = corpus::subsample(corpus, fraction, trainer_config.seed);
    const auto model = skipgram::train(sample, trainer_config);
    const auto space = model.export_space();
    for (const auto& dataset : datasets) {
      const auto r = eval_similarity(space, dataset);
      rows.push_back({fraction, dataset.name, r.rho, r.used});
    }
  }
  return rows;
}

void write_curve_csv(std::span<const CurveRow> rows, std::ostream& out) {
  out << "fraction,dataset,rho,pairs_used\n";
  char buf[32];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%g,", row.fraction);
    out << buf << row.dataset << ',';
    std::snprintf(buf, sizeof(buf), "%.6f", row.rho);
    out << buf << ',' << row.pairs_used << '\n';
  }
}

void write_report_csv(std::span<const ReportRow> rows, std::ostream& out) {
  out << "model,dataset,metric,value,used,skipped\n";
  char buf[32];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", row.value);
    out << row.model << ',' << row.dataset << ',' << row.metric << ',' << buf << ','
        << row.used << ',' << row.skipped << '\n';
  }
}

void write_report_pretty(std::span<const ReportRow> rows, std::ostream& out) {
  std::size_t model_w = 5, dataset_w = 7;
  for (const auto& row : rows) {
    model_w = std::max(model_w, row.model.size());
    dataset_w = std::max(dataset_w, row.dataset.size());
  }
  out << std::left << std::setw(static_cast<int>(dataset_w) + 2) << "dataset"
      << std::setw(static_cast<int>(model_w) + 2) << "model"
      << std::setw(8) << "metric" << std::setw(10) << "value"
      << std::setw(8) << "used" << "skipped\n";
  char buf[32];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.4f", row.value);
    out << std::left << std::setw(static_cast<int>(dataset_w) + 2) << row.dataset
        << std::setw(static_cast<int>(model_w) + 2) << row.model
        << std::setw(8) << row.metric << std::setw(10) << buf
        << std::setw(8) << row.used << row.skipped << '\n';
  }
}

}  // namespace embkit::eval
