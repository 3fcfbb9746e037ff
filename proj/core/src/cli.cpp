#include "embkit/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "embkit/bicvm.hpp"
#include "embkit/corpus.hpp"
#include "embkit/eval.hpp"
#include "embkit/nmt.hpp"
#include "embkit/pivot.hpp"
#include "embkit/skipgram.hpp"

namespace embkit::cli {

namespace {

using nlohmann::json;

constexpr double kSkipgramLr = 0.025;
constexpr double kBicvmLr = 0.01;
constexpr double kNmtLr = 0.1;

void assign_config(RunConfig& cfg, const std::string& key, const json& value) {
  if (key == "dim") cfg.dim = value.get<std::size_t>();
  else if (key == "hidden") cfg.hidden = value.get<std::size_t>();
  else if (key == "epochs") cfg.epochs = value.get<std::size_t>();
  else if (key == "batch") cfg.batch = value.get<std::size_t>();
  else if (key == "negatives") cfg.negatives = value.get<std::size_t>();
  else if (key == "window") cfg.window = value.get<std::size_t>();
  else if (key == "max_vocab") cfg.max_vocab = value.get<std::size_t>();
  else if (key == "min_count") cfg.min_count = value.get<std::int64_t>();
  else if (key == "lr") cfg.lr = value.get<double>();
  else if (key == "margin") cfg.margin = value.get<double>();
  else if (key == "clip") cfg.clip = value.get<double>();
  else if (key == "noise_exponent") cfg.noise_exponent = value.get<double>();
  else if (key == "subsample_threshold") cfg.subsample_threshold = value.get<double>();
  else if (key == "tau") cfg.tau = value.get<std::size_t>();
  else if (key == "variant") cfg.variant = value.get<std::string>();
  else if (key == "softmax") cfg.softmax = value.get<std::string>();
  else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
  else if (key == "workers") cfg.workers = value.get<std::size_t>();
  else if (key == "corpus") cfg.corpus = value.get<std::string>();
  else if (key == "source") cfg.source = value.get<std::string>();
  else if (key == "target") cfg.target = value.get<std::string>();
  else if (key == "output") cfg.output = value.get<std::string>();
  else throw std::runtime_error("config: unknown key '" + key + "'");
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json parsed;
  try {
    parsed = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  if (!parsed.is_object()) throw std::runtime_error(path + ": config must be an object");
  RunConfig cfg;
  for (const auto& [key, value] : parsed.items()) {
    try {
      assign_config(cfg, key, value);
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ": key '" + key + "': " + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

void validate(const RunConfig& cfg) {
  if (cfg.dim < 1) throw std::runtime_error("config: dim must be >= 1");
  if (cfg.hidden < 1) throw std::runtime_error("config: hidden must be >= 1");
  if (cfg.batch < 1) throw std::runtime_error("config: batch must be >= 1");
  if (cfg.negatives < 1) throw std::runtime_error("config: negatives must be >= 1");
  if (cfg.window < 1) throw std::runtime_error("config: window must be >= 1");
  if (cfg.max_vocab < 1) throw std::runtime_error("config: max_vocab must be >= 1");
  if (cfg.lr && *cfg.lr <= 0.0) throw std::runtime_error("config: lr must be positive");
  if (cfg.margin <= 0.0) throw std::runtime_error("config: margin must be positive");
  if (cfg.noise_exponent < 0.0) throw std::runtime_error("config: noise_exponent must be >= 0");
  if (cfg.subsample_threshold < 0.0) {
    throw std::runtime_error("config: subsample_threshold must be >= 0");
  }
  if (cfg.variant != "plain" && cfg.variant != "attention") {
    throw std::runtime_error("config: variant must be 'plain' or 'attention'");
  }
  if (cfg.softmax != "full" && cfg.softmax != "sampled") {
    throw std::runtime_error("config: softmax must be 'full' or 'sampled'");
  }
  if (cfg.softmax == "sampled" && cfg.tau < 1) {
    throw std::runtime_error("config: sampled softmax requires tau >= 1");
  }
  if (cfg.workers < 1) throw std::runtime_error("config: workers must be >= 1");
}

std::string resolved_json(const RunConfig& cfg, const std::string& subcommand) {
  json j;
  j["subcommand"] = subcommand;
  j["dim"] = cfg.dim;
  j["hidden"] = cfg.hidden;
  j["epochs"] = cfg.epochs;
  j["batch"] = cfg.batch;
  j["negatives"] = cfg.negatives;
  j["window"] = cfg.window;
  j["max_vocab"] = cfg.max_vocab;
  j["min_count"] = cfg.min_count;
  if (cfg.lr) j["lr"] = *cfg.lr;
  j["margin"] = cfg.margin;
  j["clip"] = cfg.clip;
  j["noise_exponent"] = cfg.noise_exponent;
  j["subsample_threshold"] = cfg.subsample_threshold;
  j["tau"] = cfg.tau;
  j["variant"] = cfg.variant;
  j["softmax"] = cfg.softmax;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["deterministic"] = cfg.workers == 1;
  if (cfg.corpus) j["corpus"] = *cfg.corpus;
  if (cfg.source) j["source"] = *cfg.source;
  if (cfg.target) j["target"] = *cfg.target;
  if (cfg.output) j["output"] = *cfg.output;
  return j.dump(2) + "\n";
}

namespace {

struct Overrides {
  std::optional<std::size_t> dim, hidden, epochs, batch, negatives, window, max_vocab,
      tau, workers;
  std::optional<std::int64_t> min_count;
  std::optional<double> lr, margin, clip, noise_exponent, subsample_threshold;
  std::optional<std::string> variant, softmax;
  std::optional<std::uint64_t> seed;

  void apply(RunConfig& cfg) const {
    if (dim) cfg.dim = *dim;
    if (hidden) cfg.hidden = *hidden;
    if (epochs) cfg.epochs = *epochs;
    if (batch) cfg.batch = *batch;
    if (negatives) cfg.negatives = *negatives;
    if (window) cfg.window = *window;
    if (max_vocab) cfg.max_vocab = *max_vocab;
    if (tau) cfg.tau = *tau;
    if (workers) cfg.workers = *workers;
    if (min_count) cfg.min_count = *min_count;
    if (lr) cfg.lr = *lr;
    if (margin) cfg.margin = *margin;
    if (clip) cfg.clip = *clip;
    if (noise_exponent) cfg.noise_exponent = *noise_exponent;
    if (subsample_threshold) cfg.subsample_threshold = *subsample_threshold;
    if (variant) cfg.variant = *variant;
    if (softmax) cfg.softmax = *softmax;
    if (seed) cfg.seed = *seed;
  }
};

// Shared per-subcommand state assembled from --config plus flag overrides.
struct CommonArgs {
  std::string config_path;
  Overrides overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file");
    app->add_option("--dim", overrides.dim, "embedding dimension");
    app->add_option("--hidden", overrides.hidden, "recurrent state size");
    app->add_option("--epochs", overrides.epochs, "training epochs");
    app->add_option("--batch", overrides.batch, "batch size (nmt)");
    app->add_option("--negatives", overrides.negatives, "negative samples (skipgram)");
    app->add_option("--window", overrides.window, "max window size (skipgram)");
    app->add_option("--max-vocab", overrides.max_vocab, "vocabulary cap");
    app->add_option("--min-count", overrides.min_count, "min token count");
    app->add_option("--lr", overrides.lr, "learning rate");
    app->add_option("--margin", overrides.margin, "hinge margin (bicvm)");
    app->add_option("--clip", overrides.clip, "gradient clip norm; <=0 disables");
    app->add_option("--noise-exponent", overrides.noise_exponent,
                    "noise distribution exponent (skipgram)");
    app->add_option("--subsample-threshold", overrides.subsample_threshold,
                    "frequent-word subsampling threshold (skipgram)");
    app->add_option("--tau", overrides.tau, "sampled-softmax candidate budget");
    app->add_option("--variant", overrides.variant, "nmt variant: plain|attention");
    app->add_option("--softmax", overrides.softmax, "nmt softmax: full|sampled");
    app->add_option("--seed", overrides.seed, "random seed");
    app->add_option("--workers", overrides.workers,
                    "skipgram workers; >1 is nondeterministic");
  }

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    overrides.apply(cfg);
    validate(cfg);
    return cfg;
  }
};

void write_sidecar(const std::string& artifact_path, const RunConfig& cfg,
                   const std::string& subcommand) {
  std::ofstream out(artifact_path + ".config.json");
  if (!out) throw std::runtime_error("cannot write " + artifact_path + ".config.json");
  out << resolved_json(cfg, subcommand);
}

std::optional<double> clip_of(const RunConfig& cfg) {
  if (cfg.clip <= 0.0) return std::nullopt;
  return cfg.clip;
}

std::vector<std::string> load_word_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::shared_ptr<const corpus::Vocabulary> vocab_from_file(const std::string& path,
                                                          const RunConfig& cfg) {
  const auto sentences = corpus::read_token_lines(path);
  return std::make_shared<corpus::Vocabulary>(
      corpus::build_vocab(sentences, cfg.max_vocab, cfg.min_count));
}

int cmd_train_skipgram(const CommonArgs& common, const std::string& corpus_flag,
                       const std::string& out_flag) {
  RunConfig cfg = common.resolve();
  if (!corpus_flag.empty()) cfg.corpus = corpus_flag;
  if (!out_flag.empty()) cfg.output = out_flag;
  if (!cfg.corpus) throw std::runtime_error("train-skipgram: missing --corpus");
  if (!cfg.output) throw std::runtime_error("train-skipgram: missing --out");

  const auto vocab = vocab_from_file(*cfg.corpus, cfg);
  const auto mono = corpus::load_mono(*cfg.corpus, vocab);
  skipgram::Config tc;
  tc.dim = cfg.dim;
  tc.epochs = cfg.epochs;
  tc.max_window = cfg.window;
  tc.negatives = cfg.negatives;
  tc.lr = cfg.lr.value_or(kSkipgramLr);
  tc.noise_exponent = cfg.noise_exponent;
  tc.subsample_threshold = cfg.subsample_threshold;
  tc.workers = cfg.workers;
  tc.seed = cfg.seed;
  skipgram::TrainStats stats;
  const auto model = skipgram::train(mono, tc, &stats);
  for (std::size_t e = 0; e < stats.epoch_mean_loss.size(); ++e) {
    std::fprintf(stderr, "epoch %zu mean_loss %.6f\n", e + 1, stats.epoch_mean_loss[e]);
  }
  embstore::save_text(model.export_space(), *cfg.output);
  cfg.lr = tc.lr;
  write_sidecar(*cfg.output, cfg, "train-skipgram");
  return 0;
}

int cmd_train_bicvm(const CommonArgs& common, const std::string& source_flag,
                    const std::string& target_flag, const std::string& out_source,
                    const std::string& out_target) {
  RunConfig cfg = common.resolve();
  if (!source_flag.empty()) cfg.source = source_flag;
  if (!target_flag.empty()) cfg.target = target_flag;
  if (!cfg.source || !cfg.target) {
    throw std::runtime_error("train-bicvm: missing --source/--target");
  }
  if (out_source.empty() && out_target.empty()) {
    throw std::runtime_error("train-bicvm: need --out-source and/or --out-target");
  }
  const auto src_vocab = vocab_from_file(*cfg.source, cfg);
  const auto tgt_vocab = vocab_from_file(*cfg.target, cfg);
  const auto parallel = corpus::load_parallel(*cfg.source, *cfg.target, src_vocab, tgt_vocab);
  bicvm::Config tc;
  tc.dim = cfg.dim;
  tc.epochs = cfg.epochs;
  tc.lr = cfg.lr.value_or(kBicvmLr);
  tc.margin = cfg.margin;
  tc.seed = cfg.seed;
  bicvm::TrainStats stats;
  const auto model = bicvm::train(parallel, tc, &stats);
  for (std::size_t e = 0; e < stats.epoch_mean_loss.size(); ++e) {
    std::fprintf(stderr, "epoch %zu mean_loss %.6f\n", e + 1, stats.epoch_mean_loss[e]);
  }
  cfg.lr = tc.lr;
  if (!out_source.empty()) {
    embstore::save_text(model.export_source(), out_source);
    write_sidecar(out_source, cfg, "train-bicvm");
  }
  if (!out_target.empty()) {
    embstore::save_text(model.export_target(), out_target);
    write_sidecar(out_target, cfg, "train-bicvm");
  }
  return 0;
}

int cmd_train_nmt(const CommonArgs& common, const std::string& source_flag,
                  const std::string& target_flag, const std::string& out_flag,
                  const std::string& export_source, const std::string& export_target) {
  RunConfig cfg = common.resolve();
  if (!source_flag.empty()) cfg.source = source_flag;
  if (!target_flag.empty()) cfg.target = target_flag;
  if (!out_flag.empty()) cfg.output = out_flag;
  if (!cfg.source || !cfg.target) {
    throw std::runtime_error("train-nmt: missing --source/--target");
  }
  if (!cfg.output && export_source.empty() && export_target.empty()) {
    throw std::runtime_error("train-nmt: need --out and/or --export-source/--export-target");
  }
  const auto src_vocab = vocab_from_file(*cfg.source, cfg);
  const auto tgt_vocab = vocab_from_file(*cfg.target, cfg);
  const auto parallel = corpus::load_parallel(*cfg.source, *cfg.target, src_vocab, tgt_vocab);
  nmt::Config tc;
  tc.variant = cfg.variant == "attention" ? nmt::Variant::attention : nmt::Variant::plain;
  tc.dim = cfg.dim;
  tc.hidden = cfg.hidden;
  tc.epochs = cfg.epochs;
  tc.batch = cfg.batch;
  tc.lr = cfg.lr.value_or(kNmtLr);
  tc.clip_norm = clip_of(cfg);
  tc.plan.mode = cfg.softmax == "sampled" ? nmt::SoftmaxMode::sampled : nmt::SoftmaxMode::full;
  tc.plan.budget = cfg.tau;
  tc.seed = cfg.seed;
  nmt::TrainStats stats;
  const auto model = nmt::train(parallel, tc, &stats);
  for (std::size_t e = 0; e < stats.epoch_mean_loss.size(); ++e) {
    std::fprintf(stderr, "epoch %zu mean_loss %.6f\n", e + 1, stats.epoch_mean_loss[e]);
  }
  cfg.lr = tc.lr;
  if (cfg.output) {
    nmt::save_model(model, *cfg.output);
    write_sidecar(*cfg.output, cfg, "train-nmt");
  }
  if (!export_source.empty()) {
    embstore::save_text(nmt::export_embeddings(model, nmt::Side::source), export_source);
    write_sidecar(export_source, cfg, "train-nmt");
  }
  if (!export_target.empty()) {
    embstore::save_text(nmt::export_embeddings(model, nmt::Side::target), export_target);
    write_sidecar(export_target, cfg, "train-nmt");
  }
  return 0;
}

enum class DatasetKind { similarity, toefl, analogy, synant };

DatasetKind detect_dataset_kind(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    if (line.find('|') != std::string::npos) return DatasetKind::toefl;
    if (line[line.find_first_not_of(" \t")] == ':') return DatasetKind::analogy;
    // delimited rows: word1,word2,<score|label>
    char delim = '\t';
    if (line.find('\t') == std::string::npos) {
      delim = line.find(',') != std::string::npos ? ',' : ' ';
    }
    std::vector<std::string> fields;
    std::string f;
    std::istringstream ls(line);
    while (std::getline(ls, f, delim)) fields.push_back(f);
    if (delim == ' ' && fields.size() == 4) return DatasetKind::analogy;
    if (fields.size() >= 3) {
      const std::string third = fields[2];
      if (third == "synonym" || third == "antonym" || third == "syn" || third == "ant") {
        return DatasetKind::synant;
      }
      return DatasetKind::similarity;
    }
    throw std::runtime_error(path + ": cannot detect dataset kind");
  }
  throw std::runtime_error(path + ": empty dataset");
}

struct EvalArgs {
  std::vector<std::string> spaces;
  std::vector<std::string> datasets;  // kind sniffed
  std::vector<std::string> similarity, toefl, analogy, synant;
  bool intersect = false;
  bool toefl_full_vocab = false;
  std::size_t folds = 10;
  std::string out;
  bool pretty = false;
};

int cmd_eval(const CommonArgs& common, const EvalArgs& args) {
  const RunConfig cfg = common.resolve();
  if (args.spaces.empty()) throw std::runtime_error("eval: missing --space");
  std::vector<embstore::EmbeddingSpace> spaces;
  for (const auto& p : args.spaces) spaces.push_back(embstore::load_text(p));

  std::vector<std::string> shared;
  const std::vector<std::string>* restrict_to = nullptr;
  if (args.intersect) {
    std::vector<const embstore::EmbeddingSpace*> ptrs;
    for (const auto& s : spaces) ptrs.push_back(&s);
    shared = embstore::intersect_vocab(ptrs);
    restrict_to = &shared;
    std::fprintf(stderr, "eval: shared vocabulary of %zu spaces: %zu words\n",
                 spaces.size(), shared.size());
  }

  struct Task {
    DatasetKind kind;
    std::string path;
  };
  std::vector<Task> tasks;
  for (const auto& p : args.datasets) tasks.push_back({detect_dataset_kind(p), p});
  for (const auto& p : args.similarity) tasks.push_back({DatasetKind::similarity, p});
  for (const auto& p : args.toefl) tasks.push_back({DatasetKind::toefl, p});
  for (const auto& p : args.analogy) tasks.push_back({DatasetKind::analogy, p});
  for (const auto& p : args.synant) tasks.push_back({DatasetKind::synant, p});
  if (tasks.empty()) throw std::runtime_error("eval: no datasets given");

  std::vector<eval::ReportRow> rows;
  for (const auto& task : tasks) {
    switch (task.kind) {
      case DatasetKind::similarity: {
        const auto ds = eval::load_similarity(task.path);
        for (const auto& space : spaces) {
          const auto r = eval::eval_similarity(space, ds, restrict_to);
          rows.push_back({space.name(), ds.name, "rho", r.rho, r.used, r.skipped});
        }
        break;
      }
      case DatasetKind::toefl: {
        const auto ds = eval::load_toefl(task.path);
        for (const auto& space : spaces) {
          const auto r = eval::eval_toefl(space, ds, restrict_to, args.toefl_full_vocab);
          rows.push_back({space.name(), ds.name, "pct", r.accuracy, r.retained, r.dropped});
        }
        break;
      }
      case DatasetKind::analogy: {
        const auto ds = eval::load_analogy(task.path);
        for (const auto& space : spaces) {
          const auto r = eval::eval_analogy(space, ds, restrict_to);
          std::fprintf(stderr, "eval: %s: retained %zu analogies (%zu syntactic, %zu semantic)\n",
                       space.name().c_str(), r.retained(), r.syntactic_used, r.semantic_used);
          rows.push_back({space.name(), ds.name + "-syntactic", "pct", r.syntactic_accuracy,
                          r.syntactic_used, r.syntactic_skipped});
          rows.push_back({space.name(), ds.name + "-semantic", "pct", r.semantic_accuracy,
                          r.semantic_used, r.semantic_skipped});
        }
        break;
      }
      case DatasetKind::synant: {
        const auto ds = eval::load_synant(task.path);
        for (const auto& space : spaces) {
          num::Rng rng(cfg.seed);
          eval::SynAntOptions options;
          options.folds = args.folds;
          const auto r = eval::eval_synant(space, ds, rng, options);
          rows.push_back({space.name(), ds.name, "pct", r.mean_accuracy, r.used, r.skipped});
        }
        break;
      }
    }
  }

  std::ostringstream text;
  if (args.pretty) {
    eval::write_report_pretty(rows, text);
  } else {
    eval::write_report_csv(rows, text);
  }
  if (args.out.empty()) {
    std::cout << text.str();
  } else {
    std::ofstream out(args.out);
    if (!out) throw std::runtime_error("cannot write " + args.out);
    out << text.str();
    write_sidecar(args.out, cfg, "eval");
  }
  return 0;
}

int cmd_neighbors(const std::string& space_path, const std::string& word, std::size_t k,
                  const std::string& restrict_path, const std::string& exclude_csv,
                  bool exclude_plurals) {
  const auto space = embstore::load_text(space_path);
  embstore::NeighborQuery query;
  query.k = k;
  std::vector<std::string> restrict_words, exclude_words;
  if (!restrict_path.empty()) {
    restrict_words = load_word_list(restrict_path);
    query.restrict_to = &restrict_words;
  }
  if (!exclude_csv.empty()) {
    std::istringstream in(exclude_csv);
    std::string w;
    while (std::getline(in, w, ',')) exclude_words.push_back(w);
    query.exclude = &exclude_words;
  }
  query.exclude_plurals = exclude_plurals;
  std::cout << "word,cosine\n";
  char buf[32];
  for (const auto& n : embstore::neighbors(space, word, query)) {
    std::snprintf(buf, sizeof(buf), "%.6f", n.cosine);
    std::cout << n.word << ',' << buf << '\n';
  }
  return 0;
}

int cmd_analogy(const std::string& space_path, const std::string& a, const std::string& b,
                const std::string& c, std::size_t k) {
  const auto space = embstore::load_text(space_path);
  const auto& vocab = space.vocab();
  for (const auto& w : {a, b, c}) {
    if (!space.has_vector(w)) throw std::runtime_error("out of vocabulary: " + w);
  }
  const auto& norm = space.normalized();
  num::Vector v(space.dim());
  const auto ra = norm.row(static_cast<std::size_t>(vocab.id(a)));
  const auto rb = norm.row(static_cast<std::size_t>(vocab.id(b)));
  const auto rc = norm.row(static_cast<std::size_t>(vocab.id(c)));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rc[i] + rb[i] - ra[i];

  std::vector<std::pair<double, int>> scored;
  for (int id = 0; id < vocab.size(); ++id) {
    if (id == vocab.unk_id() || space.is_zero_row(id)) continue;
    if (id == vocab.id(a) || id == vocab.id(b) || id == vocab.id(c)) continue;
    const double norm_v = std::sqrt(num::dot(v, v));
    const double cos =
        norm_v > 0.0 ? num::dot(v, norm.row(static_cast<std::size_t>(id))) / norm_v : 0.0;
    scored.emplace_back(cos, id);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  std::cout << "word,cosine\n";
  char buf[32];
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f", scored[i].first);
    std::cout << vocab.word(scored[i].second) << ',' << buf << '\n';
  }
  return 0;
}

int cmd_curve(const CommonArgs& common, const std::string& corpus_flag,
              const std::string& fractions_csv, const std::vector<std::string>& dataset_paths,
              const std::string& out) {
  RunConfig cfg = common.resolve();
  if (!corpus_flag.empty()) cfg.corpus = corpus_flag;
  if (!cfg.corpus) throw std::runtime_error("curve: missing --corpus");
  if (dataset_paths.empty()) throw std::runtime_error("curve: missing --dataset");
  std::vector<double> fractions;
  std::istringstream fs(fractions_csv);
  std::string f;
  while (std::getline(fs, f, ',')) fractions.push_back(std::stod(f));
  if (fractions.empty()) throw std::runtime_error("curve: missing --fractions");

  const auto vocab = vocab_from_file(*cfg.corpus, cfg);
  const auto mono = corpus::load_mono(*cfg.corpus, vocab);
  std::vector<eval::SimilarityDataset> datasets;
  for (const auto& p : dataset_paths) datasets.push_back(eval::load_similarity(p));

  skipgram::Config tc;
  tc.dim = cfg.dim;
  tc.epochs = cfg.epochs;
  tc.max_window = cfg.window;
  tc.negatives = cfg.negatives;
  tc.lr = cfg.lr.value_or(kSkipgramLr);
  tc.noise_exponent = cfg.noise_exponent;
  tc.subsample_threshold = cfg.subsample_threshold;
  tc.workers = cfg.workers;
  tc.seed = cfg.seed;
  const auto rows = eval::learning_curve(mono, fractions, datasets, tc);
  cfg.lr = tc.lr;
  if (out.empty()) {
    eval::write_curve_csv(rows, std::cout);
  } else {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    eval::write_curve_csv(rows, os);
    write_sidecar(out, cfg, "curve");
  }
  return 0;
}

int cmd_pivot(const CommonArgs& common, const std::string& source_flag,
              const std::string& target_flag, const std::string& space_path,
              const std::string& pairs_path, double threshold, const std::string& out) {
  RunConfig cfg = common.resolve();
  if (!source_flag.empty()) cfg.source = source_flag;
  if (!target_flag.empty()) cfg.target = target_flag;
  if (!cfg.source || !cfg.target) throw std::runtime_error("pivot: missing --source/--target");
  if (space_path.empty()) throw std::runtime_error("pivot: missing --space");
  if (pairs_path.empty()) throw std::runtime_error("pivot: missing --pairs");

  const auto src_vocab = vocab_from_file(*cfg.source, cfg);
  const auto tgt_vocab = vocab_from_file(*cfg.target, cfg);
  const auto parallel = corpus::load_parallel(*cfg.source, *cfg.target, src_vocab, tgt_vocab);
  const auto table = pivot::estimate_translations(parallel, threshold);
  const auto space = embstore::load_text(space_path);

  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& line : corpus::read_token_lines(pairs_path)) {
    if (line.empty()) continue;
    if (line.size() != 2) throw std::runtime_error("pivot: pair lines need two words");
    pairs.emplace_back(line[0], line[1]);
  }
  const auto report = pivot::pivot_report(table, space, pairs);
  if (out.empty()) {
    pivot::write_csv(report, std::cout);
  } else {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    pivot::write_csv(report, os);
    write_sidecar(out, cfg, "pivot");
  }
  return 0;
}

}  // namespace

void repl(const std::vector<embstore::EmbeddingSpace>& spaces, std::istream& in,
          std::ostream& out) {
  if (spaces.empty()) throw std::runtime_error("repl: no spaces loaded");
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cmd;
    if (!(ls >> cmd)) continue;
    try {
      if (cmd == "q" || cmd == "quit") break;
      if (cmd == "c") {
        std::string w1, w2;
        if (!(ls >> w1 >> w2)) {
          out << "usage: c <word1> <word2>\n";
          continue;
        }
        for (const auto& space : spaces) {
          const auto cos = embstore::cosine(space, w1, w2);
          out << space.name() << ": ";
          if (cos) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", *cos);
            out << buf << '\n';
          } else {
            out << "out of vocabulary\n";
          }
        }
      } else if (cmd == "n") {
        std::string w;
        std::size_t k = 10;
        if (!(ls >> w)) {
          out << "usage: n <word> [k]\n";
          continue;
        }
        ls >> k;
        for (const auto& space : spaces) {
          if (!space.has_vector(w)) {
            out << space.name() << ": out of vocabulary\n";
            continue;
          }
          for (const auto& n : embstore::neighbors(space, w, k)) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", n.cosine);
            out << space.name() << ": " << n.word << ' ' << buf << '\n';
          }
        }
      } else if (cmd == "a") {
        std::string a, b, c;
        if (!(ls >> a >> b >> c)) {
          out << "usage: a <a> <b> <c>\n";
          continue;
        }
        for (const auto& space : spaces) {
          if (!space.has_vector(a) || !space.has_vector(b) || !space.has_vector(c)) {
            out << space.name() << ": out of vocabulary\n";
            continue;
          }
          const auto& vocab = space.vocab();
          const auto& norm = space.normalized();
          num::Vector v(space.dim());
          const auto ra = norm.row(static_cast<std::size_t>(vocab.id(a)));
          const auto rb = norm.row(static_cast<std::size_t>(vocab.id(b)));
          const auto rc = norm.row(static_cast<std::size_t>(vocab.id(c)));
          for (std::size_t i = 0; i < v.size(); ++i) v[i] = rc[i] + rb[i] - ra[i];
          int best = -1;
          double best_cos = -2.0;
          const double vn = std::sqrt(num::dot(v, v));
          for (int id = 0; id < vocab.size(); ++id) {
            if (id == vocab.unk_id() || space.is_zero_row(id)) continue;
            if (id == vocab.id(a) || id == vocab.id(b) || id == vocab.id(c)) continue;
            const double cos =
                vn > 0.0 ? num::dot(v, norm.row(static_cast<std::size_t>(id))) / vn : 0.0;
            if (cos > best_cos) {
              best_cos = cos;
              best = id;
            }
          }
          if (best < 0) {
            out << space.name() << ": no candidates\n";
          } else {
            out << space.name() << ": " << vocab.word(best) << '\n';
          }
        }
      } else {
        out << "commands: n <word> [k] | a <a> <b> <c> | c <w1> <w2> | q\n";
      }
    } catch (const std::exception& e) {
      out << "error: " << e.what() << '\n';
    }
  }
}

int run(int argc, const char* const* argv) {
  CLI::App app{"trains and evaluates monolingual, bilingual and translation embeddings"};
  app.require_subcommand(1);

  // train-skipgram
  auto* sg = app.add_subcommand("train-skipgram", "train a skipgram model");
  CommonArgs sg_common;
  sg_common.attach(sg);
  std::string sg_corpus, sg_out;
  sg->add_option("--corpus", sg_corpus, "training text, one sentence per line");
  sg->add_option("--out", sg_out, "output embedding file");

  // train-bicvm
  auto* bc = app.add_subcommand("train-bicvm", "train the additive bilingual model");
  CommonArgs bc_common;
  bc_common.attach(bc);
  std::string bc_source, bc_target, bc_out_source, bc_out_target;
  bc->add_option("--source", bc_source, "source-side text");
  bc->add_option("--target", bc_target, "target-side text");
  bc->add_option("--out-source", bc_out_source, "source embedding output");
  bc->add_option("--out-target", bc_out_target, "target embedding output");

  // train-nmt
  auto* tn = app.add_subcommand("train-nmt", "train an encoder-decoder translation model");
  CommonArgs tn_common;
  tn_common.attach(tn);
  std::string tn_source, tn_target, tn_out, tn_export_source, tn_export_target;
  tn->add_option("--source", tn_source, "source-side text");
  tn->add_option("--target", tn_target, "target-side text");
  tn->add_option("--out", tn_out, "model checkpoint output");
  tn->add_option("--export-source", tn_export_source, "write source embeddings here");
  tn->add_option("--export-target", tn_export_target, "write target embeddings here");

  // eval
  auto* ev = app.add_subcommand("eval", "score embedding spaces against gold datasets");
  CommonArgs ev_common;
  ev_common.attach(ev);
  EvalArgs ev_args;
  ev->add_option("--space,--spaces", ev_args.spaces, "embedding file(s)")
      ->delimiter(',');
  ev->add_option("--dataset", ev_args.datasets, "dataset file(s), kind detected")
      ->delimiter(',');
  ev->add_option("--similarity", ev_args.similarity, "similarity dataset file(s)");
  ev->add_option("--toefl", ev_args.toefl, "four-choice synonym dataset file(s)");
  ev->add_option("--analogy", ev_args.analogy, "analogy dataset file(s)");
  ev->add_option("--synant", ev_args.synant, "synonym/antonym dataset file(s)");
  ev->add_flag("--intersect", ev_args.intersect,
               "restrict scoring to the shared vocabulary of all spaces");
  ev->add_flag("--toefl-full-vocab", ev_args.toefl_full_vocab,
               "score the literal whole-vocabulary nearest-neighbor protocol");
  ev->add_option("--folds", ev_args.folds, "cross-validation folds");
  ev->add_option("--out", ev_args.out, "write the report here instead of stdout");
  ev->add_flag("--pretty", ev_args.pretty, "human-readable table instead of CSV");

  // neighbors
  auto* nb = app.add_subcommand("neighbors", "nearest neighbors of a word");
  std::string nb_space, nb_word, nb_restrict, nb_exclude;
  std::size_t nb_k = 10;
  bool nb_exclude_plurals = false;
  nb->add_option("--space", nb_space, "embedding file")->required();
  nb->add_option("--word", nb_word, "query word")->required();
  nb->add_option("-k,--k", nb_k, "neighbor count");
  nb->add_option("--restrict", nb_restrict, "file with allowed words");
  nb->add_option("--exclude", nb_exclude, "comma-separated words to drop");
  nb->add_flag("--exclude-plurals", nb_exclude_plurals, "drop query+s / query+es");

  // analogy
  auto* an = app.add_subcommand("analogy", "a is to b as c is to ?");
  std::string an_space;
  std::vector<std::string> an_words;
  std::size_t an_k = 1;
  an->add_option("--space", an_space, "embedding file")->required();
  an->add_option("words", an_words, "three words: a b c")->expected(3);
  an->add_option("-k,--k", an_k, "answers to print");

  // curve
  auto* cv = app.add_subcommand("curve", "similarity scores vs training-data fraction");
  CommonArgs cv_common;
  cv_common.attach(cv);
  std::string cv_corpus, cv_fractions, cv_out;
  std::vector<std::string> cv_datasets;
  cv->add_option("--corpus", cv_corpus, "training text");
  cv->add_option("--fractions", cv_fractions, "comma-separated ascending fractions");
  cv->add_option("--dataset", cv_datasets, "similarity dataset file(s)");
  cv->add_option("--out", cv_out, "CSV output path");

  // pivot
  auto* pv = app.add_subcommand("pivot", "shared-translation diagnostic report");
  CommonArgs pv_common;
  pv_common.attach(pv);
  std::string pv_source, pv_target, pv_space, pv_pairs, pv_out;
  double pv_threshold = 0.1;
  pv->add_option("--source", pv_source, "source-side text");
  pv->add_option("--target", pv_target, "target-side text");
  pv->add_option("--space", pv_space, "embedding file for the source language");
  pv->add_option("--pairs", pv_pairs, "file of word pairs, two words per line");
  pv->add_option("--threshold", pv_threshold, "Dice threshold");
  pv->add_option("--out", pv_out, "CSV output path");

  // repl
  auto* rp = app.add_subcommand("repl", "interactive query loop");
  std::vector<std::string> rp_spaces;
  rp->add_option("--space,--spaces", rp_spaces, "embedding file(s)")
      ->required()
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sg->parsed()) return cmd_train_skipgram(sg_common, sg_corpus, sg_out);
    if (bc->parsed()) {
      return cmd_train_bicvm(bc_common, bc_source, bc_target, bc_out_source, bc_out_target);
    }
    if (tn->parsed()) {
      return cmd_train_nmt(tn_common, tn_source, tn_target, tn_out, tn_export_source,
                           tn_export_target);
    }
    if (ev->parsed()) return cmd_eval(ev_common, ev_args);
    if (nb->parsed()) {
      return cmd_neighbors(nb_space, nb_word, nb_k, nb_restrict, nb_exclude,
                           nb_exclude_plurals);
    }
    if (an->parsed()) return cmd_analogy(an_space, an_words[0], an_words[1], an_words[2], an_k);
    if (cv->parsed()) return cmd_curve(cv_common, cv_corpus, cv_fractions, cv_datasets, cv_out);
    if (pv->parsed()) {
      return cmd_pivot(pv_common, pv_source, pv_target, pv_space, pv_pairs, pv_threshold,
                       pv_out);
    }
    if (rp->parsed()) {
      std::vector<embstore::EmbeddingSpace> spaces;
      for (const auto& p : rp_spaces) spaces.push_back(embstore::load_text(p));
      repl(spaces, std::cin, std::cout);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 2;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace embkit::cli
