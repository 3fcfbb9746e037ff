#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "embkit/embstore.hpp"

// Command-line front end. Subcommands: train-skipgram, train-bicvm,
// train-nmt, eval, neighbors, analogy, curve, pivot, repl. Exit codes:
// 0 success, 1 runtime failure (one-line diagnostic), 2 usage error.

namespace embkit::cli {

/// Hyperparameters and paths shared by every subcommand. Loaded from JSON
/// (unknown keys rejected); command-line flags override file values.
struct RunConfig {
  std::size_t dim = 64;
  std::size_t hidden = 128;
  std::size_t epochs = 5;
  std::size_t batch = 16;
  std::size_t negatives = 5;
  std::size_t window = 5;
  std::size_t max_vocab = 50000;
  std::int64_t min_count = 1;
  std::optional<double> lr;          // unset: per-model default
  double margin = 1.0;
  double clip = 5.0;                 // <= 0 disables clipping
  double noise_exponent = 0.75;
  double subsample_threshold = 0.0;  // skipgram frequent-word subsampling
  std::size_t tau = 0;               // sampled-softmax candidate budget
  std::string variant = "plain";     // or "attention"
  std::string softmax = "full";      // or "sampled"
  std::uint64_t seed = 1;
  std::size_t workers = 1;           // >1 marks the run nondeterministic
  std::optional<std::string> corpus;
  std::optional<std::string> source;
  std::optional<std::string> target;
  std::optional<std::string> output;
};

RunConfig load_config(const std::string& path);
void validate(const RunConfig& config);

/// Resolved-config JSON written next to every file a run produces.
std::string resolved_json(const RunConfig& config, const std::string& subcommand);

/// Entry point; argv[0] is the program name.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

/// Interactive query loop over one or more loaded spaces:
///   n <word> [k]   nearest neighbors
///   a <a> <b> <c>  analogy answer
///   c <w1> <w2>    cosine
///   q              quit
void repl(const std::vector<embstore::EmbeddingSpace>& spaces, std::istream& in,
          std::ostream& out);

}  // namespace embkit::cli
