#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

// Dense double-precision linear algebra, the gated recurrent cell, SGD with
// global-norm clipping, and a finite-difference gradient checker. Everything
// here is deterministic; all randomness flows through Rng.

namespace embkit::num {

using Vector = std::vector<double>;

/// Row-major dense matrix of 64-bit floats.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

/// xoshiro256++ seeded through splitmix64. Identical seed gives an identical
/// stream on every platform; no library distributions are used anywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t u64();

  /// Uniform in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform in [0, n), unbiased via rejection. n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Independent generator derived from the original seed and a salt.
  /// Stable regardless of how much of this stream has been consumed.
  Rng spawn(std::uint64_t salt) const;

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t state_[4];
  std::uint64_t seed_;
};

/// Named parameter matrices with parallel gradient accumulators.
/// Iteration order is insertion order, so all traversals are deterministic.
class ParamSet {
 public:
  /// Adds a parameter (zero-initialised value and gradient), returns handle.
  std::size_t add(const std::string& name, std::size_t rows, std::size_t cols);

  std::size_t handle(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t count() const { return values_.size(); }
  const std::string& name(std::size_t h) const { return names_[h]; }

  Matrix& value(std::size_t h) { return values_[h]; }
  const Matrix& value(std::size_t h) const { return values_[h]; }
  Matrix& grad(std::size_t h) { return grads_[h]; }
  const Matrix& grad(std::size_t h) const { return grads_[h]; }

  Matrix& value(std::string_view name) { return values_[handle(name)]; }
  const Matrix& value(std::string_view name) const { return values_[handle(name)]; }
  Matrix& grad(std::string_view name) { return grads_[handle(name)]; }
  const Matrix& grad(std::string_view name) const { return grads_[handle(name)]; }

  void zero_grads();
  void scale_grads(double factor);
  double grad_sq_norm() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> lookup_;
  std::vector<Matrix> values_;
  std::vector<Matrix> grads_;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// log(1 + e^x) without overflow; log_sigmoid(x) = -softplus(-x).
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double log_sigmoid(double x) { return -softplus(-x); }

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double a, std::span<const double> x, std::span<double> y);  // y += a*x

void matvec_add(const Matrix& a, std::span<const double> x, std::span<double> y);    // y += A x
void matvec_t_add(const Matrix& a, std::span<const double> x, std::span<double> y);  // y += A^T x
void outer_add(Matrix& a, double scale, std::span<const double> x,
               std::span<const double> y);  // A += scale * x y^T

double log_sum_exp(std::span<const double> v);

/// Max-subtracted softmax; output sums to 1 within 1e-12. Errors on empty input.
Vector softmax(std::span<const double> logits);

/// Handles of one GRU cell inside a ParamSet. Biases are 1xN matrices.
struct GruParams {
  std::size_t wz, uz, bz;
  std::size_t wr, ur, br;
  std::size_t wh, uh, bh;
  std::size_t in = 0, out = 0;
};

GruParams make_gru(ParamSet& ps, const std::string& prefix, std::size_t in, std::size_t out);
GruParams find_gru(const ParamSet& ps, const std::string& prefix);

/// Forward intermediates needed by gru_backward.
struct GruCache {
  Vector x, h_prev, z, r, hbar, rh;
};

/// z = sigma(Wz x + Uz h + bz); r = sigma(Wr x + Ur h + br);
/// hbar = tanh(Wh x + Uh (r.h) + bh); h' = (1-z).h + z.hbar
Vector gru_step(const ParamSet& ps, const GruParams& g, std::span<const double> x,
                std::span<const double> h, GruCache* cache = nullptr);

/// Accumulates parameter gradients for one step; adds input/state gradients
/// into dx and dh_prev (both must be pre-sized).
void gru_backward(ParamSet& ps, const GruParams& g, const GruCache& cache,
                  std::span<const double> dh_new, std::span<double> dx,
                  std::span<double> dh_prev);

/// Scales gradients to clip_norm when the global norm exceeds it, applies
/// theta -= lr * grad, then zeroes gradients. Throws "gradient overflow" on
/// non-finite gradients.
void sgd_update(ParamSet& params, double learning_rate,
                std::optional<double> clip_norm = std::nullopt);

struct GradCheckOptions {
  double epsilon = 1e-5;
  std::size_t samples_per_matrix = 6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
};

/// loss_fn must be deterministic, return the loss, and accumulate analytic
/// gradients into the ParamSet it is handed. Central differences are compared
/// coordinate-wise at sampled smooth points; the relative error is
/// |a - n| / max(|a|, |n|, 1e-8). Gradients are left zeroed on return.
/// Central differences of a double-precision loss carry ~1e-10 absolute
/// noise, so coordinates whose true gradient is far below the parameter scale
/// report inflated relative errors; callers should check at generic points.
GradCheckReport grad_check(const std::function<double(ParamSet&)>& loss_fn,
                           ParamSet& params, const GradCheckOptions& opts, Rng& rng);

}  // namespace embkit::num
