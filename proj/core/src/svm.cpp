#include "embkit/svm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace embkit::eval {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

KernelSvm KernelSvm::train(const std::vector<num::Vector>& points,
                           const std::vector<int>& labels, const SvmConfig& config,
                           num::Rng& rng) {
  const std::size_t n = points.size();
  if (n != labels.size()) throw std::invalid_argument("svm: size mismatch");
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == 1) pos = true;
    else if (y == -1) neg = true;
    else throw std::invalid_argument("svm: labels must be +1/-1");
  }
  if (!pos || !neg) throw std::invalid_argument("svm: single-class input");

  // precomputed kernel matrix; training sets here are small
  num::Matrix kernel(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double k = std::exp(-config.gamma * sq_dist(points[i], points[j]));
      kernel(i, j) = k;
      kernel(j, i) = k;
    }
  }

  std::vector<double> alpha(n, 0.0);
  std::vector<double> errors(n);  // f(x_i) - y_i at alpha = 0: just -y_i
  double b = 0.0;
  for (std::size_t i = 0; i < n; ++i) errors[i] = -static_cast<double>(labels[i]);

  auto take_step = [&](std::size_t i, std::size_t j) -> bool {
    if (i == j) return false;
    const double yi = labels[i], yj = labels[j];
    const double ei = errors[i], ej = errors[j];
    const double ai_old = alpha[i], aj_old = alpha[j];
    double lo, hi;
    if (yi != yj) {
      lo = std::max(0.0, aj_old - ai_old);
      hi = std::min(config.c, config.c + aj_old - ai_old);
    } else {
      lo = std::max(0.0, ai_old + aj_old - config.c);
      hi = std::min(config.c, ai_old + aj_old);
    }
    if (lo >= hi) return false;
    const double eta = 2.0 * kernel(i, j) - kernel(i, i) - kernel(j, j);
    if (eta >= 0.0) return false;
    double aj = aj_old - yj * (ei - ej) / eta;
    aj = std::clamp(aj, lo, hi);
    if (std::abs(aj - aj_old) < 1e-8 * (aj + aj_old + 1e-8)) return false;
    const double ai = ai_old + yi * yj * (aj_old - aj);
    alpha[i] = ai;
    alpha[j] = aj;

    const double b1 = b - ei - yi * (ai - ai_old) * kernel(i, i) -
                      yj * (aj - aj_old) * kernel(i, j);
    const double b2 = b - ej - yi * (ai - ai_old) * kernel(i, j) -
                      yj * (aj - aj_old) * kernel(j, j);
    double b_new;
    if (ai > 0.0 && ai < config.c) {
      b_new = b1;
    } else if (aj > 0.0 && aj < config.c) {
      b_new = b2;
    } else {
      b_new = 0.5 * (b1 + b2);
    }
    const double delta_b = b_new - b;
    b = b_new;
    for (std::size_t k = 0; k < n; ++k) {
      errors[k] += yi * (ai - ai_old) * kernel(i, k) +
                   yj * (aj - aj_old) * kernel(j, k) + delta_b;
    }
    return true;
  };

  auto examine = [&](std::size_t j) -> bool {
    const double yj = labels[j];
    const double ej = errors[j];
    const double r = ej * yj;
    if (!((r < -config.tol && alpha[j] < config.c) || (r > config.tol && alpha[j] > 0.0))) {
      return false;
    }
    // best partner by |E_i - E_j| among non-bound points
    std::size_t best = j;
    double best_gap = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j || alpha[i] <= 0.0 || alpha[i] >= config.c) continue;
      const double gap = std::abs(errors[i] - ej);
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best != j && take_step(best, j)) return true;
    // seeded scan fallbacks keep the procedure deterministic
    const std::size_t start = rng.below(n);
    for (std::size_t off = 0; off < n; ++off) {
      const std::size_t i = (start + off) % n;
      if (i == j || alpha[i] <= 0.0 || alpha[i] >= config.c) continue;
      if (take_step(i, j)) return true;
    }
    for (std::size_t off = 0; off < n; ++off) {
      const std::size_t i = (start + off) % n;
      if (i == j) continue;
      if (take_step(i, j)) return true;
    }
    return false;
  };

  bool examine_all = true;
  std::size_t changed = 0;
  for (std::size_t sweep = 0; sweep < config.max_sweeps; ++sweep) {
    changed = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!examine_all && (alpha[j] <= 0.0 || alpha[j] >= config.c)) continue;
      if (examine(j)) ++changed;
    }
    if (examine_all) {
      if (changed == 0) break;
      examine_all = false;
    } else if (changed == 0) {
      examine_all = true;
    }
  }

  KernelSvm svm;
  svm.gamma_ = config.gamma;
  svm.bias_ = b;
  double dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dual += alpha[i];
    for (std::size_t j = 0; j < n; ++j) {
      dual -= 0.5 * alpha[i] * alpha[j] * labels[i] * labels[j] * kernel(i, j);
    }
  }
  svm.dual_objective_ = dual;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] > 0.0) {
      svm.support_.push_back(points[i]);
      svm.coeffs_.push_back(alpha[i] * labels[i]);
    }
  }
  return svm;
}

double KernelSvm::decision(std::span<const double> x) const {
  double f = bias_;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    f += coeffs_[i] * std::exp(-gamma_ * sq_dist(support_[i], x));
  }
  return f;
}

}  // namespace embkit::eval
