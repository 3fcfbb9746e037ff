#pragma once

#include <span>
#include <vector>

#include "embkit/numerics.hpp"

// Small dense Gaussian-kernel SVM trained by sequential minimal optimization.
// Deterministic for a fixed seed: the second-choice heuristic is max |E1-E2|
// with a seeded scan fallback, and iteration caps are fixed.

namespace embkit::eval {

struct SvmConfig {
  double gamma = 1.0;        // K(x,y) = exp(-gamma * |x-y|^2)
  double c = 10.0;           // box constraint
  double tol = 1e-3;         // KKT tolerance
  std::size_t max_sweeps = 200;
};

class KernelSvm {
 public:
  /// labels are +1/-1; throws when only one class is present.
  static KernelSvm train(const std::vector<num::Vector>& points,
                         const std::vector<int>& labels, const SvmConfig& config,
                         num::Rng& rng);

  double decision(std::span<const double> x) const;
  int predict(std::span<const double> x) const { return decision(x) >= 0.0 ? 1 : -1; }

  std::size_t support_count() const { return support_.size(); }
  double bias() const { return bias_; }
  /// Dual objective at the trained point, for checks against other solvers.
  double dual_objective() const { return dual_objective_; }

 private:
  std::vector<num::Vector> support_;
  std::vector<double> coeffs_;  // alpha_i * y_i
  double bias_ = 0.0;
  double gamma_ = 1.0;
  double dual_objective_ = 0.0;
};

}  // namespace embkit::eval
