#pragma once

// Weighted maximum-likelihood fitting by Newton's method with step halving.

#include <cstdint>
#include <vector>

#include "mvrs/linalg.hpp"
#include "mvrs/model.hpp"

namespace mvrs {

// Rows of a dataset with positive weights. Duplicated indices are fine and
// equivalent to merging their weights.
struct WeightedSample {
  const Dataset* data = nullptr;
  std::vector<std::uint32_t> indices;
  Vector weights;

  std::size_t size() const { return indices.size(); }
};

struct FitResult {
  Vector theta;
  std::size_t iterations = 0;
  bool converged = false;
  double final_grad_norm = 0.0;  // sup norm of the weighted score at theta
  Matrix neg_hessian;            // -(sum_i w_i hess_i) at theta; PSD
  Vector objective_trace;        // weighted log-likelihood after each accepted step
};

inline constexpr double kFitTol = 1e-8;
inline constexpr std::size_t kFitMaxIter = 100;

// Maximizes sum_i w_i loglik_i. Convergence is sup-norm of the weighted score
// below tol. Non-convergence within max_iter is reported in the result, not
// thrown; a diverging iterate (norm > 1e4) or singular hessian throws.
FitResult fit(const WeightedSample& sample, Family f, const Vector& init, double tol = kFitTol,
              std::size_t max_iter = kFitMaxIter);

// Zero-initialized fit.
FitResult fit(const WeightedSample& sample, Family f);

// Unweighted fit on every row.
FitResult full_fit(const Dataset& data, Family f, double tol = kFitTol,
                   std::size_t max_iter = kFitMaxIter);

}  // namespace mvrs
