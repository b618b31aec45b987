#pragma once

// Exact small-data variance expressions for with-replacement subsampling
// estimators, and the plug-in covariance estimate computed from a stratified
// subsample.
//
// Conventions shared by everything here: phi_i = M ldot_i with
// M = [N^{-1} sum hess_i]^{-1} evaluated on the full dataset at theta. M is
// negative definite under the maximization orientation; every result is a
// quadratic form in phi, so the sign cancels.

#include <span>
#include <vector>

#include "mvrs/linalg.hpp"
#include "mvrs/model.hpp"
#include "mvrs/sampling.hpp"
#include "mvrs/stratify.hpp"

namespace mvrs {

// Exact per-draw variance of the unstratified weighted estimator:
// N^{-2} sum_i phi_i phi_i^T / p_i.
Matrix exact_v_sub(const Dataset& data, Family f, std::span<const double> probs,
                   std::span<const double> theta);

// Exact per-draw variance under stratified draws:
// N^{-2} sum_j sum_{i in I_j} (p_i / mass_j^2)
//        [(mass_j / p_i) phi_i - sum_{l in I_j} phi_l]^{x2}.
Matrix exact_v_str(const Dataset& data, Family f, std::span<const double> probs,
                   const Partition& part, std::span<const double> theta);

// The variance the stratification removes, evaluated independently through
// stratum masses and conditional means: with mass share q_j, count share p_j
// and within-stratum mean m_j of phi, this is
// N^{-1} Var[(p_j/q_j) m_j] under the mass-weighted stratum distribution.
// Equals exact_v_sub - exact_v_str when theta is the full-data optimum.
Matrix exact_diff_rhs(const Dataset& data, Family f, std::span<const double> probs,
                      const Partition& part, std::span<const double> theta);

struct CovEstimate {
  Matrix v_hat;                 // estimated per-draw covariance, d x d
  double mse_hat = 0.0;         // trace(v_hat) / n, n = total draws
  Matrix m_hat;                 // plug-in inverse average hessian
  Matrix phi_hat;               // plug-in middle matrix
  std::size_t singleton_strata = 0;  // one draw: zero contribution by construction
  std::size_t skipped_strata = 0;    // zero draws
};

// Plug-in covariance from the drawn rows only: inverse-probability-weighted
// average hessian, and per-stratum centered second moments of the weighted
// scores. Throws DegenerateVarianceError when no stratum has two draws.
CovEstimate plug_in_estimate(const Dataset& data, Family f, const StratPlan& plan,
                             const std::vector<Draw>& draws, std::span<const double> theta_hat);

}  // namespace mvrs
