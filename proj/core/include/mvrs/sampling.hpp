#pragma once

// Subsampling probabilities and with-replacement draws.

#include <cstdint>
#include <span>
#include <vector>

#include "mvrs/estimator.hpp"
#include "mvrs/linalg.hpp"
#include "mvrs/model.hpp"
#include "mvrs/rng.hpp"

namespace mvrs {

enum class Scheme { Uniform, Optimal };

struct SamplingPlan {
  Scheme scheme = Scheme::Uniform;
  Vector probs;        // one probability per dataset row, sums to one
  Vector pilot_theta;  // empty for the uniform scheme
};

SamplingPlan uniform_probs(std::size_t n_rows);

// Pilot-driven probabilities proportional to the norm of the pilot-rescaled
// score of each row. The rescaling matrix is the inverse average pilot
// hessian, recovered from pilot_fit and the pilot sample size.
//
// min_prob_floor in [0,1) mixes the result with uniform:
// (1-floor)*p + floor/N, which bounds every probability away from zero.
SamplingPlan optimal_probs(const Dataset& data, Family f, const FitResult& pilot_fit,
                           const WeightedSample& pilot_rows, double min_prob_floor = 0.0);

struct Draw {
  std::vector<std::uint32_t> indices;  // global row ids, repeats allowed
  Vector realized_probs;               // plan probability of each drawn row
};

// m independent draws from the rows slice, each row with probability
// proportional to its probs entry. Cumulative sums plus binary search:
// O(slice + m log slice). Probabilities need not be normalized.
Draw draw_with_replacement(std::span<const std::uint32_t> rows, std::span<const double> probs,
                           std::size_t m, Rng& rng);

}  // namespace mvrs
