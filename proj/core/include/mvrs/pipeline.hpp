#pragma once

// End-to-end subsampling estimators: pilot, probabilities, stratification,
// draws, weighted fit, optional plug-in covariance. The stages are exposed
// individually so the simulation harness can share pilot work across methods
// within a replicate; run_pipeline composes them for one-shot use.

#include <cstdint>
#include <optional>
#include <string>

#include "mvrs/estimator.hpp"
#include "mvrs/sampling.hpp"
#include "mvrs/stratify.hpp"
#include "mvrs/variance.hpp"

namespace mvrs {

enum class Method { Full, Unif, Opt, MvrsU, MvrsO, OptMvrsU, OptMvrsO };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

// Which stages a method needs.
bool method_uses_optimal_probs(Method m);  // pilot-driven probabilities
bool method_uses_scores(Method m);         // stratification scores
bool method_singleton_strata(Method m);    // one draw per stratum

struct PipelineConfig {
  Method method = Method::MvrsU;
  std::size_t n = 0;    // subsample draws
  std::size_t n0 = 200;  // pilot draws
  std::size_t k = 30;    // strata (rank-partition methods only)
  std::uint64_t seed = 1;
  double min_prob_floor = 0.0;
  double tol = kFitTol;
  std::size_t max_iter = kFitMaxIter;
  bool want_variance = true;
};

struct PilotStage {
  WeightedSample rows;
  FitResult fit;
};

// Uniform with-replacement pilot of size n0, fitted unweighted from zero.
// Uses the stream derive_seed(run_seed, stream::kPilot).
PilotStage run_pilot(const Dataset& data, Family f, std::size_t n0, std::uint64_t run_seed,
                     double tol = kFitTol, std::size_t max_iter = kFitMaxIter);

// Single stratum holding every row in original order; the k=1 rank partition
// produces exactly this, which keeps one-stratum runs bit-identical to plain
// unstratified draws.
Partition single_stratum(std::size_t n_rows);

// Weighted sample from stratified draws: a row drawn in stratum j enters with
// weight mass_j / (count_j * realized_prob).
WeightedSample sample_from_draws(const Dataset& data, const StratPlan& plan,
                                 const std::vector<Draw>& draws);

struct StepTimes {
  double pilot = 0, probs = 0, scores = 0, partition = 0, draw = 0, fit = 0, variance = 0,
         total = 0;  // milliseconds
};

struct PipelineResult {
  FitResult fit;
  FitResult pilot_fit;
  SamplingPlan plan;
  StratPlan strat;
  std::optional<CovEstimate> cov;
  bool variance_degenerate = false;
  bool direction_converged = true;
  StepTimes ms;
};

PipelineResult run_pipeline(const Dataset& data, Family f, const PipelineConfig& cfg);

}  // namespace mvrs
