#pragma once

// Synthetic data generation and the replicated subsampling experiment.

#include <cstdint>
#include <vector>

#include "mvrs/pipeline.hpp"

namespace mvrs {

// Covariate designs:
//   1  independent standard normal
//   2  independent normal with mean one
//   3  zero-mean normal, correlation 0.5^|i-j| between components
//   4  independent unit-rate exponential
struct SimConfig {
  Family family = Family::Poisson;
  int covariate_case = 1;
  std::size_t n_rows = 100000;
  std::size_t n_cov = 4;
  Vector theta_true;  // defaults to all 0.5, length n_cov + 1
  std::vector<std::size_t> n_values = {200, 500, 800, 1000};
  std::size_t n0 = 200;
  std::size_t k = 30;
  std::size_t replicates = 200;
  std::vector<Method> methods = {Method::Unif, Method::MvrsU};
  std::uint64_t seed = 1;
  double min_prob_floor = 0.0;
  bool estimate_mse = false;  // also compute the plug-in estimate per replicate
  double tol = kFitTol;
  std::size_t max_iter = kFitMaxIter;
};

void validate_config(const SimConfig& cfg);

void gen_covariates(int covariate_case, std::size_t rows, std::size_t n_cov, Rng& rng,
                    std::vector<double>& out);
void gen_response(Dataset& data, Family f, std::span<const double> theta, Rng& rng);

// Covariates from stream (seed, kCovariates), responses from (seed, kResponse).
Dataset gen_dataset(const SimConfig& cfg);

// One (method, n) cell of the experiment. Deviations are measured against the
// full-data fit on the one shared dataset, not against theta_true.
struct CellStats {
  Method method = Method::Unif;
  std::size_t n = 0;
  double mse = 0.0;        // mean squared parameter distance to the full fit
  Vector se;               // per-component root mean squared deviation
  Vector bias;             // per-component mean deviation
  double mean_mse_hat = 0.0;  // average plug-in estimate, when requested
  std::size_t mse_hat_count = 0;
  std::size_t replicates_used = 0;
  std::size_t failures = 0;
  double wall_ms_mean = 0.0;    // per-replicate cost as if the cell ran alone
  double wall_ms_median = 0.0;
  bool valid = false;  // at most 5 percent failed replicates
};

struct SimReport {
  SimConfig config;
  Vector theta_full;
  bool full_converged = false;
  std::vector<CellStats> cells;
  bool valid = false;
  double total_seconds = 0.0;
};

// Fixes one dataset and its full fit, then per replicate draws a fresh pilot
// and runs every requested method and subsample size on it. Replicates where
// the pilot or a cell's fit fails (error or non-convergence) are dropped from
// that cell and counted. Fully deterministic for a given config.
SimReport run_experiment(const SimConfig& cfg);

}  // namespace mvrs
