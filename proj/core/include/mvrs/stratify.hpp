#pragma once

// Score-based stratification: the projection direction that captures the most
// subsampling variance, scalar scores along it, rank partitions, mass-based
// allocation, and per-stratum draws.

#include <cstdint>
#include <span>
#include <vector>

#include "mvrs/linalg.hpp"
#include "mvrs/sampling.hpp"

namespace mvrs {

// Leading eigenvector by power iteration. Returns the unit vector (sign fixed
// so its largest-magnitude entry is positive) and whether successive iterates
// aligned to tol before max_iter. Near-tied top eigenvalues or an orthogonal
// start leave the flag false; the last iterate is still returned.
std::pair<Vector, bool> power_iteration(const Matrix& a, double tol = 1e-10,
                                        std::size_t max_iter = 1000);

struct Direction {
  Vector u;              // unit eigenvector of the projected score covariance
  Vector c;              // u premultiplied by the pilot rescaling matrix
  bool converged = true;  // power iteration reached tolerance
};

// Direction along which the pilot-rescaled scores vary the most.
Direction leading_direction(const Dataset& data, Family f, const FitResult& pilot_fit,
                            const WeightedSample& pilot_rows);

// One scalar score per row: the rescaled score of the row projected on the
// leading direction, evaluated at the pilot parameter.
Vector strat_scores(const Dataset& data, Family f, const Direction& dir,
                    std::span<const double> pilot_theta);

// Rank-based partition of rows by score. Stratum j holds the rows whose
// (score, row index) rank falls in [floor((j-1)N/k), floor(jN/k)); ties are
// broken by the original index. Built by recursive selection around the
// middle cut, O(N log k); each stratum lists its rows in ascending row order.
struct Partition {
  std::size_t k = 0;
  std::vector<std::uint32_t> order;    // permutation of 0..N-1
  std::vector<std::size_t> offsets;    // k+1 fence posts into order
  Vector boundaries;                   // k-1 values: top score of each stratum but the last

  std::span<const std::uint32_t> stratum(std::size_t j) const {
    return {order.data() + offsets[j], offsets[j + 1] - offsets[j]};
  }
  std::size_t stratum_size(std::size_t j) const { return offsets[j + 1] - offsets[j]; }
};

Partition partition_equal_count(std::span<const double> scores, std::size_t k);

struct Allocation {
  Vector masses;                    // per-stratum probability mass, as summed
  std::vector<std::size_t> counts;  // draws per stratum, sums to n
  std::size_t empty = 0;            // strata receiving zero draws
};

Vector stratum_masses(const Partition& part, std::span<const double> probs);

// Largest-remainder rounding of n * mass_j; ties on the fractional part go to
// the lower stratum index. Agrees with nearest-integer rounding whenever that
// already sums to n.
std::vector<std::size_t> allocate_counts(const Vector& masses, std::size_t n);

Allocation allocate(const Partition& part, std::span<const double> probs, std::size_t n);

// Allocation under equal base probabilities: masses reduce to stratum sizes
// over the row count, skipping the per-row gather.
Allocation allocate_uniform(const Partition& part, std::size_t n);

struct StratPlan {
  Partition part;
  Allocation alloc;
};

// n strata of probability mass 1/n each (to within one observation), cut by
// walking the probability-sorted order; every stratum gets exactly one draw.
StratPlan optimal_partition(std::span<const double> scores, std::span<const double> probs,
                            std::size_t n);
// Same, reusing a full (score, index) sort computed by the caller.
StratPlan optimal_partition_sorted(std::span<const std::uint32_t> sorted_order,
                                   std::span<const double> scores, std::span<const double> probs,
                                   std::size_t n);

// Full lexicographic (score, index) sort; shared by optimal_partition and by
// callers that amortize it.
std::vector<std::uint32_t> sort_by_score(std::span<const double> scores);

// Per-stratum with-replacement draws. Stratum j uses the RNG stream
// derive_seed(run_seed, stream::kDraw, j+1), so draws are independent across
// strata and unaffected by other strata or methods.
std::vector<Draw> stratified_draw(const StratPlan& plan, std::span<const double> probs,
                                  std::uint64_t run_seed);

}  // namespace mvrs
