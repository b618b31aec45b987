#include "mvrs/stratify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "mvrs/fastmap.hpp"

namespace mvrs {

std::pair<Vector, bool> power_iteration(const Matrix& a, double tol, std::size_t max_iter) {
  const std::size_t d = a.rows();
  if (d == 0 || a.cols() != d) throw DimensionError("power_iteration: matrix must be square");
  Vector v(d, 1.0 / std::sqrt(static_cast<double>(d)));
  bool converged = false;
  for (std::size_t it = 0; it < max_iter; ++it) {
    Vector w = matvec(a, v);
    const double nw = norm2(w);
    if (nw == 0.0) break;  // degenerate operator, keep the current iterate
    for (double& x : w) x /= nw;
    const double align = std::abs(dot(w, v));
    v = std::move(w);
    if (1.0 - align <= tol) {
      converged = true;
      break;
    }
  }
  // Canonical sign: largest-magnitude entry positive.
  std::size_t arg = 0;
  for (std::size_t i = 1; i < d; ++i)
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  if (v[arg] < 0.0)
    for (double& x : v) x = -x;
  return {std::move(v), converged};
}

namespace {

// Inverse average pilot hessian (the pilot fit stores the negated sum).
Matrix pilot_rescale_matrix(const FitResult& pilot_fit, double n0) {
  Matrix avg = pilot_fit.neg_hessian;
  avg *= -1.0 / n0;
  return inverse(avg);
}

}  // namespace

Direction leading_direction(const Dataset& data, Family f, const FitResult& pilot_fit,
                            const WeightedSample& pilot_rows) {
  const std::size_t d = data.dim();
  if (pilot_fit.theta.size() != d) {
    throw DimensionError("leading_direction: pilot dimension mismatch");
  }
  if (pilot_rows.size() == 0) throw InvalidValueError("leading_direction: empty pilot sample");

  const Matrix m0 = pilot_rescale_matrix(pilot_fit, static_cast<double>(pilot_rows.size()));

  // Second moment of the pilot scores, weight-normalized.
  Matrix g(d, d);
  Vector ldot(d);
  double wsum = 0.0;
  for (std::size_t t = 0; t < pilot_rows.size(); ++t) {
    const std::size_t i = pilot_rows.indices[t];
    const auto z = data.row(i);
    const double w = pilot_rows.weights[t];
    const double e = glm::eta(z, pilot_fit.theta);
    const double resid = data.y[i] - glm::mean_value(e, f);
    ldot[0] = resid;
    for (std::size_t j = 0; j < z.size(); ++j) ldot[j + 1] = resid * z[j];
    add_outer(g, ldot, w);
    wsum += w;
  }
  g *= 1.0 / wsum;

  Matrix projected = matmul(matmul(m0, g), transpose(m0));
  symmetrize(projected);

  Direction dir;
  auto [u, ok] = power_iteration(projected);
  dir.u = std::move(u);
  dir.converged = ok;
  dir.c.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += dir.u[i] * m0(i, j);
    dir.c[j] = acc;
  }
  return dir;
}

Vector strat_scores(const Dataset& data, Family f, const Direction& dir,
                    std::span<const double> pilot_theta) {
  const std::size_t d = data.dim();
  if (dir.c.size() != d || pilot_theta.size() != d) {
    throw DimensionError("strat_scores: dimension mismatch");
  }
  const std::size_t n = data.n_rows;
  const std::size_t p = data.n_cov;
  // Blocked three-step evaluation: fused linear-predictor/projection dots, a
  // vectorized mean map, then the residual product with a strict finiteness
  // check. The block buffers stay cache resident, so each row is streamed
  // from memory once.
  constexpr std::size_t kBlock = 4096;
  Vector scores(n);
  double ebuf[kBlock], pbuf[kBlock];
  const double* x = data.x.data();
  for (std::size_t base = 0; base < n; base += kBlock) {
    const std::size_t len = std::min(kBlock, n - base);
    for (std::size_t r = 0; r < len; ++r) {
      const double* z = x + (base + r) * p;
      double e = pilot_theta[0];
      double proj = dir.c[0];
      for (std::size_t j = 0; j < p; ++j) {
        e += pilot_theta[j + 1] * z[j];
        proj += dir.c[j + 1] * z[j];
      }
      ebuf[r] = e;
      pbuf[r] = proj;
    }
    if (f == Family::Logistic) {
      fastmap::logistic_inplace(ebuf, len);
    } else {
      fastmap::exp_inplace(ebuf, len);
    }
    for (std::size_t r = 0; r < len; ++r) {
      const double s = (data.y[base + r] - ebuf[r]) * pbuf[r];
      if (!std::isfinite(s)) {
        throw InvalidValueError("strat_scores: non-finite score at row " +
                                std::to_string(base + r + 1));
      }
      scores[base + r] = s;
    }
  }
  return scores;
}

namespace {

struct ScoreLess {
  std::span<const double> s;
  bool operator()(std::uint32_t a, std::uint32_t b) const {
    return s[a] < s[b] || (s[a] == s[b] && a < b);
  }
};

void check_scores_finite(std::span<const double> scores) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw InvalidValueError("partition: non-finite score at row " + std::to_string(i + 1));
    }
  }
}

// Order-preserving map from finite doubles to unsigned keys, so rank selection
// can run branch-free on integers. Negative zero collapses onto positive zero
// (adding +0.0 does that) to keep the key order identical to the double order.
constexpr std::uint64_t kSignBit = 0x8000000000000000ull;

inline std::uint64_t score_key(double s) {
  s += 0.0;
  std::uint64_t b;
  std::memcpy(&b, &s, sizeof b);
  return b ^ (static_cast<std::uint64_t>(static_cast<std::int64_t>(b) >> 63) | kSignBit);
}

inline double key_score(std::uint64_t k) {
  const std::uint64_t b = (k & kSignBit) ? (k & ~kSignBit) : ~k;
  double s;
  std::memcpy(&s, &b, sizeof s);
  return s;
}

// Reusable per-thread buffers for the partition machinery; grown on demand so
// repeated partitions skip the allocation and first-touch cost.
struct PartScratch {
  std::vector<std::uint64_t> keys, bufa, bufb;
  void grow(std::size_t n) {
    if (keys.size() < n) {
      keys.resize(n);
      bufa.resize(n);
      bufb.resize(n);
    }
  }
};

PartScratch& part_scratch() {
  thread_local PartScratch s;
  return s;
}

// The value at a requested rank together with the extent of its tie block in
// the sorted key sequence: n_less keys compare strictly below value, n_equal
// compare equal. Splits never separate equal keys, so every subrange the
// recursion visits holds complete tie blocks and the extent is exact.
struct CutInfo {
  std::uint64_t value = 0;
  std::size_t n_less = 0;
  std::size_t n_equal = 0;
};

// Quickselect engine over the key multiset. Finds the key values sitting at
// the requested global ranks: selects the middle requested rank, partitions
// around a sampled pivot, and recurses on the two sides. Partition passes
// stream between two buffers instead of swapping in place, which keeps the
// inner loop branch-free.
class CutSelect {
 public:
  // ranks must be strictly increasing, each in [0, n). Returns the value and
  // tie-block extent at each rank of the sorted key sequence.
  std::vector<CutInfo> run(const std::uint64_t* keys, std::size_t n, PartScratch& scratch,
                           const std::vector<std::size_t>& ranks) {
    ranks_ = &ranks;
    cuts_.assign(ranks.size(), CutInfo{});
    if (ranks.empty()) return cuts_;
    bufa_ = scratch.bufa.data();
    bufb_ = scratch.bufb.data();
    if (ranks.size() == 1) {
      cuts_[0] = single(keys, bufa_, 0, n, ranks[0]);
    } else {
      multi(keys, bufa_, 0, n, 0, ranks.size());
    }
    return cuts_;
  }

 private:
  static constexpr std::size_t kSortCutoff = 2048;
  static constexpr std::size_t kSelectCutoff = 128;

  std::uint64_t* other(std::uint64_t* p) { return p == bufa_ ? bufb_ : bufa_; }

  // Lows stream forward from dst[lo], highs backward from dst[hi); one store
  // per element, the address picked by mask arithmetic so the comparison never
  // becomes a branch. The high side comes out reversed, which the selection
  // never depends on.
  std::size_t split_below(const std::uint64_t* src, std::uint64_t* dst, std::size_t lo,
                          std::size_t hi, std::uint64_t pivot) {
    std::size_t a = lo, b = hi;
    for (std::size_t t = lo; t < hi; ++t) {
      const std::uint64_t v = src[t];
      const std::size_t below = static_cast<std::size_t>(v < pivot);
      const std::size_t bm1 = b - 1;
      dst[bm1 + ((a - bm1) & (0 - below))] = v;
      a += below;
      b = bm1 + below;
    }
    return a - lo;
  }

  // Same split with "at or below"; used when the pivot equals the range minimum.
  std::size_t split_at_most(const std::uint64_t* src, std::uint64_t* dst, std::size_t lo,
                            std::size_t hi, std::uint64_t pivot) {
    std::size_t a = lo, b = hi;
    for (std::size_t t = lo; t < hi; ++t) {
      const std::uint64_t v = src[t];
      const std::size_t below = static_cast<std::size_t>(v <= pivot);
      const std::size_t bm1 = b - 1;
      dst[bm1 + ((a - bm1) & (0 - below))] = v;
      a += below;
      b = bm1 + below;
    }
    return a - lo;
  }

  // Pivot from a strided sample, picked at the position proportional to the
  // target rank so the split lands near the rank on the first try. The sample
  // shrinks with the range so pivot selection stays a small fraction of the
  // split work.
  static std::uint64_t sample_pivot(const std::uint64_t* src, std::size_t lo, std::size_t hi,
                                    std::size_t rank) {
    const std::size_t m = hi - lo;
    std::uint64_t sample[256];
    const std::size_t count = std::min<std::size_t>(256, std::max<std::size_t>(48, m / 96));
    const std::size_t stride = m / count;
    for (std::size_t s = 0; s < count; ++s) sample[s] = src[lo + s * stride];
    std::size_t pos = (rank - lo) * count / m;
    if (pos >= count) pos = count - 1;
    std::nth_element(sample, sample + pos, sample + count);
    return sample[pos];
  }

  // Tie-block extent of tail[pos] inside a fully sorted block that spans the
  // global ranks [lo, lo + len).
  static CutInfo from_sorted(const std::uint64_t* tail, std::size_t len, std::size_t lo,
                             std::size_t pos) {
    const std::uint64_t v = tail[pos];
    std::size_t first = pos, last = pos + 1;
    while (first > 0 && tail[first - 1] == v) --first;
    while (last < len && tail[last] == v) ++last;
    return {v, lo + first, last - first};
  }

  CutInfo single(const std::uint64_t* src, std::uint64_t* dst, std::size_t lo, std::size_t hi,
                 std::size_t rank) {
    while (hi - lo > kSelectCutoff) {
      const std::uint64_t pivot = sample_pivot(src, lo, hi, rank);
      std::size_t below = split_below(src, dst, lo, hi, pivot);
      if (below == 0) {
        below = split_at_most(src, dst, lo, hi, pivot);
        if (rank < lo + below) return {pivot, lo, below};
        lo += below;
      } else if (rank < lo + below) {
        hi = lo + below;
      } else {
        lo += below;
      }
      src = dst;
      dst = other(dst);
    }
    std::uint64_t tail[kSelectCutoff];
    const std::size_t len = hi - lo;
    std::memcpy(tail, src + lo, len * sizeof(std::uint64_t));
    std::sort(tail, tail + len);
    return from_sorted(tail, len, lo, rank - lo);
  }

  void multi(const std::uint64_t* src, std::uint64_t* dst, std::size_t lo, std::size_t hi,
             std::size_t rb, std::size_t re) {
    const std::vector<std::size_t>& ranks = *ranks_;
    while (true) {
      if (rb >= re) return;
      if (re - rb == 1) {
        cuts_[rb] = single(src, dst, lo, hi, ranks[rb]);
        return;
      }
      if (hi - lo <= kSortCutoff) {
        std::uint64_t tail[kSortCutoff];
        const std::size_t len = hi - lo;
        std::memcpy(tail, src + lo, len * sizeof(std::uint64_t));
        std::sort(tail, tail + len);
        for (std::size_t r = rb; r < re; ++r) cuts_[r] = from_sorted(tail, len, lo, ranks[r] - lo);
        return;
      }
      const std::size_t rmid = rb + (re - rb) / 2;
      const std::uint64_t pivot = sample_pivot(src, lo, hi, ranks[rmid]);
      std::size_t below = split_below(src, dst, lo, hi, pivot);
      if (below == 0) {
        // Pivot is the range minimum: resolve every rank inside the tie block
        // directly and continue on the strictly-larger remainder.
        below = split_at_most(src, dst, lo, hi, pivot);
        while (rb < re && ranks[rb] < lo + below) cuts_[rb++] = {pivot, lo, below};
        lo += below;
        src = dst;
        dst = other(dst);
        continue;
      }
      const std::size_t mid = lo + below;
      std::size_t rsplit = rb;
      while (rsplit < re && ranks[rsplit] < mid) ++rsplit;
      multi(dst, other(dst), lo, mid, rb, rsplit);
      // Tail recursion on the upper side.
      src = dst;
      dst = other(dst);
      lo = mid;
      rb = rsplit;
    }
  }

  const std::vector<std::size_t>* ranks_ = nullptr;
  std::vector<CutInfo> cuts_;
  std::uint64_t* bufa_ = nullptr;
  std::uint64_t* bufb_ = nullptr;
};

// Builds the permutation for partition_equal_count once the cut values and
// their tie-block extents are known. Classification is the count of cut
// values strictly below the row's key: a 16-bit-prefix table narrows every
// row to a short run of the cut array, and a fixed-depth branch-free search
// finishes inside it, so the per-row cost does not depend on how the cuts
// cluster. Rows that equal a cut value occupy the sorted ranks
// [n_less, n_less + n_equal) in row order, so their strata follow from
// walking that interval across the stratum fences, which reproduces the
// (score, index) tie-break exactly. Strata come out with rows in ascending
// index order.
void scatter_by_cuts(const std::uint64_t* keys, std::size_t n, const std::vector<CutInfo>& cuts,
                     Partition& part) {
  const std::size_t k = part.k;
  const std::size_t nc = cuts.size();
  constexpr int kShift1 = 48;

  // Cut values padded with a sentinel above every finite key, so a window may
  // run one past the last cut.
  std::vector<std::uint64_t> cutvals(nc + 1);
  for (std::size_t c = 0; c < nc; ++c) cutvals[c] = cuts[c].value;
  cutvals[nc] = ~std::uint64_t{0};

  // Per-prefix search windows over the cut array, packed as start:24 len:8.
  // Prefixes free of cuts get the length-1 window at their upper neighbour,
  // which the search leaves untouched. Inputs too large for the packing take
  // the plain per-row binary search below.
  constexpr std::size_t kMaxStart = (std::size_t{1} << 24) - 1;
  constexpr std::size_t kMaxLen = 255;
  std::vector<std::uint32_t> t1;
  std::size_t depth = 0;
  if (nc < kMaxStart) {
    t1.resize(65536);
    std::size_t c = 0;
    std::size_t max_len = 1;
    bool packable = true;
    for (std::size_t p = 0; p < 65536; ++p) {
      while (c < nc && (cutvals[c] >> kShift1) < p) ++c;
      std::size_t e = c;
      while (e < nc && (cutvals[e] >> kShift1) == p) ++e;
      const std::size_t len = std::max<std::size_t>(e - c, 1);
      if (len > kMaxLen) {
        packable = false;
        break;
      }
      max_len = std::max(max_len, len);
      t1[p] = static_cast<std::uint32_t>(c) | (static_cast<std::uint32_t>(len) << 24);
    }
    if (!packable) t1.clear();
    while ((std::size_t{1} << depth) < max_len) ++depth;
  }

  // Quotas per tie group: the group's rank interval walked across the fences.
  struct Quota {
    std::uint32_t stratum;
    std::size_t left;
  };
  std::vector<std::vector<Quota>> quotas(nc);
  for (std::size_t g = 0; g < nc; ++g) {
    if (g > 0 && cuts[g].value == cuts[g - 1].value) continue;  // rows map to the first duplicate
    std::size_t r = cuts[g].n_less;
    std::size_t rem = cuts[g].n_equal;
    std::size_t s = static_cast<std::size_t>(
        std::upper_bound(part.offsets.begin(), part.offsets.end(), r) - part.offsets.begin() - 1);
    while (rem > 0) {
      if (s >= k) throw Error("partition: internal quota accounting failure");
      const std::size_t take = std::min(rem, part.offsets[s + 1] - r);
      if (take > 0) quotas[g].push_back({static_cast<std::uint32_t>(s), take});
      r += take;
      rem -= take;
      ++s;
    }
  }

  // Single scatter pass in row order, tracking the top key per stratum for
  // the boundaries.
  std::vector<std::size_t> head(part.offsets.begin(), part.offsets.end() - 1);
  std::vector<std::uint64_t> top(k, 0);
  std::vector<std::size_t> qpos(nc, 0);
  const std::uint64_t* cv = cutvals.data();
  const auto apply = [&](std::size_t row, std::size_t g, std::uint64_t key) {
    std::uint32_t s = static_cast<std::uint32_t>(g);
    if (cv[g] == key) {
      Quota& q = quotas[g][qpos[g]];
      s = q.stratum;
      if (--q.left == 0) ++qpos[g];
    }
    part.order[head[s]++] = static_cast<std::uint32_t>(row);
    top[s] = std::max(top[s], key);
  };
  if (!t1.empty()) {
    // Fixed-depth search: every row runs the same number of masked steps, so
    // the classification carries no data-dependent branches. Windows already
    // down to one element are left where they are.
    const auto classify = [&](std::uint64_t key) {
      const std::uint32_t e = t1[key >> kShift1];
      const std::uint64_t* base = cv + (e & 0x00FFFFFFu);
      std::size_t len = e >> 24;
      for (std::size_t d = 0; d < depth; ++d) {
        const std::size_t half = len >> 1;
        base += half & (0 - static_cast<std::size_t>(base[half] < key));
        len -= half;
      }
      return static_cast<std::size_t>(base - cv) + static_cast<std::size_t>(base[0] < key);
    };
    // Classify a block ahead of the permutation stores: the store addresses
    // then resolve from ready values instead of waiting on the search chain,
    // which matters when neighbouring rows land in the same stratum.
    constexpr std::size_t kBlock = 32;
    std::uint32_t st[kBlock];
    std::size_t i = 0;
    for (; i + kBlock <= n; i += kBlock) {
      for (std::size_t j = 0; j < kBlock; ++j) {
        st[j] = static_cast<std::uint32_t>(classify(keys[i + j]));
      }
      for (std::size_t j = 0; j < kBlock; ++j) apply(i + j, st[j], keys[i + j]);
    }
    for (; i < n; ++i) apply(i, classify(keys[i]), keys[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t g =
          static_cast<std::size_t>(std::lower_bound(cv, cv + nc, keys[i]) - cv);
      apply(i, g, keys[i]);
    }
  }
  part.boundaries.resize(k - 1);
  for (std::size_t j = 0; j + 1 < k; ++j) part.boundaries[j] = key_score(top[j]);
}

}  // namespace

Partition partition_equal_count(std::span<const double> scores, std::size_t k) {
  const std::size_t n = scores.size();
  if (k < 1) throw InvalidValueError("partition: need at least one stratum");
  if (k > n) throw InvalidValueError("partition: more strata than rows");
  check_scores_finite(scores);

  Partition part;
  part.k = k;
  part.order.resize(n);
  part.offsets.resize(k + 1);
  for (std::size_t j = 0; j <= k; ++j) part.offsets[j] = j * n / k;

  if (k == 1) {
    std::iota(part.order.begin(), part.order.end(), std::uint32_t{0});
    return part;
  }

  PartScratch& scratch = part_scratch();
  scratch.grow(n);
  std::uint64_t* keys = scratch.keys.data();
  for (std::size_t i = 0; i < n; ++i) keys[i] = score_key(scores[i]);

  std::vector<std::size_t> ranks(part.offsets.begin() + 1, part.offsets.end() - 1);
  CutSelect sel;
  const std::vector<CutInfo> cuts = sel.run(keys, n, scratch, ranks);
  scatter_by_cuts(keys, n, cuts, part);
  return part;
}

Vector stratum_masses(const Partition& part, std::span<const double> probs) {
  if (probs.size() != part.order.size()) throw DimensionError("stratum_masses: size mismatch");
  Vector masses(part.k, 0.0);
  for (std::size_t j = 0; j < part.k; ++j) {
    double acc = 0.0;
    for (std::uint32_t i : part.stratum(j)) acc += probs[i];
    masses[j] = acc;
  }
  return masses;
}

std::vector<std::size_t> allocate_counts(const Vector& masses, std::size_t n) {
  const std::size_t k = masses.size();
  std::vector<std::size_t> counts(k, 0);
  Vector frac(k, 0.0);
  std::size_t assigned = 0;
  const double nn = static_cast<double>(n);
  for (std::size_t j = 0; j < k; ++j) {
    if (!(masses[j] >= 0.0)) throw InvalidValueError("allocate: negative stratum mass");
    const double target = nn * masses[j];
    const double base = std::floor(target);
    counts[j] = static_cast<std::size_t>(base);
    frac[j] = target - base;
    assigned += counts[j];
  }
  if (assigned > n) throw InvalidValueError("allocate: masses sum to more than one");
  std::size_t leftover = n - assigned;
  if (leftover > 0) {
    std::vector<std::size_t> by_frac(k);
    std::iota(by_frac.begin(), by_frac.end(), std::size_t{0});
    std::sort(by_frac.begin(), by_frac.end(), [&](std::size_t a, std::size_t b) {
      return frac[a] > frac[b] || (frac[a] == frac[b] && a < b);
    });
    for (std::size_t t = 0; t < leftover && t < k; ++t) ++counts[by_frac[t]];
    leftover -= std::min(leftover, k);
    // More leftovers than strata means the masses were badly undersized.
    if (leftover > 0) throw InvalidValueError("allocate: masses sum to less than one");
  }
  return counts;
}

Allocation allocate(const Partition& part, std::span<const double> probs, std::size_t n) {
  Allocation a;
  a.masses = stratum_masses(part, probs);
  a.counts = allocate_counts(a.masses, n);
  for (std::size_t c : a.counts)
    if (c == 0) ++a.empty;
  return a;
}

Allocation allocate_uniform(const Partition& part, std::size_t n) {
  const std::size_t total_rows = part.order.size();
  if (total_rows == 0) throw InvalidValueError("allocate: empty partition");
  Allocation a;
  a.masses.resize(part.k);
  const double inv = 1.0 / static_cast<double>(total_rows);
  for (std::size_t j = 0; j < part.k; ++j) {
    a.masses[j] = static_cast<double>(part.stratum_size(j)) * inv;
  }
  a.counts = allocate_counts(a.masses, n);
  for (std::size_t c : a.counts)
    if (c == 0) ++a.empty;
  return a;
}

std::vector<std::uint32_t> sort_by_score(std::span<const double> scores) {
  check_scores_finite(scores);
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::uint32_t{0});
  std::sort(order.begin(), order.end(), ScoreLess{scores});
  return order;
}

StratPlan optimal_partition_sorted(std::span<const std::uint32_t> sorted_order,
                                   std::span<const double> scores, std::span<const double> probs,
                                   std::size_t n) {
  const std::size_t total_rows = sorted_order.size();
  if (probs.size() != total_rows || scores.size() != total_rows) {
    throw DimensionError("optimal_partition: size mismatch");
  }
  if (n < 1) throw InvalidValueError("optimal_partition: need at least one stratum");
  if (n > total_rows) throw InvalidValueError("optimal_partition: more strata than rows");

  // Compensated total so cut thresholds are stable against rounding.
  double total = 0.0, comp = 0.0;
  for (std::size_t t = 0; t < total_rows; ++t) {
    const double p = probs[sorted_order[t]];
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InvalidValueError("optimal_partition: probabilities must be finite and nonnegative");
    }
    const double yv = p - comp;
    const double nt = total + yv;
    comp = (nt - total) - yv;
    total = nt;
  }
  if (!(total > 0.0)) throw InvalidValueError("optimal_partition: zero probability mass");
  const double slack = total * 1e-12;

  StratPlan plan;
  plan.part.k = n;
  plan.part.order.assign(sorted_order.begin(), sorted_order.end());
  plan.part.offsets.resize(n + 1);
  plan.part.offsets[0] = 0;

  double walked = 0.0;
  comp = 0.0;
  std::size_t t = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    if (j == n) {
      t = total_rows;  // last stratum absorbs the tail
    } else {
      const double threshold = total * static_cast<double>(j) / static_cast<double>(n);
      const std::size_t strata_left = n - j;
      do {
        const double yv = probs[sorted_order[t]] - comp;
        const double nt = walked + yv;
        comp = (nt - walked) - yv;
        walked = nt;
        ++t;
      } while (walked < threshold - slack && total_rows - t > strata_left);
    }
    plan.part.offsets[j] = t;
  }

  plan.part.boundaries.resize(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    // Sorted input, so the top score of stratum j sits at its right edge.
    plan.part.boundaries[j] = scores[plan.part.order[plan.part.offsets[j + 1] - 1]];
  }
  plan.alloc.masses = stratum_masses(plan.part, probs);
  plan.alloc.counts.assign(n, 1);
  plan.alloc.empty = 0;
  return plan;
}

StratPlan optimal_partition(std::span<const double> scores, std::span<const double> probs,
                            std::size_t n) {
  if (scores.size() != probs.size()) throw DimensionError("optimal_partition: size mismatch");
  const std::vector<std::uint32_t> order = sort_by_score(scores);
  return optimal_partition_sorted(order, scores, probs, n);
}

std::vector<Draw> stratified_draw(const StratPlan& plan, std::span<const double> probs,
                                  std::uint64_t run_seed) {
  const Partition& part = plan.part;
  if (probs.size() != part.order.size()) throw DimensionError("stratified_draw: size mismatch");
  if (plan.alloc.counts.size() != part.k) throw DimensionError("stratified_draw: missing allocation");
  std::vector<Draw> draws(part.k);
  Vector slice;
  for (std::size_t j = 0; j < part.k; ++j) {
    const std::size_t m = plan.alloc.counts[j];
    if (m == 0) continue;
    const auto rows = part.stratum(j);
    slice.resize(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) slice[t] = probs[rows[t]];
    Rng rng(derive_seed(run_seed, stream::kDraw, j + 1));
    draws[j] = draw_with_replacement(rows, slice, m, rng);
  }
  return draws;
}

}  // namespace mvrs
