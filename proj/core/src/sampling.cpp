#include "mvrs/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvrs/fastmap.hpp"

namespace mvrs {

SamplingPlan uniform_probs(std::size_t n_rows) {
  if (n_rows == 0) throw InvalidValueError("uniform_probs: empty dataset");
  SamplingPlan plan;
  plan.scheme = Scheme::Uniform;
  plan.probs.assign(n_rows, 1.0 / static_cast<double>(n_rows));
  return plan;
}

SamplingPlan optimal_probs(const Dataset& data, Family f, const FitResult& pilot_fit,
                           const WeightedSample& pilot_rows, double min_prob_floor) {
  const std::size_t n = data.n_rows;
  const std::size_t d = data.dim();
  if (n == 0) throw InvalidValueError("optimal_probs: empty dataset");
  if (pilot_fit.theta.size() != d) throw DimensionError("optimal_probs: pilot dimension mismatch");
  if (pilot_rows.size() == 0) throw InvalidValueError("optimal_probs: empty pilot sample");
  if (min_prob_floor < 0.0 || min_prob_floor >= 1.0) {
    throw ConfigError("optimal_probs: min_prob_floor must be in [0,1)");
  }

  // m0 = [n0^{-1} sum pilot hessians]^{-1}; pilot_fit stores the negated sum.
  const double n0 = static_cast<double>(pilot_rows.size());
  Matrix avg = pilot_fit.neg_hessian;
  avg *= -1.0 / n0;
  const Matrix m0 = inverse(avg);

  SamplingPlan plan;
  plan.scheme = Scheme::Optimal;
  plan.pilot_theta = pilot_fit.theta;
  plan.probs.resize(n);

  // Score of row i is (y - mu) * (1, z), so the rescaled norm factors as
  // |y - mu| * ||m0 (1, z)||. Blocked three-step evaluation: dots and the
  // squared norm under strict semantics, vectorized mean/sqrt maps on the
  // cache-resident block, then the combine.
  constexpr std::size_t kBlock = 4096;
  const std::size_t p = data.n_cov;
  const double* x = data.x.data();
  double ebuf[kBlock], qbuf[kBlock];
  double total = 0.0;
  for (std::size_t base = 0; base < n; base += kBlock) {
    const std::size_t len = std::min(kBlock, n - base);
    for (std::size_t t = 0; t < len; ++t) {
      const double* z = x + (base + t) * p;
      double e = pilot_fit.theta[0];
      for (std::size_t j = 0; j < p; ++j) e += pilot_fit.theta[j + 1] * z[j];
      if (f == Family::Poisson && e > kMaxPoissonEta) {
        throw OverflowError("optimal_probs: poisson linear predictor exceeds 700 at row " +
                            std::to_string(base + t + 1));
      }
      double q = 0.0;
      for (std::size_t r = 0; r < d; ++r) {
        double acc = m0(r, 0);
        for (std::size_t c = 0; c < p; ++c) acc += m0(r, c + 1) * z[c];
        q += acc * acc;
      }
      ebuf[t] = e;
      qbuf[t] = q;
    }
    if (f == Family::Logistic) {
      fastmap::logistic_inplace(ebuf, len);
    } else {
      fastmap::exp_inplace(ebuf, len);
    }
    fastmap::sqrt_inplace(qbuf, len);
    for (std::size_t t = 0; t < len; ++t) {
      const double s = std::abs(data.y[base + t] - ebuf[t]) * qbuf[t];
      if (!std::isfinite(s)) {
        throw InvalidValueError("optimal_probs: non-finite score at row " +
                                std::to_string(base + t + 1));
      }
      plan.probs[base + t] = s;
      total += s;
    }
  }
  if (!(total > 0.0)) {
    throw InvalidValueError("optimal_probs: all scores are zero, probabilities undefined");
  }
  const double unif = min_prob_floor / static_cast<double>(n);
  const double keep = 1.0 - min_prob_floor;
  for (double& p : plan.probs) p = keep * (p / total) + unif;
  return plan;
}

Draw draw_with_replacement(std::span<const std::uint32_t> rows, std::span<const double> probs,
                           std::size_t m, Rng& rng) {
  if (rows.size() != probs.size()) throw DimensionError("draw: slice and probability sizes differ");
  Draw out;
  if (m == 0) return out;
  if (rows.empty()) throw InvalidValueError("draw: cannot sample from an empty slice");

  Vector cum(probs.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    const double p = probs[t];
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InvalidValueError("draw: probabilities must be finite and nonnegative");
    }
    acc += p;
    cum[t] = acc;
  }
  if (!(acc > 0.0)) throw InvalidValueError("draw: total probability mass is zero");

  out.indices.resize(m);
  out.realized_probs.resize(m);
  for (std::size_t t = 0; t < m; ++t) {
    const double u = rng.next_double() * acc;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    std::size_t pos = static_cast<std::size_t>(it - cum.begin());
    if (pos >= cum.size()) pos = cum.size() - 1;
    out.indices[t] = rows[pos];
    out.realized_probs[t] = probs[pos];
  }
  return out;
}

}  // namespace mvrs
