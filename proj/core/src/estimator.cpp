#include "mvrs/estimator.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mvrs {

namespace {

constexpr double kDivergeNorm = 1e4;
constexpr int kMaxHalvings = 30;

// Step acceptance tolerates summation roundoff, which near the optimum can
// exceed the true objective change and would otherwise reject good steps.
constexpr double kAscentSlack = 1e-12;

void validate_sample(const WeightedSample& s, std::size_t d) {
  if (s.data == nullptr) throw InvalidValueError("fit: sample has no dataset");
  if (s.indices.size() != s.weights.size()) {
    throw DimensionError("fit: index and weight lengths differ");
  }
  if (s.indices.size() < d) {
    throw InvalidValueError("fit: sample needs at least " + std::to_string(d) + " rows");
  }
  for (std::size_t t = 0; t < s.indices.size(); ++t) {
    if (s.indices[t] >= s.data->n_rows) throw InvalidValueError("fit: row index out of range");
    const double w = s.weights[t];
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidValueError("fit: weights must be positive");
  }
}

// Weighted log-likelihood, or -inf when a poisson linear predictor leaves the
// supported range. Used to vet trial steps without throwing.
double objective_or_neginf(const WeightedSample& s, Family f, const Vector& theta) {
  double ll = 0.0;
  for (std::size_t t = 0; t < s.indices.size(); ++t) {
    const auto z = s.data->row(s.indices[t]);
    const double e = glm::eta(z, theta);
    if (f == Family::Poisson && e > kMaxPoissonEta) {
      return -std::numeric_limits<double>::infinity();
    }
    ll += s.weights[t] * glm::loglik_term(s.data->y[s.indices[t]], e, f);
  }
  return ll;
}

// One pass: objective, weighted score and weighted hessian at theta.
void accumulate(const WeightedSample& s, Family f, const Vector& theta, double& ll, Vector& g,
                Matrix& h) {
  const std::size_t d = theta.size();
  ll = 0.0;
  std::fill(g.begin(), g.end(), 0.0);
  std::fill(h.data().begin(), h.data().end(), 0.0);
  for (std::size_t t = 0; t < s.indices.size(); ++t) {
    const std::size_t i = s.indices[t];
    const auto z = s.data->row(i);
    const double w = s.weights[t];
    const double e = glm::eta(z, theta);
    const double y = s.data->y[i];
    ll += w * glm::loglik_term(y, e, f);
    const double resid = w * (y - glm::mean_value(e, f));
    const double neg_v = -w * glm::var_weight(e, f);
    g[0] += resid;
    h(0, 0) += neg_v;
    for (std::size_t j = 0; j < z.size(); ++j) {
      g[j + 1] += resid * z[j];
      const double vz = neg_v * z[j];
      h(0, j + 1) += vz;
      for (std::size_t l = 0; l <= j; ++l) h(j + 1, l + 1) += vz * z[l];
    }
  }
  // Mirror the lower triangle accumulated above.
  for (std::size_t j = 1; j < d; ++j) {
    h(j, 0) = h(0, j);
    for (std::size_t l = j + 1; l < d; ++l) h(j, l) = h(l, j);
  }
}

}  // namespace

FitResult fit(const WeightedSample& sample, Family f, const Vector& init, double tol,
              std::size_t max_iter) {
  const std::size_t d = sample.data ? sample.data->dim() : 0;
  validate_sample(sample, d);
  if (init.size() != d) throw DimensionError("fit: init length must be covariate count plus one");
  for (double v : init)
    if (!std::isfinite(v)) throw InvalidValueError("fit: non-finite init");

  FitResult res;
  res.theta = init;
  res.neg_hessian = Matrix(d, d);

  double ll = objective_or_neginf(sample, f, res.theta);
  if (!std::isfinite(ll)) {
    throw OverflowError("fit: objective not finite at the initial parameter");
  }
  res.objective_trace.push_back(ll);

  Vector g(d);
  Matrix h(d, d);
  accumulate(sample, f, res.theta, ll, g, h);

  for (;;) {
    res.final_grad_norm = max_abs(g);
    if (res.final_grad_norm <= tol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= max_iter) break;
    if (norm2(res.theta) > kDivergeNorm) {
      throw DivergedError("fit: iterate norm exceeds 1e4 (data may be separable)");
    }

    const Vector delta = solve(h, g);  // ascent step is theta - h^{-1} g
    double scale = 1.0;
    bool accepted = false;
    Vector trial(d);
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
      for (std::size_t j = 0; j < d; ++j) trial[j] = res.theta[j] - scale * delta[j];
      const double ll_trial = objective_or_neginf(sample, f, trial);
      if (ll_trial >= ll - kAscentSlack * (1.0 + std::fabs(ll))) {
        res.theta = trial;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;  // numerically stalled; reported as not converged

    ++res.iterations;
    accumulate(sample, f, res.theta, ll, g, h);
    res.objective_trace.push_back(ll);
  }

  res.neg_hessian = h;
  res.neg_hessian *= -1.0;
  return res;
}

FitResult fit(const WeightedSample& sample, Family f) {
  const std::size_t d = sample.data ? sample.data->dim() : 1;
  return fit(sample, f, Vector(d, 0.0));
}

FitResult full_fit(const Dataset& data, Family f, double tol, std::size_t max_iter) {
  WeightedSample all;
  all.data = &data;
  all.indices.resize(data.n_rows);
  std::iota(all.indices.begin(), all.indices.end(), std::uint32_t{0});
  all.weights.assign(data.n_rows, 1.0);
  return fit(all, f, Vector(data.dim(), 0.0), tol, max_iter);
}

}  // namespace mvrs
