#pragma once

// GLM building blocks: log-likelihood, score and hessian contributions of a
// single observation, for logistic and poisson regression with a canonical
// link. An intercept column is implicit: the effective regressor is
// (1, z_1, ..., z_p), so parameters have length p + 1.
//
// Orientation is maximization throughout: hessians are negative semidefinite.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mvrs/errors.hpp"
#include "mvrs/linalg.hpp"

namespace mvrs {

enum class Family { Logistic, Poisson };

const char* family_name(Family f);
Family family_from_name(const std::string& name);

// Linear predictors above this are rejected for poisson models; exp() would
// be astronomically large well before the double limit.
inline constexpr double kMaxPoissonEta = 700.0;

struct Observation {
  std::span<const double> z;  // covariates, without the intercept
  double y;
};

struct Dataset {
  std::size_t n_rows = 0;
  std::size_t n_cov = 0;           // p
  std::vector<double> x;           // row-major n_rows * n_cov
  std::vector<double> y;

  std::size_t dim() const { return n_cov + 1; }
  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * n_cov, n_cov};
  }
  Observation obs(std::size_t i) const { return {row(i), y[i]}; }

  // Shape and finiteness plus the family's response domain ({0,1} or
  // nonnegative integers). Throws InvalidValueError naming the first bad row.
  void validate(Family f) const;
};

double loglik(const Observation& o, std::span<const double> theta, Family f);
Vector score(const Observation& o, std::span<const double> theta, Family f);
Matrix hessian(const Observation& o, std::span<const double> theta, Family f);

// Unchecked kernels for hot loops over pre-validated data.
namespace glm {

inline double eta(std::span<const double> z, std::span<const double> theta) {
  double acc = theta[0];
  for (std::size_t j = 0; j < z.size(); ++j) acc += theta[j + 1] * z[j];
  return acc;
}

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double log1pexp(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline double mean_value(double eta_i, Family f) {
  return f == Family::Logistic ? sigmoid(eta_i) : std::exp(eta_i);
}

// Conditional variance of the response given eta; also the hessian weight.
inline double var_weight(double eta_i, Family f) {
  if (f == Family::Logistic) {
    const double m = sigmoid(eta_i);
    return m * (1.0 - m);
  }
  return std::exp(eta_i);
}

inline double loglik_term(double y, double eta_i, Family f) {
  return f == Family::Logistic ? y * eta_i - log1pexp(eta_i)
                               : y * eta_i - std::exp(eta_i);
}

}  // namespace glm

}  // namespace mvrs
