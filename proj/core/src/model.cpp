#include "mvrs/model.hpp"

#include <string>

namespace mvrs {

const char* family_name(Family f) {
  return f == Family::Logistic ? "logistic" : "poisson";
}

Family family_from_name(const std::string& name) {
  if (name == "logistic") return Family::Logistic;
  if (name == "poisson") return Family::Poisson;
  throw ConfigError("unknown family '" + name + "' (expected logistic or poisson)");
}

void Dataset::validate(Family f) const {
  if (x.size() != n_rows * n_cov) throw DimensionError("dataset: covariate buffer has wrong size");
  if (y.size() != n_rows) throw DimensionError("dataset: response length does not match row count");
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < n_cov; ++j) {
      if (!std::isfinite(x[i * n_cov + j])) {
        throw InvalidValueError("dataset: non-finite covariate at row " + std::to_string(i + 1));
      }
    }
    const double yi = y[i];
    if (!std::isfinite(yi)) {
      throw InvalidValueError("dataset: non-finite response at row " + std::to_string(i + 1));
    }
    if (f == Family::Logistic && yi != 0.0 && yi != 1.0) {
      throw InvalidValueError("dataset: logistic response must be 0 or 1 at row " +
                              std::to_string(i + 1));
    }
    if (f == Family::Poisson && (yi < 0.0 || yi != std::floor(yi))) {
      throw InvalidValueError("dataset: poisson response must be a nonnegative integer at row " +
                              std::to_string(i + 1));
    }
  }
}

namespace {

void check_inputs(const Observation& o, std::span<const double> theta) {
  if (theta.size() != o.z.size() + 1) {
    throw DimensionError("glm: parameter length must be covariate count plus one");
  }
  for (double v : o.z)
    if (!std::isfinite(v)) throw InvalidValueError("glm: non-finite covariate");
  for (double v : theta)
    if (!std::isfinite(v)) throw InvalidValueError("glm: non-finite parameter");
  if (!std::isfinite(o.y)) throw InvalidValueError("glm: non-finite response");
}

double checked_eta(const Observation& o, std::span<const double> theta, Family f) {
  const double e = glm::eta(o.z, theta);
  if (f == Family::Poisson && e > kMaxPoissonEta) {
    throw OverflowError("glm: poisson linear predictor exceeds 700");
  }
  return e;
}

}  // namespace

double loglik(const Observation& o, std::span<const double> theta, Family f) {
  check_inputs(o, theta);
  return glm::loglik_term(o.y, checked_eta(o, theta, f), f);
}

Vector score(const Observation& o, std::span<const double> theta, Family f) {
  check_inputs(o, theta);
  const double resid = o.y - glm::mean_value(checked_eta(o, theta, f), f);
  Vector g(theta.size());
  g[0] = resid;
  for (std::size_t j = 0; j < o.z.size(); ++j) g[j + 1] = resid * o.z[j];
  return g;
}

Matrix hessian(const Observation& o, std::span<const double> theta, Family f) {
  check_inputs(o, theta);
  const double w = glm::var_weight(checked_eta(o, theta, f), f);
  const std::size_t d = theta.size();
  Matrix h(d, d);
  // -w * xt xt^T with xt = (1, z).
  h(0, 0) = -w;
  for (std::size_t j = 0; j < o.z.size(); ++j) {
    h(0, j + 1) = -w * o.z[j];
    h(j + 1, 0) = h(0, j + 1);
    for (std::size_t l = 0; l <= j; ++l) {
      h(j + 1, l + 1) = -w * o.z[j] * o.z[l];
      h(l + 1, j + 1) = h(j + 1, l + 1);
    }
  }
  return h;
}

}  // namespace mvrs
