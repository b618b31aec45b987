#pragma once

#include <stdexcept>
#include <string>

namespace mvrs {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input shapes disagree (parameter length vs covariate count, etc).
struct DimensionError : Error {
  using Error::Error;
};

// NaN/Inf or otherwise unusable numeric input.
struct InvalidValueError : Error {
  using Error::Error;
};

// Linear predictor too large for a poisson rate (exp would overflow).
struct OverflowError : Error {
  using Error::Error;
};

struct SingularHessianError : Error {
  using Error::Error;
};

// Iterate left the trust region (separable logistic data and the like).
struct DivergedError : Error {
  using Error::Error;
};

// Variance estimate undefined: every stratum has at most one draw.
struct DegenerateVarianceError : Error {
  using Error::Error;
};

// Bad user-facing configuration (CLI flags, sim config files).
struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace mvrs
