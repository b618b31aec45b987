// Compiled with -ffast-math (see CMakeLists) so these loops lower to the
// vectorized libm kernels. Keep this file free of reductions and of any logic
// that distinguishes Inf or NaN; callers re-check values under strict
// semantics.

#include "mvrs/fastmap.hpp"

#include <cmath>

namespace mvrs::fastmap {

void exp_inplace(double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(v[i]);
}

void logistic_inplace(double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 / (1.0 + std::exp(-v[i]));
}

void sqrt_inplace(double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = std::sqrt(v[i]);
}

}  // namespace mvrs::fastmap
