#pragma once

// Elementwise transcendental maps over contiguous buffers, compiled in their
// own translation unit with value-unsafe optimizations so the compiler can use
// the vectorized libm routines. Only use these for plain maps: the callers
// keep every reduction, comparison against Inf/NaN, and error check in
// normally-compiled code. Overflow still saturates to Inf as usual.

#include <cstddef>

namespace mvrs::fastmap {

// v[i] <- exp(v[i])
void exp_inplace(double* v, std::size_t n);

// v[i] <- 1 / (1 + exp(-v[i]))
void logistic_inplace(double* v, std::size_t n);

// v[i] <- sqrt(v[i]); caller guarantees v[i] >= 0
void sqrt_inplace(double* v, std::size_t n);

}  // namespace mvrs::fastmap
