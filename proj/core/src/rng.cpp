#include "mvrs/rng.hpp"

#include <cmath>

#include "mvrs/errors.hpp"

namespace mvrs {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;
constexpr double kTwoPi = 6.283185307179586476925287;
}  // namespace

// Finalizer from the SplitMix64 reference implementation.
std::uint64_t mix64(std::uint64_t x) {
  x += kGamma;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t label) {
  return mix64(mix64(base) ^ label);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t label, std::uint64_t index) {
  return mix64(derive_seed(base, label) ^ mix64(index));
}

std::uint64_t Rng::next_u64() {
  state_ += kGamma;
  std::uint64_t x = state_;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
  if (bound == 0) throw InvalidValueError("next_below: bound must be positive");
  // Classic rejection: discard the biased tail of the 2^64 range.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x > limit);
  return x % bound;
}

double Rng::next_normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_normal_;
  }
  // Box-Muller on (0,1] x [0,1).
  double u1 = 1.0 - next_double();
  double u2 = next_double();
  double r = std::sqrt(-2.0 * std::log(u1));
  spare_normal_ = r * std::sin(kTwoPi * u2);
  have_spare_ = true;
  return r * std::cos(kTwoPi * u2);
}

double Rng::next_exponential() {
  return -std::log1p(-next_double());
}

long Rng::next_poisson(double lambda) {
  if (!(lambda >= 0.0)) throw InvalidValueError("next_poisson: lambda must be nonnegative");
  if (lambda == 0.0) return 0;
  if (lambda < 10.0) {
    // Knuth's product method.
    const double limit = std::exp(-lambda);
    long k = 0;
    double prod = next_double();
    while (prod > limit) {
      ++k;
      prod *= next_double();
    }
    return k;
  }
  // Hormann's PTRS transformed rejection, standard for large rates.
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double u = next_double() - 0.5;
    double v = next_double();
    double us = 0.5 - std::abs(u);
    long k = static_cast<long>(std::floor((2.0 * a / us + b) * u + lambda + 0.43));
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        static_cast<double>(k) * loglam - lambda - std::lgamma(static_cast<double>(k) + 1.0)) {
      return k;
    }
  }
}

}  // namespace mvrs
