#pragma once

// Counter-based 64-bit generator (SplitMix64) plus labeled stream derivation.
//
// Every random decision in the library draws from a stream addressed by fixed
// labels, never from a shared global sequence:
//
//   run seed r
//     derive(r, kPilot)            pilot subsample indices
//     derive(r, kDraw, j)          with-replacement draws inside stratum j
//   experiment seed s
//     derive(s, kCovariates)       synthetic covariates
//     derive(s, kResponse)         synthetic responses
//     derive(s, kReplicate, t)     run seed for replicate t
//
// Because streams are independent functions of (seed, labels), adding a
// method or skipping a step never shifts anyone else's draws, and methods
// compared within one replicate share pilot and per-stratum streams.

#include <cstdint>

namespace mvrs {

namespace stream {
inline constexpr std::uint64_t kPilot = 0x706c6f74u;        // "plot"
inline constexpr std::uint64_t kDraw = 0x64726177u;         // "draw"
inline constexpr std::uint64_t kCovariates = 0x636f7673u;   // "covs"
inline constexpr std::uint64_t kResponse = 0x72657370u;     // "resp"
inline constexpr std::uint64_t kReplicate = 0x7265706cu;    // "repl"
}  // namespace stream

std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t label);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t label, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double next_double();

  // Uniform integer on [0, bound), rejection-corrected so every value is
  // exactly equally likely.
  std::uint64_t next_below(std::uint64_t bound);

  double next_normal();
  double next_exponential();
  long next_poisson(double lambda);

 private:
  std::uint64_t state_;
  double spare_normal_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace mvrs
