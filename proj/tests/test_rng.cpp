#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "mvrs/rng.hpp"

using mvrs::Rng;

TEST_SUITE("rng") {

TEST_CASE("raw stream matches the published splitmix64 vectors") {
  {
    Rng r(0);
    CHECK(r.next_u64() == 0xe220a8397b1dcdafULL);
    CHECK(r.next_u64() == 0x6e789e6aa1b965f4ULL);
    CHECK(r.next_u64() == 0x06c45d188009454fULL);
  }
  {
    Rng r(1234567);
    CHECK(r.next_u64() == 0x599ed017fb08fc85ULL);
    CHECK(r.next_u64() == 0x2c73f08458540fa5ULL);
    CHECK(r.next_u64() == 0x883ebce5a3f27c77ULL);
  }
  {
    Rng r(0x123456789abcdefULL);
    CHECK(r.next_u64() == 0x157a3807a48faa9dULL);
    CHECK(r.next_u64() == 0xd573529b34a1d093ULL);
    CHECK(r.next_u64() == 0x2f90b72e996dccbeULL);
  }
}

TEST_CASE("next_double uses the top 53 bits") {
  Rng raw(42), conv(42);
  for (int i = 0; i < 100; ++i) {
    const double expect = static_cast<double>(raw.next_u64() >> 11) * 0x1.0p-53;
    const double got = conv.next_double();
    CHECK(got == expect);
    CHECK(got >= 0.0);
    CHECK(got < 1.0);
  }
}

TEST_CASE("next_below is in range and close to uniform") {
  Rng r(7);
  const std::uint64_t bound = 7;
  std::vector<int> counts(bound, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t v = r.next_below(bound);
    REQUIRE(v < bound);
    ++counts[v];
  }
  for (std::uint64_t v = 0; v < bound; ++v) {
    CHECK(std::abs(counts[v] - n / 7) < 500);  // ~5 sigma
  }
  CHECK(r.next_below(1) == 0);
}

TEST_CASE("normal and exponential moments") {
  Rng r(2024);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = r.next_normal();
    sum += v;
    sumsq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sumsq / n - 1.0) < 0.03);

  sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = r.next_exponential();
    REQUIRE(v >= 0.0);
    sum += v;
  }
  CHECK(std::abs(sum / n - 1.0) < 0.02);
}

TEST_CASE("poisson moments in both sampler regimes") {
  const int n = 200000;
  for (double lambda : {3.5, 40.0}) {  // direct inversion below 10, PTRS above
    Rng r(lambda < 10 ? 11 : 13);
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const long v = r.next_poisson(lambda);
      REQUIRE(v >= 0);
      sum += static_cast<double>(v);
      sumsq += static_cast<double>(v) * static_cast<double>(v);
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean - lambda) < (lambda < 10 ? 0.05 : 0.15));
    CHECK(std::abs(var - lambda) < (lambda < 10 ? 0.15 : 1.0));
  }
}

TEST_CASE("stream derivation separates labels and indices") {
  const std::uint64_t base = 9001;
  CHECK(mvrs::derive_seed(base, mvrs::stream::kPilot) ==
        mvrs::derive_seed(base, mvrs::stream::kPilot));
  CHECK(mvrs::derive_seed(base, mvrs::stream::kPilot) !=
        mvrs::derive_seed(base, mvrs::stream::kDraw));
  CHECK(mvrs::derive_seed(base, mvrs::stream::kDraw, 1) !=
        mvrs::derive_seed(base, mvrs::stream::kDraw, 2));
  CHECK(mvrs::derive_seed(base, mvrs::stream::kDraw, 1) !=
        mvrs::derive_seed(base + 1, mvrs::stream::kDraw, 1));
  // mix64(x) is exactly one generator step from state x.
  CHECK(mvrs::mix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(mvrs::mix64(1234567) == 0x599ed017fb08fc85ULL);
}

TEST_CASE("identical seeds replay identically") {
  Rng a(555), b(555);
  for (int i = 0; i < 50; ++i) {
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.next_normal() == b.next_normal());
    CHECK(a.next_poisson(12.0) == b.next_poisson(12.0));
  }
}

}  // TEST_SUITE
