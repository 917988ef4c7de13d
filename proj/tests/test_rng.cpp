#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "gist/rng.hpp"
#include "oracles.hpp"

using gist::Philox4x32;
using gist::Rng;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                        {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  const auto out = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                        {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(Rng, SameStreamReproduces) {
  Rng a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.normal(), b.normal());
}

TEST(Rng, StreamsDoNotCollide) {
  const int per_stream = 250000;
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(4 * per_stream);
  for (std::uint64_t s = 0; s < 4; ++s) {
    Rng r(2024, s);
    for (int i = 0; i < per_stream; ++i) seen.insert(r());
  }
  // 10^6 64-bit words; a single birthday collision has probability ~3e-8
  EXPECT_EQ(seen.size(), 4u * per_stream);
}

TEST(Rng, UniformInOpenInterval) {
  Rng r(1, 0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, UniformIndexIsUniform) {
  Rng r(3, 0);
  const int k = 7, n = 70000;
  std::vector<double> counts(k, 0.0), expected(k, static_cast<double>(n) / k);
  for (int i = 0; i < n; ++i) counts[r.uniform_index(k)] += 1.0;
  EXPECT_GT(oracle::chi_square_p_value(counts, expected), 1e-3);
}

TEST(Rng, NormalMoments) {
  Rng r(5, 1);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s1 += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s1 / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Rng, ExponentialMean) {
  Rng r(9, 0);
  const int n = 100000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.exponential(2.0);
  EXPECT_NEAR(s / n, 0.5, 4.0 * 0.5 / std::sqrt(n));
}
