#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "zzcw/parallel.hpp"
#include "zzcw/rng.hpp"

using namespace zzcw;

// Random123 known-answer vectors for philox4x32-10.
TEST(Philox, KnownAnswerZero) {
  const auto out = philox::block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (philox::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = philox::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (philox::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = philox::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (philox::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(StreamRng, SameAddressSameStream) {
  StreamRng a(42, 3, Purpose::Chain), b(42, 3, Purpose::Chain);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(StreamRng, DistinctAddressesDiffer) {
  StreamRng base(42, 3, Purpose::Chain);
  StreamRng other_replica(42, 4, Purpose::Chain);
  StreamRng other_purpose(42, 3, Purpose::ZigZag);
  StreamRng other_seed(43, 3, Purpose::Chain);
  const auto x = base();
  EXPECT_NE(x, other_replica());
  EXPECT_NE(x, other_purpose());
  EXPECT_NE(x, other_seed());
}

TEST(StreamRng, FirstWordIsLowHalfOfBlock) {
  StreamRng r(0, 0, Purpose::Init);
  const auto blk = philox::block({0, 0, 0, static_cast<std::uint32_t>(Purpose::Init)}, {0, 0});
  EXPECT_EQ(r(), (std::uint64_t{blk[1]} << 32) | blk[0]);
  EXPECT_EQ(r(), (std::uint64_t{blk[3]} << 32) | blk[2]);
  EXPECT_EQ(r.blocks_used(), 1u);
}

TEST(StreamRng, UniformMoments) {
  StreamRng r(7, 0, Purpose::Test);
  const int m = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < m; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  const double mean = s / m, var = s2 / m - mean * mean;
  EXPECT_NEAR(mean, 0.5, 4 * std::sqrt(1.0 / 12 / m));
  EXPECT_NEAR(var, 1.0 / 12, 0.002);
}

TEST(StreamRng, ExponentialAndNormal) {
  StreamRng r(9, 1, Purpose::Test);
  const int m = 200000;
  double se = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < m; ++i) {
    const double e = r.exponential();
    ASSERT_GT(e, 0.0);
    ASSERT_TRUE(std::isfinite(e));
    se += e;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(se / m, 1.0, 4.0 / std::sqrt(m));
  EXPECT_NEAR(sn / m, 0.0, 4.0 / std::sqrt(m));
  EXPECT_NEAR(sn2 / m, 1.0, 0.02);
}

TEST(StreamRng, SignIsBalanced) {
  StreamRng r(11, 0, Purpose::Test);
  int plus = 0;
  const int m = 100000;
  for (int i = 0; i < m; ++i) plus += r.sign() > 0;
  EXPECT_NEAR(plus, m / 2, 4 * std::sqrt(m * 0.25));
}

TEST(Parallel, ResultsIndependentOfThreadCount) {
  auto fill = [](unsigned threads) {
    std::vector<std::uint64_t> out(64);
    parallel_for_index(out.size(), threads, [&](std::size_t i) {
      StreamRng r(5, static_cast<std::uint32_t>(i), Purpose::Test);
      std::uint64_t acc = 0;
      for (int k = 0; k < 100; ++k) acc ^= r();
      out[i] = acc;
    });
    return out;
  };
  EXPECT_EQ(fill(1), fill(4));
}

TEST(Parallel, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for_index(10, 3,
                                  [](std::size_t i) {
                                    if (i == 7) throw std::runtime_error("boom");
                                  }),
               std::runtime_error);
}
