#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include <fspde/rng.hpp>

using namespace fspde;

// Known-answer vectors of the reference Philox4x32-10 implementation.
TEST(Philox, KnownAnswers) {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    EXPECT_EQ(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}),
              (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}),
              (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Stream, Reproducible) {
    NoiseStream a(42, 3, 17), b(42, 3, 17);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Stream, DistinctAddresses) {
    std::set<std::uint32_t> first;
    for (std::uint64_t seed : {1u, 2u})
        for (std::uint64_t path : {0u, 1u})
            for (std::uint64_t step : {0u, 1u}) first.insert(NoiseStream(seed, path, step).next_u32());
    EXPECT_EQ(first.size(), 8u);
    // Large path ids stay distinct from small ones.
    EXPECT_NE(NoiseStream(1, 0, 0).next_u32(), NoiseStream(1, std::uint64_t{1} << 32, 0).next_u32());
}

TEST(Stream, UniformOpenInterval) {
    NoiseStream s(5, 0, 0);
    double mean = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        mean += u;
    }
    EXPECT_NEAR(mean / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Stream, NormalMoments) {
    NoiseStream s(9, 1, 2);
    const int n = 400000;
    double m1 = 0.0, m2 = 0.0, m4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        m1 += z, m2 += z * z, m4 += z * z * z * z;
    }
    m1 /= n, m2 /= n, m4 /= n;
    EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(Stream, NeighbouringStepsUncorrelated) {
    const int n = 50000;
    double c = 0.0;
    for (int p = 0; p < n; ++p) {
        NoiseStream a(11, static_cast<std::uint64_t>(p), 0), b(11, static_cast<std::uint64_t>(p), 1);
        c += a.normal() * b.normal();
    }
    EXPECT_NEAR(c / n, 0.0, 4.0 / std::sqrt(n));
}
