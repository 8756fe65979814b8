#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "buffersim/rng.hpp"

namespace buffersim {
namespace {

// Known-answer vectors published with the reference Random123 implementation.
TEST(Philox, KnownAnswerZero) {
    const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out[0], 0x6627e8d5u);
    EXPECT_EQ(out[1], 0xe169c58du);
    EXPECT_EQ(out[2], 0xbc57ac4cu);
    EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
    const auto out = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                          {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out[0], 0x408f276du);
    EXPECT_EQ(out[1], 0x41c83b0eu);
    EXPECT_EQ(out[2], 0xa20bc7c6u);
    EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPiDigits) {
    const auto out = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                          {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(out[0], 0xd16cfe09u);
    EXPECT_EQ(out[1], 0x94fdccebu);
    EXPECT_EQ(out[2], 0x5001e420u);
    EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(Philox, UsableAtCompileTime) {
    constexpr auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
    static_assert(out[0] == 0x6627e8d5u);
    SUCCEED();
}

TEST(OpenUnit, StaysInsideInterval) {
    EXPECT_GT(to_open_unit(0, 0), 0.0);
    EXPECT_LT(to_open_unit(0xffffffffu, 0xffffffffu), 1.0);
    EXPECT_DOUBLE_EQ(to_open_unit(0x80000000u, 0), 0.5 + 0.5 * 0x1.0p-52);
    EXPECT_DOUBLE_EQ(to_open_unit(0xffffffffu, 0xffffffffu), 1.0 - 0x1.0p-53);
}

TEST(ShockStream, RandomAccessIsPure) {
    const ShockStream a(42, 7);
    const ShockStream b(42, 7);
    // Visit in different orders; every step must come out identical.
    const Vec4 late = a(500);
    for (std::uint64_t k = 0; k < 10; ++k) EXPECT_EQ(a(k), b(k));
    EXPECT_EQ(b(500), late);
}

TEST(ShockStream, DistinctSeedsPathsAndSteps) {
    const ShockStream base(42, 0);
    EXPECT_NE(base(0), ShockStream(43, 0)(0));
    EXPECT_NE(base(0), ShockStream(42, 1)(0));
    EXPECT_NE(base(0), base(1));
    // High half of the path index is part of the counter.
    EXPECT_NE(ShockStream(42, 1)(0), ShockStream(42, (std::uint64_t{1} << 32) | 1)(0));
}

TEST(ShockStream, StandardNormalMoments) {
    const std::size_t n = 50000;
    std::array<double, 4> sum{}, sum_sq{};
    double cross01 = 0.0, cross23 = 0.0;
    std::size_t tail = 0;
    for (std::size_t p = 0; p < 10; ++p) {
        const ShockStream s(2024, p);
        for (std::size_t k = 0; k < n / 10; ++k) {
            const Vec4 z = s(k);
            for (std::size_t i = 0; i < 4; ++i) {
                sum[i] += z[i];
                sum_sq[i] += z[i] * z[i];
                if (std::abs(z[i]) > 1.959963984540054) ++tail;
            }
            cross01 += z[0] * z[1];
            cross23 += z[2] * z[3];
        }
    }
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(sum[i] / dn, 0.0, 4.0 / std::sqrt(dn));
        EXPECT_NEAR(sum_sq[i] / dn, 1.0, 4.0 * std::sqrt(2.0 / dn));
    }
    EXPECT_NEAR(cross01 / dn, 0.0, 4.0 / std::sqrt(dn));
    EXPECT_NEAR(cross23 / dn, 0.0, 4.0 / std::sqrt(dn));
    // Two-sided 5% tail over 4n draws.
    const double frac = static_cast<double>(tail) / (4.0 * dn);
    EXPECT_NEAR(frac, 0.05, 4.0 * std::sqrt(0.05 * 0.95 / (4.0 * dn)));
}

}  // namespace
}  // namespace buffersim
