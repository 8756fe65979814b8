// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "buffersim/linalg.hpp"

namespace buffersim {

//---------------------------------------------------------------------------//
/*!
 * Philox4x32-10 counter-based bijection (Salmon et al., SC'11).
 *
 * Output is a pure function of (counter, key), so any stream position can be
 * evaluated directly without advancing shared state.
 */
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter generate(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            ctr = single_round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter single_round(const Counter& c, const Key& k) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

// Uniform on the open interval (0, 1) from the top 52 bits. With 53 bits the
// half-step offset would round the largest value up to exactly 1.
constexpr double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

//---------------------------------------------------------------------------//
/*!
 * Per-path source of independent standard normal 4-vectors.
 *
 * Draw (seed, path, step, factor) is addressed directly: the Philox key is the
 * master seed and the counter is (step, block, path_lo, path_hi). Two blocks
 * per step give eight 32-bit words, i.e. four 52-bit uniforms, turned into
 * four normals by Box-Muller. Path k therefore sees the same shocks no matter
 * which worker simulates it or in which order.
 */
class ShockStream {
public:
    ShockStream(std::uint64_t master_seed, std::uint64_t path_index)
        : key_{static_cast<std::uint32_t>(master_seed),
               static_cast<std::uint32_t>(master_seed >> 32)},
          path_lo_(static_cast<std::uint32_t>(path_index)),
          path_hi_(static_cast<std::uint32_t>(path_index >> 32)) {}

    /// Four i.i.d. N(0, 1) draws for the given step, ordered (S, nu, r, e).
    Vec4 operator()(std::uint64_t step) const {
        const auto step32 = static_cast<std::uint32_t>(step);
        const auto a = Philox4x32::generate({step32, 0u, path_lo_, path_hi_}, key_);
        const auto b = Philox4x32::generate({step32, 1u, path_lo_, path_hi_}, key_);
        Vec4 z{};
        box_muller(to_open_unit(a[0], a[1]), to_open_unit(a[2], a[3]), z[0], z[1]);
        box_muller(to_open_unit(b[0], b[1]), to_open_unit(b[2], b[3]), z[2], z[3]);
        return z;
    }

private:
    static void box_muller(double u1, double u2, double& z0, double& z1) {
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        z0 = radius * std::cos(angle);
        z1 = radius * std::sin(angle);
    }

    Philox4x32::Key key_;
    std::uint32_t path_lo_;
    std::uint32_t path_hi_;
};

}  // namespace buffersim
