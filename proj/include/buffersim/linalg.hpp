// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>

namespace buffersim {

// Fixed 4-factor vectors and matrices for the (S, nu, r, e) state.
using Vec4 = std::array<double, 4>;
using Mat4 = std::array<Vec4, 4>;

inline constexpr std::size_t kFactors = 4;

// Factor indices.
inline constexpr std::size_t kEquity = 0;
inline constexpr std::size_t kVariance = 1;
inline constexpr std::size_t kRate = 2;
inline constexpr std::size_t kWage = 3;

constexpr Mat4 identity4() {
    Mat4 m{};
    for (std::size_t i = 0; i < kFactors; ++i) m[i][i] = 1.0;
    return m;
}

constexpr Mat4 transpose(const Mat4& a) {
    Mat4 t{};
    for (std::size_t i = 0; i < kFactors; ++i)
        for (std::size_t j = 0; j < kFactors; ++j) t[j][i] = a[i][j];
    return t;
}

constexpr Mat4 multiply(const Mat4& a, const Mat4& b) {
    Mat4 c{};
    for (std::size_t i = 0; i < kFactors; ++i)
        for (std::size_t j = 0; j < kFactors; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < kFactors; ++k) s += a[i][k] * b[k][j];
            c[i][j] = s;
        }
    return c;
}

constexpr Vec4 multiply(const Mat4& a, const Vec4& x) {
    Vec4 y{};
    for (std::size_t i = 0; i < kFactors; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < kFactors; ++k) s += a[i][k] * x[k];
        y[i] = s;
    }
    return y;
}

constexpr double dot(const Vec4& a, const Vec4& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < kFactors; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace buffersim
