// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "buffersim/linalg.hpp"

namespace buffersim {

/// Raised when a correlation matrix fails the Cholesky pivot test.
class NotPositiveDefinite : public std::domain_error {
public:
    NotPositiveDefinite(std::size_t pivot, double value)
        : std::domain_error(message(pivot, value)), pivot_(pivot), value_(value) {}

    std::size_t pivot() const noexcept { return pivot_; }
    double value() const noexcept { return value_; }

private:
    static std::string message(std::size_t pivot, double value) {
        std::ostringstream os;
        os << "correlation matrix is not positive definite: pivot " << pivot
           << " has value " << value;
        return os.str();
    }

    std::size_t pivot_;
    double value_;
};

/// Lower-triangular L with L * transpose(L) == gamma.
///
/// Expects a symmetric matrix with unit diagonal and off-diagonal entries in
/// [-1, 1]; anything else is rejected with std::invalid_argument. A
/// non-positive pivot raises NotPositiveDefinite naming the pivot index.
inline Mat4 cholesky_factor(const Mat4& gamma) {
    for (std::size_t i = 0; i < kFactors; ++i) {
        if (gamma[i][i] != 1.0)
            throw std::invalid_argument("correlation matrix must have unit diagonal");
        for (std::size_t j = 0; j < kFactors; ++j) {
            if (gamma[i][j] != gamma[j][i])
                throw std::invalid_argument("correlation matrix must be symmetric");
            if (!(std::abs(gamma[i][j]) <= 1.0))
                throw std::invalid_argument("correlation entries must lie in [-1, 1]");
        }
    }

    Mat4 l{};
    for (std::size_t j = 0; j < kFactors; ++j) {
        double pivot = gamma[j][j];
        for (std::size_t k = 0; k < j; ++k) pivot -= l[j][k] * l[j][k];
        if (!(pivot > 0.0)) throw NotPositiveDefinite(j, pivot);
        l[j][j] = std::sqrt(pivot);
        for (std::size_t i = j + 1; i < kFactors; ++i) {
            double s = gamma[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            l[i][j] = s / l[j][j];
        }
    }
    return l;
}

/// dB = L z, mapping independent scaled normals onto the correlated drivers.
inline Vec4 correlate_increments(const Mat4& chol, const Vec4& z) {
    Vec4 db{};
    for (std::size_t i = 0; i < kFactors; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k <= i; ++k) s += chol[i][k] * z[k];
        db[i] = s;
    }
    return db;
}

/// Pairwise correlations of the four drivers together with their factor.
class CorrelationStructure {
public:
    struct Pairwise {
        double s_nu = 0.0;
        double s_r = 0.0;
        double s_e = 0.0;
        double nu_r = 0.0;
        double nu_e = 0.0;
        double r_e = 0.0;

        bool operator==(const Pairwise&) const = default;
    };

    CorrelationStructure() : CorrelationStructure(Pairwise{}) {}

    explicit CorrelationStructure(const Pairwise& p) : pairwise_(p) {
        gamma_ = identity4();
        auto set = [this](std::size_t i, std::size_t j, double v) {
            gamma_[i][j] = v;
            gamma_[j][i] = v;
        };
        set(kEquity, kVariance, p.s_nu);
        set(kEquity, kRate, p.s_r);
        set(kEquity, kWage, p.s_e);
        set(kVariance, kRate, p.nu_r);
        set(kVariance, kWage, p.nu_e);
        set(kRate, kWage, p.r_e);
        chol_ = cholesky_factor(gamma_);
    }

    const Pairwise& pairwise() const noexcept { return pairwise_; }
    const Mat4& gamma() const noexcept { return gamma_; }
    const Mat4& chol() const noexcept { return chol_; }

private:
    Pairwise pairwise_;
    Mat4 gamma_{};
    Mat4 chol_{};
};

}  // namespace buffersim
