// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "buffersim/correlation.hpp"
#include "buffersim/linalg.hpp"

namespace buffersim {

/// Floor applied to the variance inside the risk premium denominator.
inline constexpr double kVarianceFloor = 1e-12;

//---------------------------------------------------------------------------//
/*!
 * Heston equity, Vasicek short rate and lognormal average wage.
 *
 * Rates are annual, time is in years, wages in thousands per year. The equity
 * drift is the constant r0 + equity_premium.
 */
struct MarketParams {
    double s0 = 1.0;
    double equity_premium = 0.04;
    double nu0 = 0.04;
    double nu_bar = 0.04;
    double kappa = 3.0;
    double sigma_nu = 0.2;
    double r0 = 0.03;
    double b = 0.02;
    double a = 0.5;
    double sigma_r = 0.02;
    double e0 = 39.0;
    double lambda = 0.02;
    double sigma_e = 0.02;

    double mu() const noexcept { return r0 + equity_premium; }

    /// Throws std::invalid_argument naming the first violated invariant.
    void validate() const {
        auto require = [](bool ok, const char* what) {
            if (!ok) throw std::invalid_argument(what);
        };
        require(s0 > 0.0, "market.s0 must be positive");
        require(nu0 > 0.0, "market.nu0 must be positive");
        require(nu_bar >= 0.0, "market.nu_bar must be non-negative");
        require(kappa > 0.0, "market.kappa must be positive");
        require(sigma_nu >= 0.0, "market.sigma_nu must be non-negative");
        require(sigma_nu * sigma_nu < 2.0 * kappa * nu_bar,
                "Feller condition violated: sigma_nu^2 >= 2*kappa*nu_bar");
        require(a > 0.0, "market.a must be positive");
        require(sigma_r >= 0.0, "market.sigma_r must be non-negative");
        require(e0 > 0.0, "market.e0 must be positive");
        require(sigma_e >= 0.0, "market.sigma_e must be non-negative");
        require(std::isfinite(equity_premium) && std::isfinite(r0) && std::isfinite(b) &&
                    std::isfinite(lambda),
                "market drift parameters must be finite");
    }

    bool operator==(const MarketParams&) const = default;
};

/// Uniform grid t_k = k / steps_per_year, k = 0..n_steps.
class TimeGrid {
public:
    TimeGrid() = default;

    TimeGrid(double horizon_years, int steps_per_year) : steps_per_year_(steps_per_year) {
        if (steps_per_year < 1) throw std::invalid_argument("grid.steps_per_year must be >= 1");
        if (!(horizon_years > 0.0)) throw std::invalid_argument("grid.horizon_years must be positive");
        const double steps = horizon_years * steps_per_year;
        const double rounded = std::round(steps);
        if (std::abs(steps - rounded) > 1e-9)
            throw std::invalid_argument(
                "grid.horizon_years * grid.steps_per_year must be an integer");
        n_steps_ = static_cast<std::size_t>(rounded);
    }

    int steps_per_year() const noexcept { return steps_per_year_; }
    std::size_t n_steps() const noexcept { return n_steps_; }
    std::size_t n_points() const noexcept { return n_steps_ + 1; }
    double dt() const noexcept { return 1.0 / steps_per_year_; }
    double horizon() const noexcept {
        return static_cast<double>(n_steps_) / steps_per_year_;
    }
    double time(std::size_t k) const noexcept {
        return static_cast<double>(k) / steps_per_year_;
    }
    /// Grid index of whole year y.
    std::size_t index_of_year(std::size_t year) const noexcept {
        return year * static_cast<std::size_t>(steps_per_year_);
    }
    /// Number of whole years covered by the grid.
    std::size_t whole_years() const noexcept {
        return n_steps_ / static_cast<std::size_t>(steps_per_year_);
    }

    bool operator==(const TimeGrid&) const = default;

private:
    int steps_per_year_ = 120;
    std::size_t n_steps_ = 4800;
};

/// One realization of the economy on a TimeGrid.
///
/// State series have n_points entries; shocks and increments are per step
/// (n_steps entries) and already scaled by sqrt(dt).
struct MarketPath {
    std::vector<double> s;
    std::vector<double> nu;
    std::vector<double> r;
    std::vector<double> wage;
    std::vector<double> eta;
    std::vector<Vec4> uncorrelated_shocks;
    std::vector<Vec4> correlated_increments;
};

template <class Source>
concept NormalSource = requires(const Source& src, std::uint64_t step) {
    { src(step) } -> std::convertible_to<Vec4>;
};

inline double risk_premium(double mu, double r, double nu) {
    return (mu - r) / std::sqrt(std::max(nu, kVarianceFloor));
}

//---------------------------------------------------------------------------//
/*!
 * Euler-Maruyama path of (S, nu, r, e).
 *
 * Variance uses full truncation: nu+ = max(nu, 0) enters both drift and
 * diffusion, and the reported variance is nu+. Equity and wage are advanced
 * in log space so they stay positive.
 */
template <NormalSource Source>
MarketPath simulate_market_path(const MarketParams& p, const TimeGrid& grid, const Mat4& chol,
                                const Source& shocks) {
    const std::size_t n = grid.n_steps();
    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);
    const double mu = p.mu();

    MarketPath path;
    path.s.resize(n + 1);
    path.nu.resize(n + 1);
    path.r.resize(n + 1);
    path.wage.resize(n + 1);
    path.eta.resize(n + 1);
    path.uncorrelated_shocks.resize(n);
    path.correlated_increments.resize(n);

    double log_s = std::log(p.s0);
    double log_e = std::log(p.e0);
    double nu = p.nu0;  // raw state, may dip below zero
    double r = p.r0;
    const double wage_drift = (p.lambda - 0.5 * p.sigma_e * p.sigma_e) * dt;

    auto record = [&](std::size_t k) {
        const double nu_plus = std::max(nu, 0.0);
        path.s[k] = std::exp(log_s);
        path.nu[k] = nu_plus;
        path.r[k] = r;
        path.wage[k] = std::exp(log_e);
        path.eta[k] = risk_premium(mu, r, nu_plus);
    };
    record(0);

    for (std::size_t k = 0; k < n; ++k) {
        Vec4 z = shocks(static_cast<std::uint64_t>(k));
        for (double& zi : z) zi *= sqrt_dt;
        const Vec4 db = correlate_increments(chol, z);
        path.uncorrelated_shocks[k] = z;
        path.correlated_increments[k] = db;

        const double nu_plus = std::max(nu, 0.0);
        const double vol = std::sqrt(nu_plus);
        log_s += (mu - 0.5 * nu_plus) * dt + vol * db[kEquity];
        nu += p.kappa * (p.nu_bar - nu_plus) * dt + p.sigma_nu * vol * db[kVariance];
        r += p.a * (p.b - r) * dt + p.sigma_r * db[kRate];
        log_e += wage_drift + p.sigma_e * db[kWage];
        record(k + 1);
    }
    return path;
}

}  // namespace buffersim
