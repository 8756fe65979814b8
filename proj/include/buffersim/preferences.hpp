// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "buffersim/correlation.hpp"
#include "buffersim/linalg.hpp"
#include "buffersim/market.hpp"
#include "buffersim/pension_system.hpp"

namespace buffersim {

enum class OmegaKind { EqualWeight, DrRatio };

/// CRRA forward preferences of the planner and the retirees.
struct PreferenceParams {
    double theta = 4.0;   // relative risk aversion, != 1
    double beta = 0.03;   // retiree time preference (1/year)
    double z0 = 1e-8;     // retiree utility normalizer
    double zu0 = 1296.0;  // initial buffer utility weight
    Vec4 delta{0.0, -0.2, -0.2, -0.2};  // sensitivities to (S, nu, r, e)
    OmegaKind omega = OmegaKind::EqualWeight;

    void validate() const {
        if (!(theta > 0.0) || theta == 1.0)
            throw std::invalid_argument("preferences.theta must be positive and != 1");
        if (!(z0 > 0.0)) throw std::invalid_argument("preferences.z0 must be positive");
        if (!(zu0 > 0.0)) throw std::invalid_argument("preferences.zu0 must be positive");
        if (!std::isfinite(beta)) throw std::invalid_argument("preferences.beta must be finite");
        for (double d : delta)
            if (!std::isfinite(d)) throw std::invalid_argument("preferences.delta must be finite");
    }

    bool operator==(const PreferenceParams&) const = default;
};

/// Split of the utility volatility into the traded direction and the rest.
///
/// lt_delta = transpose(L) delta; hedgeable is its first entry and perp_sq the
/// squared norm of the remaining three. quadratic = delta' Gamma delta is
/// evaluated directly from Gamma, so quadratic == hedgeable^2 + perp_sq is a
/// genuine check on the factorization.
struct DeltaDecomposition {
    Vec4 lt_delta{};
    double hedgeable = 0.0;
    double perp_sq = 0.0;
    double quadratic = 0.0;

    static DeltaDecomposition compute(const Vec4& delta, const CorrelationStructure& corr) {
        DeltaDecomposition d;
        d.lt_delta = multiply(transpose(corr.chol()), delta);
        d.hedgeable = d.lt_delta[0];
        d.perp_sq = d.lt_delta[1] * d.lt_delta[1] + d.lt_delta[2] * d.lt_delta[2] +
                    d.lt_delta[3] * d.lt_delta[3];
        d.quadratic = dot(delta, multiply(corr.gamma(), delta));
        return d;
    }
};

/// Weight of an individual retiree at time t.
inline double omega_weight(double t, const DemographicSchedule& demo, OmegaKind kind) {
    if (kind == OmegaKind::EqualWeight) return 1.0;
    return demo.dr(t) / demo.dr(0.0);
}

/// Preference state on the grid. tau is +infinity when the buffer survives
/// the horizon; zu is exactly zero from tau_index on.
struct PreferencePath {
    std::vector<double> z;
    std::vector<double> omega;
    std::vector<double> n_retirees;
    std::vector<double> log_xi;
    std::vector<double> xi;
    std::vector<double> bracket;  // (zu0)^(1/theta) - int N^r (Z omega xi)^(1/theta) ds
    std::vector<double> depletion_integral;
    std::vector<double> zu;
    double tau = std::numeric_limits<double>::infinity();
    std::optional<std::size_t> tau_index;

    bool solvent_at(std::size_t k) const noexcept { return !tau_index || k < *tau_index; }
};

inline std::vector<double> time_preference_path(const PreferenceParams& prefs,
                                                const TimeGrid& grid) {
    std::vector<double> z(grid.n_points());
    for (std::size_t k = 0; k < z.size(); ++k)
        z[k] = prefs.z0 * std::exp(-prefs.beta * grid.time(k));
    return z;
}

inline std::vector<double> omega_path(const DemographicSchedule& demo, OmegaKind kind,
                                      const TimeGrid& grid) {
    std::vector<double> w(grid.n_points());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = omega_weight(grid.time(k), demo, kind);
    return w;
}

inline std::vector<double> retiree_path(const DemographicSchedule& demo, const TimeGrid& grid) {
    std::vector<double> n(grid.n_points());
    for (std::size_t k = 0; k < n.size(); ++k) n[k] = demo.n_retirees(grid.time(k));
    return n;
}

/// log of the utility-dependent discount factor xi, log xi_0 = 0.
///
/// Drift by left-endpoint Euler; the stochastic integral of delta . dB is
/// summed as transpose(L) delta . z over the uncorrelated scaled shocks.
inline std::vector<double> log_discount_factor_path(const MarketPath& market,
                                                    const DeltaDecomposition& dd, double theta,
                                                    const TimeGrid& grid) {
    const std::size_t n = grid.n_steps();
    const double dt = grid.dt();
    const double a = 1.0 - theta;
    const double c = (1.0 - theta) / (2.0 * theta);
    std::vector<double> log_xi(n + 1);
    log_xi[0] = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double tilt = dd.hedgeable + market.eta[k];
        const double drift = a * market.r[k] + c * tilt * tilt + 0.5 * dd.quadratic;
        log_xi[k + 1] = log_xi[k] + drift * dt - dot(dd.lt_delta, market.uncorrelated_shocks[k]);
    }
    return log_xi;
}

inline std::vector<double> discount_factor_path(const MarketPath& market,
                                                const DeltaDecomposition& dd, double theta,
                                                const TimeGrid& grid) {
    auto xi = log_discount_factor_path(market, dd, theta, grid);
    for (double& x : xi) x = std::exp(x);
    return xi;
}

struct ZuClosedForm {
    std::vector<double> zu;
    std::vector<double> bracket;
    std::vector<double> depletion_integral;
    double tau = std::numeric_limits<double>::infinity();
    std::optional<std::size_t> tau_index;
};

//---------------------------------------------------------------------------//
/*!
 * Buffer utility weight from its explicit representation.
 *
 * The depletion integral D_t = int_0^t N^r (Z omega xi / zu0)^(1/theta) ds is
 * accumulated with the trapezoid rule, the bracket is zu0^(1/theta) (1 - D_t)
 * and zu_t = bracket^theta / xi_t. tau is the first grid time with D >= 1;
 * the bracket is never raised to a power once it is non-positive.
 */
inline ZuClosedForm zu_closed_form(std::span<const double> log_xi,
                                   std::span<const double> n_retirees,
                                   std::span<const double> z, std::span<const double> omega,
                                   const PreferenceParams& prefs, const TimeGrid& grid) {
    const std::size_t np = grid.n_points();
    if (log_xi.size() != np || n_retirees.size() != np || z.size() != np || omega.size() != np)
        throw std::invalid_argument("zu_closed_form: input paths must share the grid");

    const double inv_theta = 1.0 / prefs.theta;
    const double log_zu0 = std::log(prefs.zu0);
    const double bracket0 = std::pow(prefs.zu0, inv_theta);
    const double half_dt = 0.5 * grid.dt();

    auto integrand = [&](std::size_t k) {
        return n_retirees[k] *
               std::exp((std::log(z[k]) + std::log(omega[k]) + log_xi[k] - log_zu0) * inv_theta);
    };

    ZuClosedForm out;
    out.zu.assign(np, 0.0);
    out.bracket.assign(np, 0.0);
    out.depletion_integral.assign(np, 0.0);

    double depletion = 0.0;
    double h_prev = integrand(0);
    for (std::size_t k = 0; k < np; ++k) {
        if (k > 0) {
            const double h = integrand(k);
            depletion += half_dt * (h_prev + h);
            h_prev = h;
        }
        out.depletion_integral[k] = depletion;
        out.bracket[k] = bracket0 * (1.0 - depletion);
        if (!out.tau_index && depletion >= 1.0) {
            out.tau_index = k;
            out.tau = grid.time(k);
        }
        if (!out.tau_index)
            out.zu[k] = std::exp(prefs.theta * std::log(out.bracket[k]) - log_xi[k]);
    }
    return out;
}

/// Full preference state for one market path.
inline PreferencePath build_preference_path(const MarketPath& market,
                                            const DemographicSchedule& demo,
                                            const PreferenceParams& prefs,
                                            const DeltaDecomposition& dd, const TimeGrid& grid) {
    PreferencePath path;
    path.z = time_preference_path(prefs, grid);
    path.omega = omega_path(demo, prefs.omega, grid);
    path.n_retirees = retiree_path(demo, grid);
    path.log_xi = log_discount_factor_path(market, dd, prefs.theta, grid);
    path.xi.resize(path.log_xi.size());
    std::transform(path.log_xi.begin(), path.log_xi.end(), path.xi.begin(),
                   [](double x) { return std::exp(x); });
    auto closed = zu_closed_form(path.log_xi, path.n_retirees, path.z, path.omega, prefs, grid);
    path.zu = std::move(closed.zu);
    path.bracket = std::move(closed.bracket);
    path.depletion_integral = std::move(closed.depletion_integral);
    path.tau = closed.tau;
    path.tau_index = closed.tau_index;
    return path;
}

/// Integration of the consistency SDE for zu in log space, a validator for
/// zu_closed_form.
///
/// Market-driven drift terms use left endpoints like the discount factor. The
/// state-dependent payout term theta N^r (Z omega / zu)^(1/theta) is stiff
/// near depletion, so it gets a trapezoidal predictor-corrector step; plain
/// Euler on it is only first order and loses several digits as zu -> 0. Once
/// zu drops below cutoff * zu0 (or stops being finite) the path is zero.
inline std::vector<double> zu_sde_form(const MarketPath& market,
                                       std::span<const double> n_retirees,
                                       std::span<const double> z, std::span<const double> omega,
                                       const PreferenceParams& prefs,
                                       const DeltaDecomposition& dd, const TimeGrid& grid,
                                       double cutoff = 1e-12) {
    const std::size_t n = grid.n_steps();
    const double dt = grid.dt();
    const double theta = prefs.theta;
    const double inv_theta = 1.0 / theta;
    const double c = (1.0 - theta) / (2.0 * theta);
    const double floor_value = cutoff * prefs.zu0;

    auto payout = [&](std::size_t k, double log_zu) {
        return n_retirees[k] * std::exp((std::log(z[k] * omega[k]) - log_zu) * inv_theta);
    };

    std::vector<double> zu(n + 1, 0.0);
    double log_zu = std::log(prefs.zu0);
    zu[0] = prefs.zu0;
    for (std::size_t k = 0; k < n; ++k) {
        const double tilt = dd.hedgeable + market.eta[k];
        const double market_drift =
            -((1.0 - theta) * market.r[k] + c * tilt * tilt) - 0.5 * dd.quadratic;
        const double noise = dot(dd.lt_delta, market.uncorrelated_shocks[k]);
        const double p0 = payout(k, log_zu);
        const double predicted = log_zu + (market_drift - theta * p0) * dt + noise;
        const double p1 = payout(k + 1, predicted);
        log_zu += (market_drift - 0.5 * theta * (p0 + p1)) * dt + noise;
        const double next = std::exp(log_zu);
        if (!std::isfinite(log_zu) || next < floor_value) break;
        zu[k + 1] = next;
    }
    return zu;
}

/// Outcome of comparing a validator path against its closed form.
struct CrossCheck {
    double max_relative_gap = 0.0;
    std::size_t compared_points = 0;
    std::optional<std::size_t> first_divergence;  // first index above tolerance

    bool diverged() const noexcept { return first_divergence.has_value(); }
};

/// Relative gap |a - b| / |b| over indices [0, end).
inline CrossCheck compare_paths(std::span<const double> candidate,
                                std::span<const double> reference, std::size_t end,
                                double tolerance) {
    CrossCheck out;
    end = std::min({end, candidate.size(), reference.size()});
    for (std::size_t k = 0; k < end; ++k) {
        const double gap = std::abs(candidate[k] - reference[k]) / std::abs(reference[k]);
        out.max_relative_gap = std::max(out.max_relative_gap, gap);
        if (!out.first_divergence && !(gap <= tolerance)) out.first_divergence = k;
    }
    out.compared_points = end;
    return out;
}

/// Number of leading grid points inside [0, fraction * tau); the whole grid
/// when the buffer survives.
inline std::size_t validation_window(const PreferencePath& prefs, const TimeGrid& grid,
                                     double fraction = 0.9) {
    if (!prefs.tau_index) return grid.n_points();
    const double limit = fraction * prefs.tau;
    std::size_t end = 0;
    while (end < grid.n_points() && grid.time(end) < limit) ++end;
    return end;
}

/// Runs zu_sde_form and compares it with the closed form before depletion.
inline CrossCheck zu_sde_crosscheck(const MarketPath& market, const PreferencePath& closed,
                                    const PreferenceParams& prefs, const DeltaDecomposition& dd,
                                    const TimeGrid& grid, double tolerance,
                                    double fraction = 0.9) {
    const auto sde = zu_sde_form(market, closed.n_retirees, closed.z, closed.omega, prefs, dd, grid);
    return compare_paths(sde, closed.zu, validation_window(closed, grid, fraction), tolerance);
}

}  // namespace buffersim
