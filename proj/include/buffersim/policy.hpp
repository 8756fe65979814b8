// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "buffersim/market.hpp"
#include "buffersim/pension_system.hpp"
#include "buffersim/preferences.hpp"

namespace buffersim {

/// Cushion F - K below which the fund counts as depleted, relative to C_0.
inline constexpr double kSolvencyThreshold = 1e-9;

//---------------------------------------------------------------------------//
/*!
 * Optimal investment/pension policy and induced buffer fund on the grid.
 *
 * Money amounts are in thousands; pensions per retiree per year. pi_star is
 * the volatility-rescaled exposure phi_star * sqrt(nu). risky_fraction is NaN
 * wherever the cushion is at or below kSolvencyThreshold * C_0.
 */
struct PolicyPath {
    std::vector<double> pi_star;
    std::vector<double> phi_star;
    std::vector<double> risky_fraction;
    std::vector<double> p_star;
    std::vector<double> p_min;
    std::vector<double> surplus;  // p_star - p_min
    std::vector<double> fund;
    std::vector<double> cushion;  // fund - k_bound
    std::vector<double> surplus_y;
    std::vector<double> k_bound;
    double solvency_threshold = 0.0;

    bool solvent_at(std::size_t k) const noexcept { return cushion[k] > solvency_threshold; }
};

namespace detail {

inline std::vector<double> min_pension_path(const MarketPath& market,
                                            const DemographicSchedule& demo, double alpha,
                                            const TimeGrid& grid) {
    std::vector<double> p(grid.n_points());
    for (std::size_t k = 0; k < p.size(); ++k)
        p[k] = min_pension(grid.time(k), market.wage[k], demo, alpha);
    return p;
}

/// log Y_t from its explicit exponential form.
inline std::vector<double> log_surplus_y(const MarketPath& market, const DeltaDecomposition& dd,
                                         double theta, double zu0, double cushion0,
                                         const TimeGrid& grid) {
    const std::size_t n = grid.n_steps();
    const double dt = grid.dt();
    const double inv_theta = 1.0 / theta;
    std::vector<double> log_y(n + 1);
    log_y[0] = std::log(cushion0) - inv_theta * std::log(zu0);
    for (std::size_t k = 0; k < n; ++k) {
        const double eta = market.eta[k];
        const double drift = market.r[k] + 0.5 * (eta * eta + dd.perp_sq);
        const double hedged = (dd.hedgeable + eta) * market.correlated_increments[k][kEquity];
        const double utility_shock = dot(dd.lt_delta, market.uncorrelated_shocks[k]);
        log_y[k + 1] = log_y[k] + inv_theta * (drift * dt + hedged - utility_shock);
    }
    return log_y;
}

/// Fills exposure, fund and risky fraction from a cushion path.
inline void fill_investment(PolicyPath& out, const MarketPath& market,
                            const DeltaDecomposition& dd, double theta) {
    const std::size_t np = out.cushion.size();
    out.fund.resize(np);
    out.pi_star.resize(np);
    out.phi_star.resize(np);
    out.risky_fraction.resize(np);
    for (std::size_t k = 0; k < np; ++k) {
        const double g = out.cushion[k];
        const double vol = std::sqrt(std::max(market.nu[k], kVarianceFloor));
        const double tilt = dd.hedgeable + market.eta[k];
        out.fund[k] = g + out.k_bound[k];
        out.pi_star[k] = g / theta * tilt;
        out.phi_star[k] = out.pi_star[k] / vol;
        // (G / F) * tilt / (theta * vol): equals the Merton-type ratio exactly
        // when K = 0, independently of the fund level.
        out.risky_fraction[k] = g > out.solvency_threshold
                                    ? (g / out.fund[k]) * (tilt / (theta * vol))
                                    : std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace detail

//---------------------------------------------------------------------------//
/*!
 * Optimal policy from the closed forms.
 *
 * The cushion is G = Y zu^(1/theta) = Y xi^(-1/theta) * bracket with Y from
 * its exponential form, so the fund never reads an Euler-integrated wealth
 * equation. The pension surplus is Y (Z omega)^(1/theta). From tau on the
 * scheme pays the pay-as-you-go pension only, holds no risky asset and sits
 * on the bound.
 */
inline PolicyPath optimal_policy_path(const MarketPath& market, const PreferencePath& prefs_path,
                                      const DemographicSchedule& demo,
                                      const PensionParams& pension, const PreferenceParams& prefs,
                                      const DeltaDecomposition& dd, double f0,
                                      const TimeGrid& grid) {
    if (!(f0 > pension.k0)) throw std::invalid_argument("initial fund must exceed k0");
    const std::size_t np = grid.n_points();
    const double theta = prefs.theta;
    const double inv_theta = 1.0 / theta;

    PolicyPath out;
    out.solvency_threshold =
        kSolvencyThreshold * contributions(0.0, market.wage[0], demo, pension.alpha);
    out.k_bound = sustainability_bound_path(pension.k0, market.r, grid.dt());
    out.p_min = detail::min_pension_path(market, demo, pension.alpha, grid);
    const auto log_y =
        detail::log_surplus_y(market, dd, theta, prefs.zu0, f0 - pension.k0, grid);

    out.surplus_y.resize(np);
    out.surplus.assign(np, 0.0);
    out.cushion.assign(np, 0.0);
    out.p_star.resize(np);
    for (std::size_t k = 0; k < np; ++k) {
        out.surplus_y[k] = std::exp(log_y[k]);
        if (prefs_path.solvent_at(k)) {
            out.cushion[k] =
                std::exp(log_y[k] - inv_theta * prefs_path.log_xi[k]) * prefs_path.bracket[k];
            out.surplus[k] = std::exp(
                log_y[k] + inv_theta * (std::log(prefs_path.z[k]) + std::log(prefs_path.omega[k])));
        }
        out.p_star[k] = out.p_min[k] + out.surplus[k];
    }
    detail::fill_investment(out, market, dd, theta);
    return out;
}

/// Policy that pays `scale` times the optimal surplus rate on its own cushion.
///
/// The cushion follows the same wealth equation with payout rate scale * c,
/// c = N^r (Z omega / zu)^(1/theta); since c dt = -d log(bracket) this gives
/// G' = G (bracket / bracket_0)^(scale - 1), which stays non-negative, so the
/// policy remains admissible. scale = 1 reproduces the optimum.
inline PolicyPath scaled_payout_policy(const PolicyPath& optimal,
                                       const PreferencePath& prefs_path,
                                       const MarketPath& market, const DeltaDecomposition& dd,
                                       double theta, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("payout scale must be positive");
    PolicyPath out = optimal;
    const double bracket0 = prefs_path.bracket[0];
    for (std::size_t k = 0; k < out.cushion.size(); ++k) {
        if (!prefs_path.solvent_at(k)) {
            out.cushion[k] = 0.0;
            out.surplus[k] = 0.0;
        } else {
            const double shrink = std::pow(prefs_path.bracket[k] / bracket0, scale - 1.0);
            out.cushion[k] = optimal.cushion[k] * shrink;
            out.surplus[k] = scale * optimal.surplus[k] * shrink;
        }
        out.p_star[k] = out.p_min[k] + out.surplus[k];
    }
    detail::fill_investment(out, market, dd, theta);
    return out;
}

/// Cushion path from integrating the wealth SDE under the optimal policy in
/// log space; validates optimal_policy_path. The payout rate
/// c = N^r (Z omega / zu)^(1/theta) enters through a trapezoid, everything
/// else through left endpoints.
struct FundCrosscheck {
    std::vector<double> fund;
    std::vector<double> cushion;
};

inline FundCrosscheck euler_fund_crosscheck(const MarketPath& market,
                                            const PreferencePath& prefs_path,
                                            const PensionParams& pension,
                                            const PreferenceParams& prefs,
                                            const DeltaDecomposition& dd, double f0,
                                            const TimeGrid& grid) {
    const std::size_t n = grid.n_steps();
    const double dt = grid.dt();
    const double inv_theta = 1.0 / prefs.theta;

    auto payout = [&](std::size_t k) {
        return prefs_path.n_retirees[k] *
               std::exp(inv_theta * (std::log(prefs_path.z[k] * prefs_path.omega[k]) -
                                     std::log(prefs_path.zu[k])));
    };

    FundCrosscheck out;
    const auto k_bound = sustainability_bound_path(pension.k0, market.r, dt);
    out.cushion.assign(n + 1, 0.0);
    double log_g = std::log(f0 - pension.k0);
    out.cushion[0] = f0 - pension.k0;
    for (std::size_t k = 0; k < n && prefs_path.solvent_at(k + 1); ++k) {
        const double eta = market.eta[k];
        const double tilt = dd.hedgeable + eta;
        const double drift = market.r[k] - 0.5 * (payout(k) + payout(k + 1)) +
                             tilt * eta * inv_theta - 0.5 * tilt * tilt * inv_theta * inv_theta;
        log_g += drift * dt + inv_theta * tilt * market.correlated_increments[k][kEquity];
        out.cushion[k + 1] = std::exp(log_g);
    }
    out.fund.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) out.fund[k] = out.cushion[k] + k_bound[k];
    return out;
}

/// Compares the integrated cushion with the closed form on [0, fraction * tau).
inline CrossCheck fund_crosscheck(const MarketPath& market, const PreferencePath& prefs_path,
                                  const PolicyPath& policy, const PensionParams& pension,
                                  const PreferenceParams& prefs, const DeltaDecomposition& dd,
                                  double f0, const TimeGrid& grid, double tolerance,
                                  double fraction = 0.9) {
    const auto euler = euler_fund_crosscheck(market, prefs_path, pension, prefs, dd, f0, grid);
    return compare_paths(euler.cushion, policy.cushion,
                         validation_window(prefs_path, grid, fraction), tolerance);
}

/// Raised when CRRA utility is evaluated at zero cushion with theta > 1.
class UnboundedUtility : public std::domain_error {
public:
    explicit UnboundedUtility(std::size_t index)
        : std::domain_error("utility unbounded at depleted fund (theta > 1) at grid index " +
                            std::to_string(index)),
          index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// U(t, F) + int_0^t V(s, p) ds along a policy, V integrated by trapezoid.
///
/// U = zu (F - K)^(1-theta) / (1-theta) and
/// V = N^r omega Z (p - p_min)^(1-theta) / (1-theta).
inline std::vector<double> evaluate_utility_process(const PolicyPath& policy,
                                                    const PreferencePath& prefs_path,
                                                    double theta, const TimeGrid& grid) {
    const std::size_t np = grid.n_points();
    const double one_minus = 1.0 - theta;
    const double half_dt = 0.5 * grid.dt();

    auto retiree_utility = [&](std::size_t k) {
        const double s = policy.surplus[k];
        if (s <= 0.0) {
            if (theta > 1.0) throw UnboundedUtility(k);
            return 0.0;
        }
        return prefs_path.n_retirees[k] * prefs_path.omega[k] * prefs_path.z[k] *
               std::pow(s, one_minus) / one_minus;
    };

    std::vector<double> out(np);
    double integral = 0.0;
    double v_prev = retiree_utility(0);
    for (std::size_t k = 0; k < np; ++k) {
        if (k > 0) {
            const double v = retiree_utility(k);
            integral += half_dt * (v_prev + v);
            v_prev = v;
        }
        const double g = std::max(policy.cushion[k], 0.0);
        double fund_utility = 0.0;
        if (g > 0.0) {
            fund_utility = prefs_path.zu[k] * std::pow(g, one_minus) / one_minus;
        } else if (theta > 1.0) {
            throw UnboundedUtility(k);
        }
        out[k] = fund_utility + integral;
    }
    return out;
}

}  // namespace buffersim
