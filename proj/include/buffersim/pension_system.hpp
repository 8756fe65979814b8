// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace buffersim {

//---------------------------------------------------------------------------//
// Demographics
//---------------------------------------------------------------------------//

struct SteadyState {
    double dr0 = 0.3;
    bool operator==(const SteadyState&) const = default;
};

/// Dependency ratio moving linearly from start to end over ramp_years, flat
/// afterwards.
struct LinearRamp {
    double dr_start = 0.3;
    double dr_end = 0.5;
    double ramp_years = 40.0;
    bool operator==(const LinearRamp&) const = default;
};

/// Tabulated dependency ratio, piecewise constant: the value at the last
/// knot time <= t applies. The first knot must be at t = 0.
struct CustomTable {
    std::vector<double> times;
    std::vector<double> values;
    bool operator==(const CustomTable&) const = default;
};

using DependencyRatio = std::variant<SteadyState, LinearRamp, CustomTable>;

/// Worker headcount and dependency ratio DR = retirees / workers.
///
/// Retiree counts are a density (n_retirees = dr * n_workers) and need not be
/// integral.
class DemographicSchedule {
public:
    DemographicSchedule() = default;

    DemographicSchedule(double n_workers, DependencyRatio ratio)
        : n_workers_(n_workers), ratio_(std::move(ratio)) {
        validate();
    }

    static DemographicSchedule steady_state(double dr0, double n_workers = 100.0) {
        return {n_workers, SteadyState{dr0}};
    }
    static DemographicSchedule linear_ramp(double start, double end, double years,
                                           double n_workers = 100.0) {
        return {n_workers, LinearRamp{start, end, years}};
    }

    double n_workers(double /*t*/) const noexcept { return n_workers_; }
    double n_retirees(double t) const { return dr(t) * n_workers_; }

    double dr(double t) const {
        return std::visit(
            [t](const auto& kind) -> double {
                using K = std::decay_t<decltype(kind)>;
                if constexpr (std::is_same_v<K, SteadyState>) {
                    return kind.dr0;
                } else if constexpr (std::is_same_v<K, LinearRamp>) {
                    if (t >= kind.ramp_years) return kind.dr_end;
                    return kind.dr_start + (kind.dr_end - kind.dr_start) * (t / kind.ramp_years);
                } else {
                    auto it = std::upper_bound(kind.times.begin(), kind.times.end(), t);
                    const auto idx = static_cast<std::size_t>(
                        std::max<std::ptrdiff_t>(0, (it - kind.times.begin()) - 1));
                    return kind.values[idx];
                }
            },
            ratio_);
    }

    double workers() const noexcept { return n_workers_; }
    const DependencyRatio& ratio() const noexcept { return ratio_; }

    bool operator==(const DemographicSchedule&) const = default;

private:
    void validate() const {
        if (!(n_workers_ > 0.0))
            throw std::invalid_argument("demographics.n_workers must be positive");
        std::visit(
            [](const auto& kind) {
                using K = std::decay_t<decltype(kind)>;
                if constexpr (std::is_same_v<K, SteadyState>) {
                    if (!(kind.dr0 > 0.0))
                        throw std::invalid_argument("dependency ratio must be positive");
                } else if constexpr (std::is_same_v<K, LinearRamp>) {
                    if (!(kind.dr_start > 0.0) || !(kind.dr_end > 0.0))
                        throw std::invalid_argument("dependency ratio must be positive");
                    if (!(kind.ramp_years > 0.0))
                        throw std::invalid_argument("ramp_years must be positive");
                } else {
                    if (kind.times.empty() || kind.times.size() != kind.values.size())
                        throw std::invalid_argument(
                            "custom dependency table needs matching, non-empty times/values");
                    if (kind.times.front() != 0.0)
                        throw std::invalid_argument("custom dependency table must start at t = 0");
                    if (!std::is_sorted(kind.times.begin(), kind.times.end()) ||
                        std::adjacent_find(kind.times.begin(), kind.times.end()) !=
                            kind.times.end())
                        throw std::invalid_argument(
                            "custom dependency table times must be strictly increasing");
                    for (double v : kind.values)
                        if (!(v > 0.0))
                            throw std::invalid_argument("dependency ratio must be positive");
                }
            },
            ratio_);
    }

    double n_workers_ = 100.0;
    DependencyRatio ratio_ = SteadyState{};
};

//---------------------------------------------------------------------------//
// Contributions and the pay-as-you-go floor
//---------------------------------------------------------------------------//

struct PensionParams {
    double alpha = 0.15;  // contribution rate
    double k0 = 0.0;      // initial sustainability bound (thousands)

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("pension.alpha must lie in (0, 1)");
        if (!std::isfinite(k0)) throw std::invalid_argument("pension.k0 must be finite");
    }

    bool operator==(const PensionParams&) const = default;
};

/// Total contributions C_t = alpha * wage * N^w (thousands per year).
inline double contributions(double t, double wage, const DemographicSchedule& demo,
                            double alpha) {
    return alpha * wage * demo.n_workers(t);
}

/// Pure pay-as-you-go pension per retiree, alpha * wage / DR_t.
inline double min_pension(double t, double wage, const DemographicSchedule& demo, double alpha) {
    return alpha * wage / demo.dr(t);
}

/// Sustainability bound K_t = K_0 exp(int_0^t r ds) for a bound held entirely
/// in the bank account, on the rate grid r_k with spacing dt (trapezoid rule).
inline std::vector<double> sustainability_bound_path(double k0, std::span<const double> rates,
                                                     double dt) {
    std::vector<double> bound(rates.size(), 0.0);
    if (rates.empty()) return bound;
    double integral = 0.0;
    bound[0] = k0;
    for (std::size_t k = 1; k < rates.size(); ++k) {
        integral += 0.5 * dt * (rates[k - 1] + rates[k]);
        bound[k] = k0 * std::exp(integral);
    }
    return bound;
}

/// Single-point version of sustainability_bound_path at grid index k.
inline double sustainability_bound(double k0, std::span<const double> rates, double dt,
                                   std::size_t k) {
    if (k >= rates.size()) throw std::out_of_range("sustainability_bound: index past rate path");
    double integral = 0.0;
    for (std::size_t i = 1; i <= k; ++i) integral += 0.5 * dt * (rates[i - 1] + rates[i]);
    return k0 * std::exp(integral);
}

}  // namespace buffersim
