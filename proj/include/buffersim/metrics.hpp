// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace buffersim {

inline double benefit_ratio(double pension, double wage) {
    if (!(wage > 0.0)) throw std::domain_error("benefit_ratio: wage must be positive");
    return pension / wage;
}

inline double relative_surplus(double p_star, double p_min) {
    if (!(p_min > 0.0)) throw std::domain_error("relative_surplus: p_min must be positive");
    return (p_star - p_min) / p_min;
}

//---------------------------------------------------------------------------//
/*!
 * Equivalent annual indexation rate of an annual cash flow stream.
 *
 * Solves sum_{k=0}^{t} (1+y)^k = sum_k c_k / c_0 for y > -1 by bisection.
 * The left side is strictly increasing in y, so the root is unique.
 */
inline double eair(std::span<const double> cashflows) {
    if (cashflows.size() < 2)
        throw std::domain_error("eair: need at least two annual cash flows");
    for (double c : cashflows)
        if (!(c > 0.0) || !std::isfinite(c))
            throw std::domain_error("eair: cash flows must be strictly positive");

    double target = 0.0;
    for (double c : cashflows) target += c / cashflows.front();
    const std::size_t periods = cashflows.size();
    auto excess = [&](double y) {
        double sum = 0.0;
        double factor = 1.0;
        for (std::size_t k = 0; k < periods; ++k) {
            sum += factor;
            factor *= 1.0 + y;
        }
        return sum - target;
    };

    // excess(-1) = 1 - target < 0 because every later flow is positive.
    double lo = -1.0;
    double hi = 1.0;
    while (excess(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw std::domain_error("eair: rate out of range");
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

//---------------------------------------------------------------------------//
// Per-path snapshots and their cross-sectional summary
//---------------------------------------------------------------------------//

enum class Series : std::size_t {
    S,
    Nu,
    R,
    Wage,
    Eta,
    Xi,
    Zu,
    Fund,
    Cushion,
    RiskyFraction,
    PStar,
    PMin,
    Surplus,
    Rho,
    BenefitRatio,
    BenefitRatioMin,
};
inline constexpr std::size_t kSeriesCount = 16;

inline constexpr std::array<std::string_view, kSeriesCount> kSeriesNames{
    "s",     "nu",   "r",       "wage",           "eta",    "xi",
    "zu",    "fund", "cushion", "risky_fraction", "p_star", "p_min",
    "surplus", "rho", "benefit_ratio", "benefit_ratio_min"};

inline std::string_view series_name(Series s) {
    return kSeriesNames[static_cast<std::size_t>(s)];
}

enum class Conditioning : std::size_t { All, Solvent, Depleted };
inline constexpr std::array<std::string_view, 3> kConditioningNames{"all", "solvent", "depleted"};

/// Values of every series at the reporting times for one path.
struct PathRecord {
    std::size_t path_index = 0;
    double tau = std::numeric_limits<double>::infinity();
    std::vector<std::array<double, kSeriesCount>> at;  // per reporting time
    std::vector<char> solvent;                          // per reporting time
    // Per EAIR time. eair_bf starts the p* stream from the pre-fund pension
    // p_min_0; eair_bf_own starts it from p*_0.
    std::vector<double> eair_bf;
    std::vector<double> eair_bf_own;
    std::vector<double> eair_min;

    double value(std::size_t time_index, Series s) const {
        return at[time_index][static_cast<std::size_t>(s)];
    }
};

struct Cell {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double median = std::numeric_limits<double>::quiet_NaN();
    double q25 = std::numeric_limits<double>::quiet_NaN();
    double q75 = std::numeric_limits<double>::quiet_NaN();
    std::size_t count = 0;
};

/// Linear-interpolation quantile of sorted data (the "type 7" rule).
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Mean and quartiles of the finite entries of `values` (taken by value).
inline Cell describe(std::vector<double> values) {
    std::erase_if(values, [](double v) { return !std::isfinite(v); });
    Cell c;
    c.count = values.size();
    if (values.empty()) return c;
    c.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    c.median = quantile_sorted(values, 0.5);
    c.q25 = quantile_sorted(values, 0.25);
    c.q75 = quantile_sorted(values, 0.75);
    return c;
}

struct SeriesSummary {
    Series series{};
    std::array<std::vector<Cell>, 3> by_condition;  // indexed by Conditioning
};

struct TauMoments {
    double mean = 0.0;
    double median = 0.0;
    double variance = 0.0;
    double censored_fraction = 0.0;
    std::size_t n = 0;
};

struct EairRow {
    double t = 0.0;
    double y_bf = 0.0;  // p* indexed against the pre-fund pension p_min_0
    double y_min = 0.0;
    double delta = 0.0;
    double y_bf_own_base = 0.0;  // p* indexed against p*_0
    // Same means restricted to paths still solvent at t.
    double y_bf_solvent = std::numeric_limits<double>::quiet_NaN();
    double y_min_solvent = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_solvent = 0;
};

struct Histogram {
    std::vector<double> edges;
    std::array<std::vector<std::size_t>, 3> counts;  // indexed by Conditioning
};

struct SummaryStats {
    std::vector<double> times;
    std::vector<SeriesSummary> series;
    std::vector<double> survival;  // fraction of paths with tau > t
    TauMoments tau;
    std::vector<EairRow> eair;
    double histogram_time = std::numeric_limits<double>::quiet_NaN();
    std::map<std::string, Histogram> histograms;  // keyed by series name
    std::size_t n_paths = 0;

    const SeriesSummary& get(Series s) const { return series[static_cast<std::size_t>(s)]; }
    const Cell& cell(Series s, Conditioning c, std::size_t time_index) const {
        return get(s).by_condition[static_cast<std::size_t>(c)][time_index];
    }
};

/// Counts of values in [edges[i], edges[i+1]); the last bin is closed.
inline std::vector<std::size_t> histogram(std::span<const double> values,
                                          std::span<const double> edges) {
    if (edges.size() < 2) throw std::invalid_argument("histogram: need at least one bin");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            throw std::invalid_argument("histogram: bin width must be positive");
    std::vector<std::size_t> counts(edges.size() - 1, 0);
    for (double v : values) {
        if (!std::isfinite(v) || v < edges.front() || v > edges.back()) continue;
        auto it = std::upper_bound(edges.begin(), edges.end(), v);
        auto bin = static_cast<std::size_t>(it - edges.begin()) - 1;
        if (bin >= counts.size()) bin = counts.size() - 1;
        ++counts[bin];
    }
    return counts;
}

/// Equal-width bins from min to max with the Freedman-Diaconis width
/// 2 IQR n^(-1/3). Degenerate samples get a single unit-width bin.
inline std::vector<double> freedman_diaconis_edges(std::span<const double> values,
                                                   std::size_t max_bins = 200) {
    std::vector<double> v;
    for (double x : values)
        if (std::isfinite(x)) v.push_back(x);
    if (v.empty()) return {0.0, 1.0};
    std::sort(v.begin(), v.end());
    const double lo = v.front();
    const double hi = v.back();
    const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
    double width = 2.0 * iqr / std::cbrt(static_cast<double>(v.size()));
    if (!(width > 0.0) || !(hi > lo)) return {lo - 0.5, lo + 0.5};
    auto bins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
    bins = std::clamp<std::size_t>(bins, 1, max_bins);
    width = (hi - lo) / static_cast<double>(bins);
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + width * static_cast<double>(i);
    edges.back() = hi;
    return edges;
}

//---------------------------------------------------------------------------//
/*!
 * Cross-sectional statistics of a set of path records.
 *
 * Records are reduced in path_index order, so the result does not depend on
 * the order in which paths were produced. Censored depletion times count as
 * `horizon` in the tau moments.
 */
inline SummaryStats conditional_stats(std::vector<const PathRecord*> records,
                                      std::span<const double> times,
                                      std::span<const double> eair_times, double horizon,
                                      std::ptrdiff_t histogram_time_index = -1) {
    if (records.empty()) throw std::invalid_argument("conditional_stats: no paths");
    std::sort(records.begin(), records.end(),
              [](const PathRecord* a, const PathRecord* b) { return a->path_index < b->path_index; });

    SummaryStats out;
    out.n_paths = records.size();
    out.times.assign(times.begin(), times.end());
    const std::size_t nt = times.size();
    const double n = static_cast<double>(records.size());

    out.series.resize(kSeriesCount);
    std::vector<double> all, solvent, depleted;
    for (std::size_t s = 0; s < kSeriesCount; ++s) {
        auto& summary = out.series[s];
        summary.series = static_cast<Series>(s);
        for (auto& v : summary.by_condition) v.resize(nt);
        for (std::size_t ti = 0; ti < nt; ++ti) {
            all.clear();
            solvent.clear();
            depleted.clear();
            for (const PathRecord* rec : records) {
                const double v = rec->at[ti][s];
                all.push_back(v);
                (rec->solvent[ti] ? solvent : depleted).push_back(v);
            }
            summary.by_condition[0][ti] = describe(all);
            summary.by_condition[1][ti] = describe(solvent);
            summary.by_condition[2][ti] = describe(depleted);
        }
    }

    out.survival.resize(nt);
    for (std::size_t ti = 0; ti < nt; ++ti) {
        std::size_t alive = 0;
        for (const PathRecord* rec : records) alive += rec->tau > times[ti] ? 1 : 0;
        out.survival[ti] = static_cast<double>(alive) / n;
    }

    std::vector<double> taus;
    taus.reserve(records.size());
    std::size_t censored = 0;
    for (const PathRecord* rec : records) {
        const bool cens = !(rec->tau <= horizon);
        censored += cens ? 1 : 0;
        taus.push_back(cens ? horizon : rec->tau);
    }
    out.tau.n = taus.size();
    out.tau.mean = std::accumulate(taus.begin(), taus.end(), 0.0) / n;
    double ss = 0.0;
    for (double t : taus) ss += (t - out.tau.mean) * (t - out.tau.mean);
    out.tau.variance = taus.size() > 1 ? ss / (n - 1.0) : 0.0;
    std::sort(taus.begin(), taus.end());
    out.tau.median = quantile_sorted(taus, 0.5);
    out.tau.censored_fraction = static_cast<double>(censored) / n;

    for (std::size_t ei = 0; ei < eair_times.size(); ++ei) {
        EairRow row;
        row.t = eair_times[ei];
        double sum_bf = 0.0, sum_min = 0.0, sum_own = 0.0, sum_bf_s = 0.0, sum_min_s = 0.0;
        for (const PathRecord* rec : records) {
            sum_bf += rec->eair_bf[ei];
            sum_own += rec->eair_bf_own[ei];
            sum_min += rec->eair_min[ei];
            if (rec->tau > row.t) {
                sum_bf_s += rec->eair_bf[ei];
                sum_min_s += rec->eair_min[ei];
                ++row.n_solvent;
            }
        }
        row.y_bf = sum_bf / n;
        row.y_min = sum_min / n;
        row.delta = row.y_bf - row.y_min;
        row.y_bf_own_base = sum_own / n;
        if (row.n_solvent > 0) {
            row.y_bf_solvent = sum_bf_s / static_cast<double>(row.n_solvent);
            row.y_min_solvent = sum_min_s / static_cast<double>(row.n_solvent);
        }
        out.eair.push_back(row);
    }

    if (histogram_time_index >= 0 && static_cast<std::size_t>(histogram_time_index) < nt) {
        const auto ti = static_cast<std::size_t>(histogram_time_index);
        out.histogram_time = times[ti];
        for (Series s : {Series::PMin, Series::PStar}) {
            std::vector<double> values, sol, dep;
            for (const PathRecord* rec : records) {
                const double v = rec->value(ti, s);
                values.push_back(v);
                (rec->solvent[ti] ? sol : dep).push_back(v);
            }
            Histogram h;
            h.edges = freedman_diaconis_edges(values);
            h.counts[0] = histogram(values, h.edges);
            h.counts[1] = histogram(sol, h.edges);
            h.counts[2] = histogram(dep, h.edges);
            out.histograms.emplace(std::string(series_name(s)), std::move(h));
        }
    }
    return out;
}

}  // namespace buffersim
