// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "buffersim/correlation.hpp"
#include "buffersim/market.hpp"
#include "buffersim/metrics.hpp"
#include "buffersim/pension_system.hpp"
#include "buffersim/policy.hpp"
#include "buffersim/preferences.hpp"
#include "buffersim/rng.hpp"

namespace buffersim {

inline constexpr const char* kEngineVersion = "1.0.0";

/// Everything needed to reproduce one Monte Carlo experiment.
struct ScenarioConfig {
    std::string name = "custom";
    MarketParams market;
    CorrelationStructure::Pairwise correlation{-0.7, 0.0, 0.0, 0.0, 0.0, 0.0};
    DemographicSchedule demo;
    PensionParams pension;
    PreferenceParams prefs;
    TimeGrid grid{40.0, 120};
    double f0 = 585.0;
    std::size_t n_paths = 10000;
    std::uint64_t master_seed = 42;

    void validate() const {
        market.validate();
        (void)CorrelationStructure(correlation);
        pension.validate();
        prefs.validate();
        if (!(f0 > pension.k0))
            throw std::invalid_argument("simulation.f0 must exceed pension.k0");
        if (n_paths == 0) throw std::invalid_argument("simulation.n_paths must be positive");
    }

    /// C_0, the initial total contributions.
    double initial_contributions() const {
        return contributions(0.0, market.e0, demo, pension.alpha);
    }

    bool operator==(const ScenarioConfig&) const = default;
};

/// zu0 giving an initial relative surplus of `target`:
/// zu0 = z0 ((f0 - k0) / (target p_min_0))^theta.
inline double calibrate_zu0(const ScenarioConfig& config, double target) {
    if (!(target > 0.0) || !std::isfinite(target))
        throw std::invalid_argument("calibrate_zu0: target relative surplus must be positive");
    if (!(config.f0 > config.pension.k0))
        throw std::invalid_argument("calibrate_zu0: f0 must exceed k0");
    const double p_min0 = min_pension(0.0, config.market.e0, config.demo, config.pension.alpha);
    return config.prefs.z0 *
           std::pow((config.f0 - config.pension.k0) / (target * p_min0), config.prefs.theta);
}

/// Initial relative surplus implied by a zu0; inverse of calibrate_zu0.
inline double initial_relative_surplus(const ScenarioConfig& config) {
    const double p_min0 = min_pension(0.0, config.market.e0, config.demo, config.pension.alpha);
    return (config.f0 - config.pension.k0) *
           std::pow(config.prefs.z0 / config.prefs.zu0, 1.0 / config.prefs.theta) / p_min0;
}

//---------------------------------------------------------------------------//
// One path
//---------------------------------------------------------------------------//

/// Quantities shared by every path of a scenario.
struct ScenarioContext {
    CorrelationStructure corr;
    DeltaDecomposition dd;

    explicit ScenarioContext(const ScenarioConfig& config)
        : corr(config.correlation), dd(DeltaDecomposition::compute(config.prefs.delta, corr)) {}
};

struct PathResult {
    MarketPath market;
    PreferencePath prefs;
    PolicyPath policy;
};

inline MarketPath simulate_market(const ScenarioConfig& config, const ScenarioContext& ctx,
                                  std::uint64_t path_index) {
    return simulate_market_path(config.market, config.grid, ctx.corr.chol(),
                                ShockStream(config.master_seed, path_index));
}

/// Preferences and policy on a given market path.
///
/// A discretized variance can be truncated to zero even when the Feller
/// condition holds, most often on coarse grids. The risk premium then sits on
/// its floor and the discount factor overflows, so such paths are rejected.
inline PathResult solve_path(const ScenarioConfig& config, const ScenarioContext& ctx,
                             MarketPath market) {
    for (std::size_t k = 0; k < market.nu.size(); ++k)
        if (!(market.nu[k] > 0.0))
            throw std::domain_error("variance truncated to zero at t = " +
                                    std::to_string(config.grid.time(k)) +
                                    "; the risk premium is undefined there (use a finer grid)");
    PathResult out;
    out.prefs = build_preference_path(market, config.demo, config.prefs, ctx.dd, config.grid);
    out.policy = optimal_policy_path(market, out.prefs, config.demo, config.pension, config.prefs,
                                     ctx.dd, config.f0, config.grid);
    out.market = std::move(market);
    return out;
}

inline PathResult simulate_path(const ScenarioConfig& config, const ScenarioContext& ctx,
                                std::uint64_t path_index) {
    return solve_path(config, ctx, simulate_market(config, ctx, path_index));
}

//---------------------------------------------------------------------------//
// Reporting
//---------------------------------------------------------------------------//

/// Annual reporting times, EAIR table times and the histogram time.
struct ReportingPlan {
    std::vector<double> times;
    std::vector<std::size_t> indices;
    std::vector<double> eair_times;
    std::vector<std::size_t> eair_years;
    std::ptrdiff_t histogram_time_index = -1;

    explicit ReportingPlan(const TimeGrid& grid) {
        const std::size_t years = grid.whole_years();
        for (std::size_t y = 0; y <= years; ++y) {
            times.push_back(static_cast<double>(y));
            indices.push_back(grid.index_of_year(y));
        }
        for (std::size_t y : {10, 20, 30, 40}) {
            if (y > years) continue;
            eair_years.push_back(y);
            eair_times.push_back(static_cast<double>(y));
        }
        if (years >= 20) histogram_time_index = 20;
    }
};

inline PathRecord record_path(const PathResult& path, const ReportingPlan& plan,
                              std::size_t path_index) {
    const auto& m = path.market;
    const auto& pr = path.prefs;
    const auto& po = path.policy;
    PathRecord rec;
    rec.path_index = path_index;
    rec.tau = pr.tau;
    rec.at.reserve(plan.indices.size());
    rec.solvent.reserve(plan.indices.size());
    for (std::size_t k : plan.indices) {
        std::array<double, kSeriesCount> v{};
        auto set = [&v](Series s, double x) { v[static_cast<std::size_t>(s)] = x; };
        set(Series::S, m.s[k]);
        set(Series::Nu, m.nu[k]);
        set(Series::R, m.r[k]);
        set(Series::Wage, m.wage[k]);
        set(Series::Eta, m.eta[k]);
        set(Series::Xi, pr.xi[k]);
        set(Series::Zu, pr.zu[k]);
        set(Series::Fund, po.fund[k]);
        set(Series::Cushion, po.cushion[k]);
        set(Series::RiskyFraction, po.risky_fraction[k]);
        set(Series::PStar, po.p_star[k]);
        set(Series::PMin, po.p_min[k]);
        set(Series::Surplus, po.surplus[k]);
        set(Series::Rho, relative_surplus(po.p_star[k], po.p_min[k]));
        set(Series::BenefitRatio, benefit_ratio(po.p_star[k], m.wage[k]));
        set(Series::BenefitRatioMin, benefit_ratio(po.p_min[k], m.wage[k]));
        rec.at.push_back(v);
        rec.solvent.push_back(po.solvent_at(k) ? 1 : 0);
    }
    // Annual indices are a prefix of plan.indices.
    std::vector<double> bf, mn;
    for (std::size_t year : plan.eair_years) {
        bf.clear();
        mn.clear();
        for (std::size_t y = 0; y <= year; ++y) {
            bf.push_back(po.p_star[plan.indices[y]]);
            mn.push_back(po.p_min[plan.indices[y]]);
        }
        rec.eair_bf_own.push_back(eair(bf));
        rec.eair_min.push_back(eair(mn));
        // Indexation of the reformed scheme relative to the pension retirees
        // were getting before the fund existed.
        bf.front() = mn.front();
        rec.eair_bf.push_back(eair(bf));
    }
    return rec;
}

//---------------------------------------------------------------------------//
// Scenario runs
//---------------------------------------------------------------------------//

enum class ErrorPolicy { FailFast, SkipAndReport };

struct RunOptions {
    unsigned threads = 0;  // 0: BUFFERSIM_THREADS, else hardware concurrency
    ErrorPolicy on_error = ErrorPolicy::FailFast;
};

/// Error raised while simulating one path.
class PathError : public std::runtime_error {
public:
    PathError(std::size_t path_index, const std::string& what)
        : std::runtime_error("path " + std::to_string(path_index) + ": " + what),
          path_index_(path_index) {}
    std::size_t path_index() const noexcept { return path_index_; }

private:
    std::size_t path_index_;
};

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BUFFERSIM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(i) for i in [0, n) on `threads` workers. Work is claimed from a
/// shared counter; callers write into per-index slots so the result does not
/// depend on scheduling. The first exception stops new work and is rethrown.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (!stop.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) break;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                stop = true;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct ScenarioResult {
    SummaryStats stats;
    std::vector<PathRecord> records;  // ordered by path index
    std::vector<std::string> skipped;  // messages for paths dropped under SkipAndReport
};

/// Monte Carlo run of a scenario. Path k always uses ShockStream(seed, k).
inline ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& options = {}) {
    config.validate();
    const ScenarioContext ctx(config);
    const ReportingPlan plan(config.grid);

    std::vector<std::optional<PathRecord>> slots(config.n_paths);
    std::vector<std::string> failures(config.n_paths);
    parallel_for(config.n_paths, resolve_threads(options.threads), [&](std::size_t i) {
        try {
            slots[i] = record_path(simulate_path(config, ctx, i), plan, i);
        } catch (const std::exception& e) {
            if (options.on_error == ErrorPolicy::FailFast) throw PathError(i, e.what());
            failures[i] = PathError(i, e.what()).what();
        }
    });

    ScenarioResult out;
    out.records.reserve(config.n_paths);
    for (std::size_t i = 0; i < config.n_paths; ++i) {
        if (slots[i])
            out.records.push_back(std::move(*slots[i]));
        else
            out.skipped.push_back(std::move(failures[i]));
    }
    if (out.records.empty()) throw std::runtime_error("run_scenario: every path failed");
    std::vector<const PathRecord*> ptrs;
    ptrs.reserve(out.records.size());
    for (const auto& r : out.records) ptrs.push_back(&r);
    out.stats = conditional_stats(std::move(ptrs), plan.times, plan.eair_times,
                                  config.grid.horizon(), plan.histogram_time_index);
    return out;
}

//---------------------------------------------------------------------------//
// Sweeps
//---------------------------------------------------------------------------//

enum class SweepParameter { Zu0, Theta, F0, Lambda, DeltaVector, Omega, Demographics };

using SweepValue = std::variant<double, Vec4, OmegaKind, DemographicSchedule>;

struct SweepSpec {
    SweepParameter parameter = SweepParameter::Zu0;
    std::vector<SweepValue> values;
    ScenarioConfig base;
    bool shared_seed = true;
    // Re-derive zu0 for this initial relative surplus after applying each value.
    std::optional<double> recalibrate_target;
};

struct SweepPoint {
    SweepValue value;
    ScenarioConfig config;
    ScenarioResult result;
};

/// Copy of `base` with one field replaced.
inline ScenarioConfig apply_sweep_value(const ScenarioConfig& base, SweepParameter parameter,
                                        const SweepValue& value) {
    ScenarioConfig c = base;
    auto scalar = [&]() {
        if (const auto* d = std::get_if<double>(&value)) return *d;
        throw std::invalid_argument("sweep value must be a number for this parameter");
    };
    switch (parameter) {
        case SweepParameter::Zu0: c.prefs.zu0 = scalar(); break;
        case SweepParameter::Theta: c.prefs.theta = scalar(); break;
        case SweepParameter::F0: c.f0 = scalar(); break;
        case SweepParameter::Lambda: c.market.lambda = scalar(); break;
        case SweepParameter::DeltaVector:
            if (const auto* v = std::get_if<Vec4>(&value))
                c.prefs.delta = *v;
            else
                throw std::invalid_argument("delta sweep values must be 4-vectors");
            break;
        case SweepParameter::Omega:
            if (const auto* v = std::get_if<OmegaKind>(&value))
                c.prefs.omega = *v;
            else
                throw std::invalid_argument("omega sweep values must be omega kinds");
            break;
        case SweepParameter::Demographics:
            if (const auto* v = std::get_if<DemographicSchedule>(&value))
                c.demo = *v;
            else
                throw std::invalid_argument("demographic sweep values must be schedules");
            break;
    }
    return c;
}

/// Runs the sweep points one after the other and hands each to `sink`
/// without retaining it. Every point re-simulates its market from the seed;
/// with shared_seed all points see the same shocks, otherwise point i uses
/// master_seed + i.
template <class Sink>
void for_each_sweep_point(const SweepSpec& spec, const RunOptions& options, Sink&& sink) {
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        ScenarioConfig c = apply_sweep_value(spec.base, spec.parameter, spec.values[i]);
        if (!spec.shared_seed) c.master_seed = spec.base.master_seed + i;
        if (spec.recalibrate_target) c.prefs.zu0 = calibrate_zu0(c, *spec.recalibrate_target);
        auto result = run_scenario(c, options);
        sink(SweepPoint{spec.values[i], std::move(c), std::move(result)});
    }
}

inline std::vector<SweepPoint> run_sweep(const SweepSpec& spec, const RunOptions& options = {}) {
    std::vector<SweepPoint> out;
    out.reserve(spec.values.size());
    for_each_sweep_point(spec, options, [&out](SweepPoint&& p) { out.push_back(std::move(p)); });
    return out;
}

//---------------------------------------------------------------------------//
// Named single paths
//---------------------------------------------------------------------------//

struct PresetPaths {
    std::size_t optimistic = 0;
    std::size_t pessimistic = 0;
};

/// Ranks the first `probe` paths by terminal equity level (the buy-and-hold
/// portfolio) and returns the paths at the 75th and 25th percentile ranks.
inline PresetPaths select_preset_paths(const ScenarioConfig& config, std::size_t probe = 100) {
    if (probe < 4) throw std::invalid_argument("select_preset_paths: probe needs >= 4 paths");
    const ScenarioContext ctx(config);
    std::vector<std::pair<double, std::size_t>> terminal;
    terminal.reserve(probe);
    for (std::size_t i = 0; i < probe; ++i)
        terminal.emplace_back(simulate_market(config, ctx, i).s.back(), i);
    std::sort(terminal.begin(), terminal.end());
    const auto rank = [&](double q) {
        return terminal[static_cast<std::size_t>(std::lround(q * static_cast<double>(probe - 1)))]
            .second;
    };
    return {rank(0.75), rank(0.25)};
}

}  // namespace buffersim
