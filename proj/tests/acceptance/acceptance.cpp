// Acceptance suite. Usage: buffersim_acceptance [criterion...]
// Runs every criterion when called without arguments; exit status is 0 only
// if all requested criteria pass.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "buffersim/buffersim.hpp"

using namespace buffersim;

namespace {

struct Report {
    bool pass = true;
    std::vector<std::string> lines;

    void check(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4))) {
        char buf[512];
        va_list args;
        va_start(args, fmt);
        std::vsnprintf(buf, sizeof buf, fmt, args);
        va_end(args);
        lines.push_back(std::string(ok ? "    ok    " : "    MISS  ") + buf);
        pass = pass && ok;
    }
    void note(const std::string& s) { lines.push_back("    note  " + s); }
};

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

const EairRow& eair_row(const SummaryStats& s, double t) {
    for (const auto& r : s.eair)
        if (r.t == t) return r;
    throw std::runtime_error("no EAIR row for t=" + std::to_string(t));
}

// Monte Carlo runs reused by several criteria within one process.
const SummaryStats& scenario(const std::string& name) {
    static std::map<std::string, SummaryStats> cache;
    auto it = cache.find(name);
    if (it == cache.end()) {
        const auto c = preset(name);
        it = cache.emplace(name, run_scenario(c).stats).first;
    }
    return it->second;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

//---------------------------------------------------------------------------//

void criterion_1(Report& r) {
    const auto& ss = scenario("table1_base");
    const auto& bb = scenario("table1_bb");
    for (double t : {10.0, 20.0, 30.0}) {
        const double y = 100.0 * eair_row(ss, t).y_min;
        r.check(within(y, 2.00, 0.05), "SS y_min(t=%g) = %.3f%%, target 2.00 +/- 0.05", t, y);
    }
    const double ss_bf = 100.0 * eair_row(ss, 10).y_bf;
    r.check(within(ss_bf, 3.09, 0.15), "SS y_bf(t=10) = %.3f%%, target 3.09 +/- 0.15", ss_bf);
    const double bb_min = 100.0 * eair_row(bb, 10).y_min;
    r.check(within(bb_min, 0.41, 0.05), "BB y_min(t=10) = %.3f%%, target 0.41 +/- 0.05", bb_min);
    const double bb_bf = 100.0 * eair_row(bb, 10).y_bf;
    r.check(within(bb_bf, 1.61, 0.15), "BB y_bf(t=10) = %.3f%%, target 1.61 +/- 0.15", bb_bf);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "y_bf with p*_0 as the first flow instead of p_min_0: SS %.3f%%, BB %.3f%%",
                  100.0 * eair_row(ss, 10).y_bf_own_base, 100.0 * eair_row(bb, 10).y_bf_own_base);
    r.note(buf);
}

void criterion_2(Report& r) {
    const auto& ss = scenario("table1_base");
    const auto& bb = scenario("table1_bb");
    r.check(within(ss.tau.mean, 28.0, 1.0), "SS mean tau = %.2fy, target 28 +/- 1", ss.tau.mean);
    r.check(within(bb.tau.mean, 23.0, 1.0), "BB mean tau = %.2fy, target 23 +/- 1", bb.tau.mean);
    r.check(ss.survival.at(20) > 0.80, "SS survival(20) = %.4f, target > 0.80", ss.survival.at(20));
    r.check(within(bb.survival.at(20), 0.64, 0.03), "BB survival(20) = %.4f, target 0.64 +/- 0.03",
            bb.survival.at(20));
}

void criterion_3(Report& r) {
    const auto& zero = scenario("bb_delta_zero");
    const auto& base = scenario("table1_bb");
    r.check(within(zero.tau.mean, 24.25, 0.5), "BB delta=0 mean tau = %.2fy, target 24.25 +/- 0.5",
            zero.tau.mean);
    r.check(within(zero.tau.variance, 2.0, 0.5), "BB delta=0 var tau = %.3f, target 2 +/- 25%%",
            zero.tau.variance);
    r.check(within(base.tau.variance, 37.0, 0.15 * 37.0),
            "BB base delta var tau = %.2f, target 37 +/- 15%%", base.tau.variance);
    const double bf = 100.0 * eair_row(zero, 10).y_bf;
    r.check(within(bf, 1.51, 0.15), "BB delta=0 y_bf(t=10) = %.3f%%, target 1.51 +/- 0.15", bf);
}

// Grid: initial relative surplus 1.5% .. 5% in steps of 0.25pp, each mapped
// to zu0 by calibration, on the baby-boom scenario with common random numbers.
void criterion_4(Report& r) {
    auto base = preset("table1_bb");
    base.n_paths = 2000;
    SweepSpec spec;
    spec.base = base;
    spec.parameter = SweepParameter::Zu0;
    std::vector<double> rhos;
    for (int i = 0; i <= 14; ++i) rhos.push_back(0.015 + 0.0025 * i);
    for (double rho : rhos) spec.values.emplace_back(calibrate_zu0(base, rho));

    std::size_t best = 0;
    double best_mean = -1.0;
    std::vector<double> taus;
    std::size_t i = 0;
    for_each_sweep_point(spec, {}, [&](SweepPoint&& pt) {
        const double m = pt.result.stats.cell(Series::PStar, Conditioning::All, 30).mean;
        taus.push_back(pt.result.stats.tau.mean);
        if (m > best_mean) {
            best_mean = m;
            best = i;
        }
        ++i;
    });
    auto paper = base;
    paper.prefs.zu0 = 14727.0;
    const double rho_paper = initial_relative_surplus(paper);
    const double rho_best = rhos[best];
    const double zu_best = std::get<double>(spec.values[best]);
    r.check(std::abs(rho_best - rho_paper) <= 0.0025 + 1e-12,
            "argmax mean p*_30 at zu0 = %.0f (rho0 %.2f%%); zu0 = 14727 is rho0 %.3f%%, one cell = 0.25pp",
            zu_best, 100.0 * rho_best, 100.0 * rho_paper);
    r.check(within(100.0 * rho_best, 2.75, 0.25), "implied initial surplus %.2f%%, target 2.75 +/- 0.25",
            100.0 * rho_best);
    r.check(within(taus[best], 37.5, 1.0), "mean tau at argmax = %.2fy (censored at 40), target 37.5 +/- 1",
            taus[best]);
}

void criterion_5(Report& r) {
    const auto c = preset("table1_base");
    const double zu0 = calibrate_zu0(c, 0.05);
    r.check(zu0 == 1296.0, "calibrate_zu0(0.05) = %.17g, target exactly 1296", zu0);
    auto cal = c;
    cal.prefs.zu0 = zu0;
    const ScenarioContext ctx(cal);
    const auto p = simulate_path(cal, ctx, 0);
    const double rho = relative_surplus(p.policy.p_star[0], p.policy.p_min[0]);
    r.check(std::abs(rho - 0.05) <= 1e-12, "realized rho_0 = %.17g", rho);
}

void criterion_6(Report& r) {
    const std::size_t paths = 200;
    const auto bb = preset("table1_bb");
    const double c0 = bb.initial_contributions();
    const ScenarioContext ctx(bb);

    std::size_t tau_mismatch = 0, rf_mismatch = 0, surplus_mismatch = 0, violations = 0;
    std::size_t surplus_points = 0;
    double recomputed_gap = 0.0;
    auto admissible = [&](const PathResult& p) {
        for (std::size_t k = 0; k < p.policy.p_star.size(); ++k)
            if (!(p.policy.p_star[k] >= p.policy.p_min[k]) || !(p.policy.fund[k] >= p.policy.k_bound[k]))
                ++violations;
    };
    auto ss = preset("table1_base");
    const ScenarioContext ss_ctx(ss);
    for (std::size_t i = 0; i < paths; ++i) {
        const auto market = simulate_market(bb, ctx, i);
        std::vector<PathResult> runs;
        for (double scale : {0.5, 1.0, 1.5}) {
            auto c = bb;
            c.f0 = scale * c0;
            runs.push_back(solve_path(c, ctx, market));
            admissible(runs.back());
        }
        for (std::size_t v = 1; v < runs.size(); ++v) {
            if (!same_bits(runs[v].prefs.tau, runs[0].prefs.tau)) ++tau_mismatch;
            for (std::size_t k = 0; k < market.s.size(); ++k)
                if (!same_bits(runs[v].policy.risky_fraction[k], runs[0].policy.risky_fraction[k]))
                    ++rf_mismatch;
        }
        const auto steady = solve_path(ss, ss_ctx, market);
        admissible(steady);
        const auto& boom = runs[1];
        for (std::size_t k = 0; k < market.s.size(); ++k) {
            if (!steady.prefs.solvent_at(k) || !boom.prefs.solvent_at(k)) break;
            ++surplus_points;
            if (!same_bits(steady.policy.surplus[k], boom.policy.surplus[k])) ++surplus_mismatch;
            // p* - p_min recomputed from the stored sums differs only by rounding.
            const double a = steady.policy.p_star[k] - steady.policy.p_min[k];
            const double b = boom.policy.p_star[k] - boom.policy.p_min[k];
            recomputed_gap = std::max(recomputed_gap, std::abs(a - b) / std::abs(b));
        }
    }
    r.check(tau_mismatch == 0, "tau bit-identical across F0 in {0.5, 1, 1.5} C0 (%zu paths, %zu mismatches)",
            paths, tau_mismatch);
    r.check(rf_mismatch == 0, "risky fraction bit-identical across F0 (%zu mismatching grid points)",
            rf_mismatch);
    r.check(surplus_mismatch == 0,
            "surplus path bit-identical SS vs BB with omega = 1 over %zu points before either depletes",
            surplus_points);
    char buf[160];
    std::snprintf(buf, sizeof buf, "p* - p_min recomputed from p* and p_min: max relative gap %.1e",
                  recomputed_gap);
    r.note(buf);
    r.check(violations == 0, "p* >= p_min and F* >= K at every grid point (%zu violations)", violations);
}

void criterion_7(Report& r) {
    const std::size_t paths = 100;
    for (int spy : {120, 1200}) {
        auto c = preset("table1_bb");
        c.grid = TimeGrid(40.0, spy);
        const double tol = spy == 120 ? 0.01 : 0.001;
        const ScenarioContext ctx(c);
        double zu_gap = 0.0, fund_gap = 0.0;
        std::size_t zu_bad = 0, fund_bad = 0;
        for (std::size_t i = 0; i < paths; ++i) {
            const auto p = simulate_path(c, ctx, i);
            const auto zu = zu_sde_crosscheck(p.market, p.prefs, c.prefs, ctx.dd, c.grid, tol);
            const auto fund = fund_crosscheck(p.market, p.prefs, p.policy, c.pension, c.prefs, ctx.dd,
                                              c.f0, c.grid, tol);
            zu_gap = std::max(zu_gap, zu.max_relative_gap);
            fund_gap = std::max(fund_gap, fund.max_relative_gap);
            zu_bad += zu.diverged();
            fund_bad += fund.diverged();
        }
        r.check(zu_bad == 0, "dt=1/%d: Zu SDE vs closed form, max rel gap %.2e (tol %.0e), %zu paths off",
                spy, zu_gap, tol, zu_bad);
        r.check(fund_bad == 0,
                "dt=1/%d: fund SDE vs closed form, max rel gap %.2e (tol %.0e), %zu paths off", spy,
                fund_gap, tol, fund_bad);
    }
}

// Running mean and variance of M_t - M_0 at monthly times.
struct Increments {
    std::vector<double> sum, sum_sq;
    explicit Increments(std::size_t n) : sum(n, 0.0), sum_sq(n, 0.0) {}
    void add(std::size_t j, double d) {
        sum[j] += d;
        sum_sq[j] += d * d;
    }
    double mean(std::size_t j, double n) const { return sum[j] / n; }
    double se(std::size_t j, double n) const {
        const double m = mean(j, n);
        return std::sqrt(std::max(0.0, (sum_sq[j] / n - m * m) / (n - 1.0)));
    }
};

void criterion_8(Report& r) {
    const auto c = preset("martingale_theta05");
    const ScenarioContext ctx(c);
    const std::size_t stride = static_cast<std::size_t>(c.grid.steps_per_year() / 12);
    const std::size_t months = c.grid.n_steps() / stride;
    Increments opt(months + 1), inflated(months + 1), gap(months + 1), year_step(6);
    std::size_t depleted = 0;
    for (std::size_t i = 0; i < c.n_paths; ++i) {
        const auto p = simulate_path(c, ctx, i);
        depleted += p.prefs.tau_index.has_value();
        const auto m = evaluate_utility_process(p.policy, p.prefs, c.prefs.theta, c.grid);
        const auto more = scaled_payout_policy(p.policy, p.prefs, p.market, ctx.dd, c.prefs.theta, 1.1);
        const auto m2 = evaluate_utility_process(more, p.prefs, c.prefs.theta, c.grid);
        for (std::size_t j = 0; j <= months; ++j) {
            const std::size_t k = j * stride;
            opt.add(j, m[k] - m[0]);
            inflated.add(j, m2[k] - m2[0]);
            gap.add(j, (m2[k] - m2[0]) - (m[k] - m[0]));
        }
        for (std::size_t y = 1; y <= 5; ++y)
            year_step.add(y, m2[y * 12 * stride] - m2[(y - 1) * 12 * stride]);
    }
    const double n = static_cast<double>(c.n_paths);
    double worst_z = 0.0, worst_up = -1e300, worst_step = -1e300;
    for (std::size_t j = 1; j <= months; ++j) {
        worst_z = std::max(worst_z, std::abs(opt.mean(j, n)) / opt.se(j, n));
        worst_up = std::max(worst_up, inflated.mean(j, n) / inflated.se(j, n));
    }
    for (std::size_t y = 1; y <= 5; ++y)
        worst_step = std::max(worst_step, year_step.mean(y, n) / year_step.se(y, n));
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu of %zu paths deplete within the horizon", depleted, c.n_paths);
    r.note(buf);
    r.check(worst_z <= 3.0,
            "optimal: |mean(M_t - M_0)| / SE over 60 monthly times, worst %.2f (limit 3)", worst_z);
    r.check(worst_up <= 3.0,
            "inflated pension (x1.1): mean(M_t - M_0) / SE never significantly positive, worst %.2f",
            worst_up);
    r.check(worst_step <= 3.0,
            "inflated pension: year-on-year increments not significantly positive, worst z %.2f",
            worst_step);
    const double z_gap = gap.mean(months, n) / gap.se(months, n);
    r.check(gap.mean(months, n) < 0.0,
            "inflated minus optimal at t=5: %.4g (z %.1f), below the optimum", gap.mean(months, n), z_gap);
}

void criterion_9(Report& r) {
    const auto c = preset("table1_base");
    const ScenarioContext ctx(c);
    const std::size_t paths = 4000;
    double sxy = 0, sxx = 0, syy = 0;
    const std::vector<double> check_years{1, 5, 10, 20, 40};
    std::vector<double> sum(check_years.size(), 0.0), sum_sq(check_years.size(), 0.0);
    std::size_t negative = 0;
    for (std::size_t i = 0; i < paths; ++i) {
        const auto m = simulate_market(c, ctx, i);
        if (i < 200)
            for (const auto& db : m.correlated_increments) {
                sxy += db[kEquity] * db[kVariance];
                sxx += db[kEquity] * db[kEquity];
                syy += db[kVariance] * db[kVariance];
            }
        for (double v : m.nu) negative += v < 0.0;
        for (std::size_t j = 0; j < check_years.size(); ++j) {
            const double x = m.r[c.grid.index_of_year(static_cast<std::size_t>(check_years[j]))];
            sum[j] += x;
            sum_sq[j] += x * x;
        }
    }
    const double corr = sxy / std::sqrt(sxx * syy);
    r.check(within(corr, -0.70, 0.02), "empirical corr(dB^S, dB^nu) = %.4f, target -0.70 +/- 0.02", corr);
    const double n = static_cast<double>(paths);
    double worst = 0.0;
    for (std::size_t j = 0; j < check_years.size(); ++j) {
        const double mean = sum[j] / n;
        const double se = std::sqrt((sum_sq[j] / n - mean * mean) / (n - 1.0));
        const double exact = c.market.b + (c.market.r0 - c.market.b) * std::exp(-c.market.a * check_years[j]);
        worst = std::max(worst, std::abs(mean - exact) / se);
    }
    r.check(worst <= 3.0, "Vasicek mean vs b + (r0 - b) e^(-a t) at t = 1,5,10,20,40: worst %.2f SE", worst);
    r.check(negative == 0, "variance non-negative on all %zu paths (%zu negative points)", paths, negative);
    double recon = 0.0;
    for (const auto& pw : {c.correlation, CorrelationStructure::Pairwise{-0.7, 0.1, 0.25, -0.05, 0.2, 0.3}}) {
        const CorrelationStructure cs(pw);
        const Mat4 back = multiply(cs.chol(), transpose(cs.chol()));
        for (std::size_t a = 0; a < 4; ++a)
            for (std::size_t b = 0; b < 4; ++b) recon = std::max(recon, std::abs(back[a][b] - cs.gamma()[a][b]));
    }
    r.check(recon <= 1e-12, "Cholesky reconstruction error %.2e (limit 1e-12)", recon);
}

void criterion_10(Report& r) {
    std::vector<double> geo, flat(41, 19.5);
    for (int k = 0; k <= 40; ++k) geo.push_back(19.5 * std::pow(1.02, k));
    const double y = eair(geo);
    r.check(std::abs(y - 0.02) <= 1e-10, "geometric 2%% stream: y = %.15f", y);
    const double y0 = eair(flat);
    r.check(std::abs(y0) <= 1e-10, "constant stream: y = %.3e", y0);
}

struct Criterion {
    int id;
    const char* title;
    std::function<void(Report&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "EAIR panel A, steady state and baby boom", criterion_1},
        {2, "depletion times and survival", criterion_2},
        {3, "sensitivity to the utility volatility delta", criterion_3},
        {4, "zu0 sweep maximizing the mean pension at t=30", criterion_4},
        {5, "zu0 calibration exactness", criterion_5},
        {6, "structural invariances under a shared seed", criterion_6},
        {7, "SDE validators against the closed forms", criterion_7},
        {8, "martingale and supermartingale utility processes", criterion_8},
        {9, "market model checks", criterion_9},
        {10, "EAIR solver", criterion_10},
    };
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) {
        char* end = nullptr;
        const long id = std::strtol(argv[i], &end, 10);
        if (*end != '\0' || id < 1 || id > 10) {
            std::fprintf(stderr, "usage: %s [criterion 1-10 ...]\n", argv[0]);
            return 2;
        }
        wanted.push_back(static_cast<int>(id));
    }
    if (wanted.empty())
        for (const auto& c : all) wanted.push_back(c.id);

    int failed = 0;
    for (int id : wanted) {
        const auto& c = all[static_cast<std::size_t>(id - 1)];
        Report rep;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(rep);
        } catch (const std::exception& e) {
            rep.check(false, "error: %s", e.what());
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %2d: %s  %s (%.1fs)\n", id, rep.pass ? "PASS" : "FAIL", c.title, secs);
        for (const auto& line : rep.lines) std::printf("%s\n", line.c_str());
        std::fflush(stdout);
        failed += rep.pass ? 0 : 1;
    }
    std::printf("%zu criteria run, %d failed\n", wanted.size(), failed);
    return failed == 0 ? 0 : 1;
}
