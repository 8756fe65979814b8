// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "buffersim/config.hpp"
#include "buffersim/harness.hpp"
#include "buffersim/metrics.hpp"

namespace buffersim {

/// 17 significant digits; non-finite values spelled nan / inf / -inf.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// JSON has no NaN or infinity; those become null.
inline ordered_json json_number(double v) {
    return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

struct RunManifest {
    std::string config_hash;
    std::uint64_t master_seed = 0;
    std::size_t n_paths = 0;
    double horizon_years = 0.0;
    int steps_per_year = 0;
    std::string engine_version = kEngineVersion;
    std::map<std::string, std::string> checksums;  // relative path -> FNV-1a 64

    ordered_json to_json(bool with_checksums = true) const {
        ordered_json j;
        j["config_hash"] = config_hash;
        j["master_seed"] = master_seed;
        j["n_paths"] = n_paths;
        j["grid"] = {{"horizon_years", horizon_years}, {"steps_per_year", steps_per_year}};
        j["engine_version"] = engine_version;
        if (with_checksums) {
            ordered_json sums = ordered_json::object();
            for (const auto& [file, sum] : checksums) sums[file] = sum;
            j["checksums"] = sums;
        }
        return j;
    }

    /// Single digest over all output checksums.
    std::string combined_checksum() const {
        std::string all;
        for (const auto& [file, sum] : checksums) all += file + "=" + sum + "\n";
        return hex64(fnv1a64(all));
    }
};

inline RunManifest make_manifest(const ScenarioConfig& c) {
    RunManifest m;
    m.config_hash = config_hash(c);
    m.master_seed = c.master_seed;
    m.n_paths = c.n_paths;
    m.horizon_years = c.grid.horizon();
    m.steps_per_year = c.grid.steps_per_year();
    return m;
}

/// Writes files under one directory and records their checksums.
class BundleWriter {
public:
    BundleWriter(std::filesystem::path root, RunManifest manifest)
        : root_(std::move(root)), manifest_(std::move(manifest)) {
        std::error_code ec;
        std::filesystem::create_directories(root_, ec);
        if (ec) throw std::runtime_error("cannot create " + root_.string() + ": " + ec.message());
    }

    void write(const std::string& relative, const std::string& content) {
        const auto path = root_ / relative;
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw std::runtime_error("cannot create " + path.parent_path().string() + ": " + ec.message());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        if (!out) throw std::runtime_error("cannot write " + path.string());
        manifest_.checksums[relative] = hex64(fnv1a64(content));
    }

    /// Writes manifest.json (not itself checksummed) and returns the manifest.
    RunManifest finish() {
        const auto path = root_ / "manifest.json";
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << manifest_.to_json().dump(2) << "\n";
        out.close();
        if (!out) throw std::runtime_error("cannot write " + path.string());
        return manifest_;
    }

    RunManifest& manifest() { return manifest_; }

private:
    std::filesystem::path root_;
    RunManifest manifest_;
};

//---------------------------------------------------------------------------//
// Renderers
//---------------------------------------------------------------------------//

inline std::string series_csv(const SummaryStats& s, Series series, Conditioning cond) {
    std::string out = "time,mean,median,q25,q75,survival,count\n";
    const auto& cells = s.get(series).by_condition[static_cast<std::size_t>(cond)];
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        const Cell& c = cells[i];
        out += format_number(s.times[i]) + "," + format_number(c.mean) + "," +
               format_number(c.median) + "," + format_number(c.q25) + "," +
               format_number(c.q75) + "," + format_number(s.survival[i]) + "," +
               std::to_string(c.count) + "\n";
    }
    return out;
}

inline std::string eair_csv(const SummaryStats& s) {
    std::string out =
        "t,y_bf,y_min,delta,y_bf_own_base,y_bf_solvent,y_min_solvent,n_solvent\n";
    for (const auto& r : s.eair)
        out += format_number(r.t) + "," + format_number(r.y_bf) + "," + format_number(r.y_min) +
               "," + format_number(r.delta) + "," + format_number(r.y_bf_own_base) + "," +
               format_number(r.y_bf_solvent) + "," + format_number(r.y_min_solvent) + "," +
               std::to_string(r.n_solvent) + "\n";
    return out;
}

/// EAIR table with one block of columns per scenario, rows y_bf / y_min /
/// delta, values in percent.
inline std::string eair_panel_csv(const std::vector<std::pair<std::string, const SummaryStats*>>& blocks) {
    std::string out = "measure";
    for (const auto& [label, stats] : blocks)
        for (const auto& r : stats->eair) out += "," + label + " t=" + format_number(r.t);
    out += "\n";
    const std::pair<const char*, double EairRow::*> rows[] = {
        {"y_bf", &EairRow::y_bf}, {"y_min", &EairRow::y_min}, {"delta", &EairRow::delta}};
    for (const auto& [name, field] : rows) {
        out += name;
        for (const auto& [label, stats] : blocks)
            for (const auto& r : stats->eair) out += "," + format_number(100.0 * (r.*field));
        out += "\n";
    }
    return out;
}

inline std::string histogram_csv(const Histogram& h) {
    std::string out = "bin_lo,bin_hi,all,solvent,depleted\n";
    for (std::size_t i = 0; i + 1 < h.edges.size(); ++i)
        out += format_number(h.edges[i]) + "," + format_number(h.edges[i + 1]) + "," +
               std::to_string(h.counts[0][i]) + "," + std::to_string(h.counts[1][i]) + "," +
               std::to_string(h.counts[2][i]) + "\n";
    return out;
}

/// Long-format dump of every path at the reporting times.
inline std::string per_path_csv(const std::vector<PathRecord>& records,
                                const std::vector<double>& times) {
    std::string out = "path,tau,time,solvent";
    for (auto name : kSeriesNames) out += "," + std::string(name);
    out += "\n";
    for (const auto& rec : records)
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
            out += std::to_string(rec.path_index) + "," + format_number(rec.tau) + "," +
                   format_number(times[ti]) + "," + (rec.solvent[ti] ? "1" : "0");
            for (double v : rec.at[ti]) out += "," + format_number(v);
            out += "\n";
        }
    return out;
}

inline ordered_json summary_to_json(const SummaryStats& s, const RunManifest& manifest,
                                    const std::vector<std::string>& skipped = {}) {
    ordered_json j;
    j["manifest"] = manifest.to_json(false);
    j["n_paths"] = s.n_paths;
    j["skipped_paths"] = skipped;
    j["times"] = s.times;
    ordered_json surv = ordered_json::array();
    for (double v : s.survival) surv.push_back(json_number(v));
    j["survival"] = surv;
    j["tau"] = {{"mean", json_number(s.tau.mean)},
                {"median", json_number(s.tau.median)},
                {"variance", json_number(s.tau.variance)},
                {"censored_fraction", json_number(s.tau.censored_fraction)},
                {"censored_at", s.times.empty() ? 0.0 : s.times.back()},
                {"n", s.tau.n}};
    ordered_json eair = ordered_json::array();
    for (const auto& r : s.eair)
        eair.push_back({{"t", r.t},
                        {"y_bf", json_number(r.y_bf)},
                        {"y_min", json_number(r.y_min)},
                        {"delta", json_number(r.delta)},
                        {"y_bf_own_base", json_number(r.y_bf_own_base)},
                        {"y_bf_solvent", json_number(r.y_bf_solvent)},
                        {"y_min_solvent", json_number(r.y_min_solvent)},
                        {"n_solvent", r.n_solvent}});
    j["eair"] = eair;
    ordered_json series = ordered_json::object();
    for (const auto& sum : s.series) {
        ordered_json by = ordered_json::object();
        for (std::size_t c = 0; c < 3; ++c) {
            ordered_json cols = {{"mean", ordered_json::array()},
                                 {"median", ordered_json::array()},
                                 {"q25", ordered_json::array()},
                                 {"q75", ordered_json::array()},
                                 {"count", ordered_json::array()}};
            for (const Cell& cell : sum.by_condition[c]) {
                cols["mean"].push_back(json_number(cell.mean));
                cols["median"].push_back(json_number(cell.median));
                cols["q25"].push_back(json_number(cell.q25));
                cols["q75"].push_back(json_number(cell.q75));
                cols["count"].push_back(cell.count);
            }
            by[std::string(kConditioningNames[c])] = cols;
        }
        series[std::string(series_name(sum.series))] = by;
    }
    j["series"] = series;
    ordered_json hist = ordered_json::object();
    for (const auto& [name, h] : s.histograms)
        hist[name] = {{"time", s.histogram_time},
                      {"edges", h.edges},
                      {"all", h.counts[0]},
                      {"solvent", h.counts[1]},
                      {"depleted", h.counts[2]}};
    j["histograms"] = hist;
    return j;
}

/// Writes the result bundle of one scenario run into `dir`.
inline RunManifest emit_results(const ScenarioConfig& config, const ScenarioResult& result,
                                const std::filesystem::path& dir, bool per_path = false) {
    BundleWriter w(dir, make_manifest(config));
    w.write("config.json", serialize_config(config));
    w.write("summary.json", summary_to_json(result.stats, w.manifest(), result.skipped).dump(2) + "\n");
    for (std::size_t s = 0; s < kSeriesCount; ++s)
        for (std::size_t c = 0; c < 3; ++c)
            w.write("series/" + std::string(kConditioningNames[c]) + "/" +
                        std::string(kSeriesNames[s]) + ".csv",
                    series_csv(result.stats, static_cast<Series>(s), static_cast<Conditioning>(c)));
    w.write("eair.csv", eair_csv(result.stats));
    for (const auto& [name, h] : result.stats.histograms)
        w.write("histograms/" + name + "_t" + format_number(result.stats.histogram_time) + ".csv",
                histogram_csv(h));
    if (per_path) w.write("paths.csv", per_path_csv(result.records, result.stats.times));
    return w.finish();
}

/// Every grid point of one path.
inline std::string path_timeseries_csv(const PathResult& p, const TimeGrid& grid) {
    std::string out =
        "time,s,nu,r,wage,eta,xi,zu,depletion_integral,fund,cushion,k_bound,pi_star,phi_star,"
        "risky_fraction,p_star,p_min,surplus,surplus_y,rho,benefit_ratio,benefit_ratio_min\n";
    const auto& m = p.market;
    const auto& pr = p.prefs;
    const auto& po = p.policy;
    for (std::size_t k = 0; k < grid.n_points(); ++k) {
        const double vals[] = {grid.time(k),
                               m.s[k],
                               m.nu[k],
                               m.r[k],
                               m.wage[k],
                               m.eta[k],
                               pr.xi[k],
                               pr.zu[k],
                               pr.depletion_integral[k],
                               po.fund[k],
                               po.cushion[k],
                               po.k_bound[k],
                               po.pi_star[k],
                               po.phi_star[k],
                               po.risky_fraction[k],
                               po.p_star[k],
                               po.p_min[k],
                               po.surplus[k],
                               po.surplus_y[k],
                               relative_surplus(po.p_star[k], po.p_min[k]),
                               benefit_ratio(po.p_star[k], m.wage[k]),
                               benefit_ratio(po.p_min[k], m.wage[k])};
        bool first = true;
        for (double v : vals) {
            if (!first) out += ",";
            out += format_number(v);
            first = false;
        }
        out += "\n";
    }
    return out;
}

}  // namespace buffersim
