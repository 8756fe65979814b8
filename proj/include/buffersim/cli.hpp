// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "buffersim/config.hpp"
#include "buffersim/harness.hpp"
#include "buffersim/results_io.hpp"

namespace buffersim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad command-line input detected after CLI11 parsing.
class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace cli_detail {

struct ScenarioSource {
    std::string preset;
    std::string config;
    std::string positional;

    void add_to(CLI::App* cmd, bool with_positional = false) {
        auto* p = cmd->add_option("--preset", preset, "built-in scenario name (see `presets`)");
        auto* c = cmd->add_option("--config", config, "scenario JSON file");
        p->excludes(c);
        if (with_positional)
            cmd->add_option("scenario", positional, "preset name or config file")->excludes(p)->excludes(c);
    }

    ScenarioConfig load() const {
        if (!preset.empty()) return preset_or_throw(preset);
        if (!config.empty()) return parse_config(config);
        if (!positional.empty()) return load_scenario(positional);
        throw UsageError("one of --preset or --config is required");
    }

private:
    static ScenarioConfig preset_or_throw(const std::string& name) {
        if (!is_preset(name)) throw UsageError("unknown preset \"" + name + "\"");
        return buffersim::preset(name);
    }
};

struct RunOverrides {
    std::optional<std::size_t> paths;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--paths", paths, "number of Monte Carlo paths");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--threads", threads,
                        "worker threads (default: BUFFERSIM_THREADS or all cores)");
    }

    void apply(ScenarioConfig& c) const {
        if (paths) c.n_paths = *paths;
        if (seed) c.master_seed = *seed;
        c.validate();
    }
};

inline double parse_double(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw UsageError(what + ": not a number: \"" + s + "\"");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    return parts;
}

inline double year_mean(const SummaryStats& s, Series series, double year) {
    for (std::size_t i = 0; i < s.times.size(); ++i)
        if (s.times[i] == year) return s.cell(series, Conditioning::All, i).mean;
    return std::numeric_limits<double>::quiet_NaN();
}

inline const EairRow* eair_at(const SummaryStats& s, double t) {
    for (const auto& r : s.eair)
        if (r.t == t) return &r;
    return nullptr;
}

inline void print_summary(std::ostream& out, const ScenarioConfig& c, const SummaryStats& s) {
    out << "scenario " << c.name << ": " << s.n_paths << " paths, " << c.grid.steps_per_year()
        << " steps/year, horizon " << format_number(c.grid.horizon()) << "y\n";
    out << "  tau mean " << format_number(s.tau.mean) << "  median " << format_number(s.tau.median)
        << "  variance " << format_number(s.tau.variance) << "  censored "
        << format_number(s.tau.censored_fraction) << "\n";
    if (s.survival.size() > 20) out << "  survival(20) " << format_number(s.survival[20]) << "\n";
    for (const auto& r : s.eair) {
        char line[160];
        std::snprintf(line, sizeof line, "  EAIR t=%-3g y_bf %.4f%%  y_min %.4f%%  delta %.4f%%\n",
                      r.t, 100.0 * r.y_bf, 100.0 * r.y_min, 100.0 * r.delta);
        out << line;
    }
}

/// "steady_state:0.3", "linear_ramp:0.3:0.5:40".
inline DemographicSchedule parse_demographics(const std::string& s, double n_workers) {
    const auto parts = split(s, ':');
    try {
        if (parts.size() == 2 && parts[0] == "steady_state")
            return DemographicSchedule::steady_state(parse_double(parts[1], "dr0"), n_workers);
        if (parts.size() == 4 && parts[0] == "linear_ramp")
            return DemographicSchedule::linear_ramp(parse_double(parts[1], "dr_start"),
                                                    parse_double(parts[2], "dr_end"),
                                                    parse_double(parts[3], "ramp_years"),
                                                    n_workers);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    throw UsageError("demographics value must be steady_state:DR or linear_ramp:START:END:YEARS, got \"" +
                     s + "\"");
}

//---------------------------------------------------------------------------//
// Subcommands
//---------------------------------------------------------------------------//

inline int cmd_presets(std::ostream& out) {
    for (const auto& p : preset_list()) {
        char line[160];
        std::snprintf(line, sizeof line, "%-22s %s\n", p.name.c_str(), p.description.c_str());
        out << line;
    }
    return kExitOk;
}

inline int cmd_validate(const ScenarioSource& src, bool print, std::ostream& out) {
    const ScenarioConfig c = src.load();
    if (print)
        out << serialize_config(c);
    else
        out << "ok " << c.name << " config_hash=" << config_hash(c) << "\n";
    return kExitOk;
}

inline int cmd_calibrate(const ScenarioSource& src, double target, std::ostream& out) {
    const ScenarioConfig c = src.load();
    if (!(target > 0.0)) throw UsageError("--target must be positive");
    out << format_number(calibrate_zu0(c, target)) << "\n";
    return kExitOk;
}

inline int cmd_simulate(const ScenarioSource& src, const RunOverrides& ov, const std::string& which,
                        std::size_t probe, const std::string& out_file, std::ostream& out) {
    ScenarioConfig c = src.load();
    ov.apply(c);
    std::size_t index = 0;
    if (which == "optimistic" || which == "pessimistic") {
        const auto presets = select_preset_paths(c, probe);
        index = which == "optimistic" ? presets.optimistic : presets.pessimistic;
    } else {
        index = static_cast<std::size_t>(parse_double(which, "--path"));
    }
    const ScenarioContext ctx(c);
    const auto path = simulate_path(c, ctx, index);
    const std::string csv = path_timeseries_csv(path, c.grid);
    if (out_file.empty()) {
        out << csv;
    } else {
        std::ofstream f(out_file, std::ios::binary | std::ios::trunc);
        f << csv;
        f.close();
        if (!f) throw std::runtime_error("cannot write " + out_file);
        out << "path " << index << " (" << which << "), tau " << format_number(path.prefs.tau)
            << ", wrote " << out_file << "\n";
    }
    return kExitOk;
}

inline int cmd_montecarlo(const ScenarioSource& src, const RunOverrides& ov, std::string out_dir,
                          bool per_path, bool skip_errors, std::ostream& out, std::ostream& err) {
    ScenarioConfig c = src.load();
    ov.apply(c);
    if (out_dir.empty()) out_dir = "buffersim-out/" + c.name;
    RunOptions opts{ov.threads, skip_errors ? ErrorPolicy::SkipAndReport : ErrorPolicy::FailFast};
    const auto result = run_scenario(c, opts);
    for (const auto& msg : result.skipped) err << "skipped " << msg << "\n";
    const auto manifest = emit_results(c, result, out_dir, per_path);
    print_summary(out, c, result.stats);
    out << "  wrote " << out_dir << "  checksum " << manifest.combined_checksum() << "\n";
    return kExitOk;
}

struct SweepArgs {
    std::string parameter;
    std::vector<std::string> values;
    std::optional<double> recalibrate;
    bool independent_seeds = false;
    std::string out_dir;
};

inline int cmd_sweep(const ScenarioSource& src, const RunOverrides& ov, const SweepArgs& args,
                     std::ostream& out) {
    ScenarioConfig base = src.load();
    ov.apply(base);
    SweepSpec spec;
    spec.base = base;
    spec.shared_seed = !args.independent_seeds;
    spec.recalibrate_target = args.recalibrate;

    const std::string& p = args.parameter;
    std::vector<std::string> labels = args.values;
    for (const auto& v : args.values) {
        if (p == "zu0" || p == "theta" || p == "f0" || p == "lambda") {
            spec.values.emplace_back(parse_double(v, p));
        } else if (p == "rho0") {
            // Initial relative surplus, mapped to zu0 through the calibration.
            const double rho = parse_double(v, p);
            if (!(rho > 0.0)) throw UsageError("rho0 values must be positive");
            spec.values.emplace_back(calibrate_zu0(base, rho));
        } else if (p == "delta") {
            const auto parts = split(v, ',');
            if (parts.size() != 4) throw UsageError("delta values need 4 comma-separated entries");
            Vec4 d{};
            for (std::size_t i = 0; i < 4; ++i) d[i] = parse_double(parts[i], "delta");
            spec.values.emplace_back(d);
        } else if (p == "omega") {
            try {
                spec.values.emplace_back(omega_kind_from_string(v));
            } catch (const ConfigError& e) {
                throw UsageError(e.what());
            }
        } else if (p == "demographics") {
            spec.values.emplace_back(parse_demographics(v, base.demo.workers()));
        }
    }
    if (p == "zu0" || p == "rho0")
        spec.parameter = SweepParameter::Zu0;
    else if (p == "theta")
        spec.parameter = SweepParameter::Theta;
    else if (p == "f0")
        spec.parameter = SweepParameter::F0;
    else if (p == "lambda")
        spec.parameter = SweepParameter::Lambda;
    else if (p == "delta")
        spec.parameter = SweepParameter::DeltaVector;
    else if (p == "omega")
        spec.parameter = SweepParameter::Omega;
    else
        spec.parameter = SweepParameter::Demographics;

    const std::string dir = args.out_dir.empty() ? "buffersim-out/sweep-" + p : args.out_dir;
    BundleWriter writer(dir, make_manifest(base));
    std::string table =
        "index,value,zu0,initial_relative_surplus,tau_mean,tau_median,tau_variance,"
        "tau_censored_fraction,survival_t20,p_star_mean_t10,p_star_mean_t20,p_star_mean_t30,"
        "p_star_mean_t40,y_bf_t10,y_bf_t20,y_bf_t30,y_bf_t40,y_min_t10,y_min_t20,y_min_t30,"
        "y_min_t40\n";
    std::vector<std::pair<std::string, SummaryStats>> kept;
    std::size_t index = 0;
    RunOptions opts{ov.threads, ErrorPolicy::FailFast};
    for_each_sweep_point(spec, opts, [&](SweepPoint&& pt) {
        char sub[32];
        std::snprintf(sub, sizeof sub, "point_%03zu", index);
        const auto manifest = emit_results(pt.config, pt.result, std::filesystem::path(dir) / sub);
        writer.manifest().checksums[std::string(sub) + "/manifest"] = manifest.combined_checksum();
        const auto& s = pt.result.stats;
        std::string row = std::to_string(index) + "," + labels[index] + "," +
                          format_number(pt.config.prefs.zu0) + "," +
                          format_number(initial_relative_surplus(pt.config)) + "," +
                          format_number(s.tau.mean) + "," + format_number(s.tau.median) + "," +
                          format_number(s.tau.variance) + "," +
                          format_number(s.tau.censored_fraction) + "," +
                          format_number(s.survival.size() > 20 ? s.survival[20]
                                                               : std::numeric_limits<double>::quiet_NaN());
        for (double y : {10.0, 20.0, 30.0, 40.0})
            row += "," + format_number(year_mean(s, Series::PStar, y));
        for (double y : {10.0, 20.0, 30.0, 40.0}) {
            const auto* r = eair_at(s, y);
            row += "," + format_number(r ? r->y_bf : std::numeric_limits<double>::quiet_NaN());
        }
        for (double y : {10.0, 20.0, 30.0, 40.0}) {
            const auto* r = eair_at(s, y);
            row += "," + format_number(r ? r->y_min : std::numeric_limits<double>::quiet_NaN());
        }
        table += row + "\n";
        out << "[" << index << "] " << p << "=" << labels[index] << "  tau mean "
            << format_number(s.tau.mean) << "\n";
        kept.emplace_back(labels[index], s);
        ++index;
    });
    writer.write("sweep.csv", table);
    std::vector<std::pair<std::string, const SummaryStats*>> blocks;
    for (const auto& [label, stats] : kept) blocks.emplace_back(label, &stats);
    writer.write("eair_panel.csv", eair_panel_csv(blocks));
    const auto manifest = writer.finish();
    out << "sweep over " << p << ": " << kept.size() << " points, wrote " << dir << "  checksum "
        << manifest.combined_checksum() << "\n";
    return kExitOk;
}

}  // namespace cli_detail

//---------------------------------------------------------------------------//
/*!
 * Entry point of the buffersim tool. Exit codes: 0 ok, 1 runtime failure,
 * 2 usage error.
 */
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;
    CLI::App app{"buffersim: Monte Carlo engine for a PAYG pension scheme with a buffer fund"};
    app.name("buffersim");
    app.require_subcommand(1);

    auto* presets_cmd = app.add_subcommand("presets", "list built-in scenarios");

    ScenarioSource validate_src;
    bool print = false;
    auto* validate_cmd = app.add_subcommand("validate", "parse and validate a scenario without running it");
    validate_src.add_to(validate_cmd, true);
    validate_cmd->add_flag("--print", print, "print the canonical config document");

    ScenarioSource calib_src;
    double target = 0.0;
    auto* calib_cmd = app.add_subcommand("calibrate-zu0", "closed-form zu0 for a target initial relative surplus");
    calib_src.add_to(calib_cmd);
    calib_cmd->add_option("--target", target, "initial relative surplus, e.g. 0.05")->required();

    ScenarioSource sim_src;
    RunOverrides sim_ov;
    std::string which = "optimistic";
    std::size_t probe = 100;
    std::string sim_out;
    auto* sim_cmd = app.add_subcommand("simulate", "dump every grid point of one path");
    sim_src.add_to(sim_cmd);
    sim_ov.add_to(sim_cmd);
    sim_cmd->add_option("--path", which, "optimistic, pessimistic or a path index");
    sim_cmd->add_option("--probe", probe, "paths ranked when picking optimistic/pessimistic");
    sim_cmd->add_option("--out", sim_out, "CSV file (default: stdout)");

    ScenarioSource mc_src;
    RunOverrides mc_ov;
    std::string mc_out;
    bool per_path = false;
    bool skip_errors = false;
    auto* mc_cmd = app.add_subcommand("montecarlo", "run a scenario and write the result bundle");
    mc_src.add_to(mc_cmd);
    mc_ov.add_to(mc_cmd);
    mc_cmd->add_option("--out", mc_out, "output directory (default: buffersim-out/<name>)");
    mc_cmd->add_flag("--per-path", per_path, "also write paths.csv");
    mc_cmd->add_flag("--skip-errors", skip_errors, "drop failing paths instead of aborting");

    ScenarioSource sw_src;
    RunOverrides sw_ov;
    SweepArgs sw;
    auto* sw_cmd = app.add_subcommand("sweep", "run one scenario per parameter value");
    sw_src.add_to(sw_cmd);
    sw_ov.add_to(sw_cmd);
    sw_cmd->add_option("--parameter", sw.parameter, "parameter to vary")
        ->required()
        ->check(CLI::IsMember({"zu0", "rho0", "theta", "f0", "lambda", "delta", "omega", "demographics"}));
    sw_cmd->add_option("--value", sw.values, "one sweep value (repeatable)");
    sw_cmd->add_option("--recalibrate", sw.recalibrate,
                       "recompute zu0 for this initial relative surplus at every point");
    sw_cmd->add_flag("--independent-seeds", sw.independent_seeds,
                     "use master_seed + i at point i instead of common random numbers");
    sw_cmd->add_option("--out", sw.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        const CLI::App* failing = &app;
        for (auto* sub : app.get_subcommands()) failing = sub;
        err << failing->help();
        return kExitUsage;
    }

    try {
        if (presets_cmd->parsed()) return cmd_presets(out);
        if (validate_cmd->parsed()) return cmd_validate(validate_src, print, out);
        if (calib_cmd->parsed()) return cmd_calibrate(calib_src, target, out);
        if (sim_cmd->parsed()) return cmd_simulate(sim_src, sim_ov, which, probe, sim_out, out);
        if (mc_cmd->parsed())
            return cmd_montecarlo(mc_src, mc_ov, mc_out, per_path, skip_errors, out, err);
        if (sw_cmd->parsed()) return cmd_sweep(sw_src, sw_ov, sw, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace buffersim
