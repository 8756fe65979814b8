// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "json.hpp"

#include "buffersim/harness.hpp"

namespace buffersim {

using ordered_json = nlohmann::ordered_json;

/// Malformed or invalid scenario document. `where` is a key path such as
/// "market.kappa" or "line 3, column 7".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string where, const std::string& what)
        : std::runtime_error(where.empty() ? what : where + ": " + what),
          where_(std::move(where)) {}
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

namespace detail {

inline std::string join_key(const std::string& prefix, std::string_view key) {
    return prefix.empty() ? std::string(key) : prefix + "." + std::string(key);
}

/// Checks that `node` is an object holding exactly `required` (plus any of
/// `optional`).
inline void expect_keys(const ordered_json& node, const std::string& where,
                        std::initializer_list<std::string_view> required,
                        std::initializer_list<std::string_view> optional = {}) {
    if (!node.is_object()) throw ConfigError(where.empty() ? "<root>" : where, "expected an object");
    std::set<std::string_view> allowed(required);
    allowed.insert(optional.begin(), optional.end());
    for (const auto& item : node.items())
        if (!allowed.count(item.key()))
            throw ConfigError(join_key(where, item.key()), "unknown key");
    for (std::string_view key : required)
        if (!node.contains(key)) throw ConfigError(join_key(where, key), "missing required key");
}

inline double get_number(const ordered_json& node, const std::string& where, std::string_view key) {
    const auto& v = node.at(std::string(key));
    if (!v.is_number()) throw ConfigError(join_key(where, key), "expected a number");
    return v.get<double>();
}

inline std::uint64_t get_unsigned(const ordered_json& node, const std::string& where,
                                  std::string_view key) {
    const auto& v = node.at(std::string(key));
    if (!v.is_number_unsigned())
        throw ConfigError(join_key(where, key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::string get_string(const ordered_json& node, const std::string& where,
                              std::string_view key) {
    const auto& v = node.at(std::string(key));
    if (!v.is_string()) throw ConfigError(join_key(where, key), "expected a string");
    return v.get<std::string>();
}

inline std::vector<double> get_number_array(const ordered_json& node, const std::string& where,
                                            std::string_view key) {
    const auto& v = node.at(std::string(key));
    if (!v.is_array()) throw ConfigError(join_key(where, key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(join_key(where, key), "expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

}  // namespace detail

inline std::string to_string(OmegaKind kind) {
    return kind == OmegaKind::EqualWeight ? "equal_weight" : "dr_ratio";
}

inline OmegaKind omega_kind_from_string(const std::string& s) {
    if (s == "equal_weight") return OmegaKind::EqualWeight;
    if (s == "dr_ratio") return OmegaKind::DrRatio;
    throw ConfigError("preferences.omega", "expected \"equal_weight\" or \"dr_ratio\", got \"" + s + "\"");
}

//---------------------------------------------------------------------------//
// Serialization
//---------------------------------------------------------------------------//

inline ordered_json dependency_ratio_to_json(const DependencyRatio& ratio) {
    ordered_json j;
    std::visit(
        [&j](const auto& kind) {
            using K = std::decay_t<decltype(kind)>;
            if constexpr (std::is_same_v<K, SteadyState>) {
                j["kind"] = "steady_state";
                j["dr0"] = kind.dr0;
            } else if constexpr (std::is_same_v<K, LinearRamp>) {
                j["kind"] = "linear_ramp";
                j["dr_start"] = kind.dr_start;
                j["dr_end"] = kind.dr_end;
                j["ramp_years"] = kind.ramp_years;
            } else {
                j["kind"] = "custom";
                j["times"] = kind.times;
                j["values"] = kind.values;
            }
        },
        ratio);
    return j;
}

inline ordered_json to_json(const ScenarioConfig& c) {
    ordered_json j;
    j["name"] = c.name;
    const auto& m = c.market;
    j["market"] = {{"s0", m.s0},         {"equity_premium", m.equity_premium},
                   {"nu0", m.nu0},       {"nu_bar", m.nu_bar},
                   {"kappa", m.kappa},   {"sigma_nu", m.sigma_nu},
                   {"r0", m.r0},         {"b", m.b},
                   {"a", m.a},           {"sigma_r", m.sigma_r},
                   {"e0", m.e0},         {"lambda", m.lambda},
                   {"sigma_e", m.sigma_e}};
    const auto& p = c.correlation;
    j["correlation"] = {{"s_nu", p.s_nu}, {"s_r", p.s_r},   {"s_e", p.s_e},
                        {"nu_r", p.nu_r}, {"nu_e", p.nu_e}, {"r_e", p.r_e}};
    j["demographics"] = {{"n_workers", c.demo.workers()},
                         {"dependency_ratio", dependency_ratio_to_json(c.demo.ratio())}};
    j["pension"] = {{"alpha", c.pension.alpha}, {"k0", c.pension.k0}};
    j["preferences"] = {{"theta", c.prefs.theta},
                        {"beta", c.prefs.beta},
                        {"z0", c.prefs.z0},
                        {"zu0", c.prefs.zu0},
                        {"delta", c.prefs.delta},
                        {"omega", to_string(c.prefs.omega)}};
    j["grid"] = {{"horizon_years", c.grid.horizon()}, {"steps_per_year", c.grid.steps_per_year()}};
    j["simulation"] = {{"f0", c.f0}, {"n_paths", c.n_paths}, {"master_seed", c.master_seed}};
    return j;
}

/// Canonical text form, used for hashing and golden files.
inline std::string serialize_config(const ScenarioConfig& c) { return to_json(c).dump(2) + "\n"; }

//---------------------------------------------------------------------------//
// Parsing
//---------------------------------------------------------------------------//

inline DemographicSchedule demographics_from_json(const ordered_json& j) {
    using namespace detail;
    const std::string where = "demographics";
    expect_keys(j, where, {"n_workers", "dependency_ratio"});
    const double workers = get_number(j, where, "n_workers");
    const auto& dr = j.at("dependency_ratio");
    const std::string drw = "demographics.dependency_ratio";
    if (!dr.is_object() || !dr.contains("kind"))
        throw ConfigError(drw + ".kind", "missing required key");
    const std::string kind = get_string(dr, drw, "kind");
    try {
        if (kind == "steady_state") {
            expect_keys(dr, drw, {"kind", "dr0"});
            return {workers, SteadyState{get_number(dr, drw, "dr0")}};
        }
        if (kind == "linear_ramp") {
            expect_keys(dr, drw, {"kind", "dr_start", "dr_end", "ramp_years"});
            return {workers, LinearRamp{get_number(dr, drw, "dr_start"),
                                        get_number(dr, drw, "dr_end"),
                                        get_number(dr, drw, "ramp_years")}};
        }
        if (kind == "custom") {
            expect_keys(dr, drw, {"kind", "times", "values"});
            return {workers, CustomTable{get_number_array(dr, drw, "times"),
                                         get_number_array(dr, drw, "values")}};
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where, e.what());
    }
    throw ConfigError(drw + ".kind",
                      "expected \"steady_state\", \"linear_ramp\" or \"custom\", got \"" + kind + "\"");
}

/// Builds and validates a ScenarioConfig. Every key is required except
/// "name" (default "custom"); unknown keys are rejected.
inline ScenarioConfig config_from_json(const ordered_json& j) {
    using namespace detail;
    expect_keys(j, "",
                {"market", "correlation", "demographics", "pension", "preferences", "grid",
                 "simulation"},
                {"name"});
    ScenarioConfig c;
    c.name = j.contains("name") ? get_string(j, "", "name") : "custom";

    const auto& m = j.at("market");
    expect_keys(m, "market",
                {"s0", "equity_premium", "nu0", "nu_bar", "kappa", "sigma_nu", "r0", "b", "a",
                 "sigma_r", "e0", "lambda", "sigma_e"});
    auto num = [](const ordered_json& node, const char* where, const char* key) {
        return get_number(node, where, key);
    };
    c.market.s0 = num(m, "market", "s0");
    c.market.equity_premium = num(m, "market", "equity_premium");
    c.market.nu0 = num(m, "market", "nu0");
    c.market.nu_bar = num(m, "market", "nu_bar");
    c.market.kappa = num(m, "market", "kappa");
    c.market.sigma_nu = num(m, "market", "sigma_nu");
    c.market.r0 = num(m, "market", "r0");
    c.market.b = num(m, "market", "b");
    c.market.a = num(m, "market", "a");
    c.market.sigma_r = num(m, "market", "sigma_r");
    c.market.e0 = num(m, "market", "e0");
    c.market.lambda = num(m, "market", "lambda");
    c.market.sigma_e = num(m, "market", "sigma_e");

    const auto& corr = j.at("correlation");
    expect_keys(corr, "correlation", {"s_nu", "s_r", "s_e", "nu_r", "nu_e", "r_e"});
    c.correlation = {num(corr, "correlation", "s_nu"), num(corr, "correlation", "s_r"),
                     num(corr, "correlation", "s_e"),  num(corr, "correlation", "nu_r"),
                     num(corr, "correlation", "nu_e"), num(corr, "correlation", "r_e")};

    c.demo = demographics_from_json(j.at("demographics"));

    const auto& pen = j.at("pension");
    expect_keys(pen, "pension", {"alpha", "k0"});
    c.pension.alpha = num(pen, "pension", "alpha");
    c.pension.k0 = num(pen, "pension", "k0");

    const auto& pr = j.at("preferences");
    expect_keys(pr, "preferences", {"theta", "beta", "z0", "zu0", "delta", "omega"});
    c.prefs.theta = num(pr, "preferences", "theta");
    c.prefs.beta = num(pr, "preferences", "beta");
    c.prefs.z0 = num(pr, "preferences", "z0");
    c.prefs.zu0 = num(pr, "preferences", "zu0");
    const auto delta = get_number_array(pr, "preferences", "delta");
    if (delta.size() != 4)
        throw ConfigError("preferences.delta", "expected 4 entries (S, nu, r, e)");
    std::copy(delta.begin(), delta.end(), c.prefs.delta.begin());
    c.prefs.omega = omega_kind_from_string(get_string(pr, "preferences", "omega"));

    const auto& g = j.at("grid");
    expect_keys(g, "grid", {"horizon_years", "steps_per_year"});
    const std::uint64_t spy = get_unsigned(g, "grid", "steps_per_year");
    try {
        c.grid = TimeGrid(num(g, "grid", "horizon_years"), static_cast<int>(spy));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("grid", e.what());
    }

    const auto& s = j.at("simulation");
    expect_keys(s, "simulation", {"f0", "n_paths", "master_seed"});
    c.f0 = num(s, "simulation", "f0");
    c.n_paths = get_unsigned(s, "simulation", "n_paths");
    c.master_seed = get_unsigned(s, "simulation", "master_seed");

    try {
        c.validate();
    } catch (const NotPositiveDefinite& e) {
        throw ConfigError("correlation", e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError("", e.what());
    }
    return c;
}

inline ScenarioConfig parse_config_text(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // e.what() carries "line L, column C" for syntax errors.
        throw ConfigError("", std::string("parse error: ") + e.what());
    }
    return config_from_json(j);
}

inline ScenarioConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string(), "cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config_text(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string(), e.what());
    }
}

//---------------------------------------------------------------------------//
// Presets
//---------------------------------------------------------------------------//

struct PresetInfo {
    std::string name;
    std::string description;
};

inline const std::vector<PresetInfo>& preset_list() {
    static const std::vector<PresetInfo> list{
        {"table1_base", "base case, steady-state demographics (DR 0.3)"},
        {"table1_bb", "base case, baby boom (DR 0.3 -> 0.5 over 40 years)"},
        {"bb_delta_zero", "baby boom with zero utility volatility delta"},
        {"bb_omega_dr", "baby boom with retiree weights DR_t / DR_0"},
        {"bb_delta_e_positive", "baby boom with delta = (0, -0.2, -0.2, +0.2)"},
        {"martingale_theta05", "theta = 0.5, 5-year horizon, zu0 calibrated to 5%"},
    };
    return list;
}

inline bool is_preset(std::string_view name) {
    for (const auto& p : preset_list())
        if (p.name == name) return true;
    return false;
}

inline ScenarioConfig preset(std::string_view name) {
    ScenarioConfig c;  // defaults are the base case
    c.name = std::string(name);
    c.demo = DemographicSchedule::steady_state(0.3, 100.0);
    const auto baby_boom = DemographicSchedule::linear_ramp(0.3, 0.5, 40.0, 100.0);
    if (name == "table1_base") {
    } else if (name == "table1_bb") {
        c.demo = baby_boom;
    } else if (name == "bb_delta_zero") {
        c.demo = baby_boom;
        c.prefs.delta = {0.0, 0.0, 0.0, 0.0};
    } else if (name == "bb_omega_dr") {
        c.demo = baby_boom;
        c.prefs.omega = OmegaKind::DrRatio;
    } else if (name == "bb_delta_e_positive") {
        c.demo = baby_boom;
        c.prefs.delta = {0.0, -0.2, -0.2, 0.2};
    } else if (name == "martingale_theta05") {
        c.grid = TimeGrid(5.0, 120);
        c.prefs.theta = 0.5;
        c.prefs.z0 = 0.1;  // (1 / N^w_0)^theta
        c.prefs.zu0 = calibrate_zu0(c, 0.05);
    } else {
        throw ConfigError("", "unknown preset \"" + std::string(name) + "\"");
    }
    c.validate();
    return c;
}

/// A preset name or a path to a config file.
inline ScenarioConfig load_scenario(const std::string& preset_or_path) {
    if (is_preset(preset_or_path)) return preset(preset_or_path);
    if (std::filesystem::exists(preset_or_path)) return parse_config(preset_or_path);
    throw ConfigError("", "\"" + preset_or_path + "\" is neither a preset nor a readable file");
}

//---------------------------------------------------------------------------//
// Hashing
//---------------------------------------------------------------------------//

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

inline std::string config_hash(const ScenarioConfig& c) { return hex64(fnv1a64(serialize_config(c))); }

}  // namespace buffersim
