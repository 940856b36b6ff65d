// SPDX-License-Identifier: Apache-2.0
//
// risvec: RIS-assisted vehicular edge computing simulator and trainer
// Copyright (C) 2026 The risvec authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
#pragma once

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <atomic>
#include <exception>
#include <mutex>
#include <tuple>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "risvec/baselines.hpp"
#include "risvec/env.hpp"
#include "risvec/errors.hpp"
#include "risvec/marl.hpp"

#ifndef RISVEC_VERSION
#define RISVEC_VERSION "0.0.0"
#endif

namespace risvec {

inline constexpr const char* kCodeVersion = RISVEC_VERSION;
inline constexpr const char* kMetricsSchema = "risvec-metrics v1";
inline constexpr const char* kManifestSchema = "risvec-manifest v1";
inline constexpr const char* kOutputRootEnv = "RISVEC_OUTPUT_ROOT";

enum class Method { maddpg_bcd, maddpg_random_phase, ddpg, random_power };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::maddpg_bcd: return "maddpg-bcd";
        case Method::maddpg_random_phase: return "maddpg-random-phase";
        case Method::ddpg: return "ddpg";
        case Method::random_power: return "random-power";
    }
    return "?";
}

inline std::optional<Method> find_method(const std::string& s) {
    for (auto m : {Method::maddpg_bcd, Method::maddpg_random_phase, Method::ddpg, Method::random_power})
        if (s == to_string(m)) return m;
    return std::nullopt;
}

inline constexpr const char* kMethodChoices = "expected maddpg-bcd, maddpg-random-phase, ddpg or random-power";

inline Method parse_method(const std::string& s) {
    if (auto m = find_method(s)) return *m;
    throw ConfigError("method", "unknown method '" + s + "' (" + kMethodChoices + ")");
}

inline PhaseMode phase_mode_for(Method m) { return m == Method::maddpg_random_phase ? PhaseMode::random : PhaseMode::bcd; }

/// Sweep over one scalar environment key; "none" means a single run per repetition.
struct SweepSpec {
    std::string axis = "none";  // none | eta | N | c | b
    std::vector<double> values;
    friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct ExperimentSpec {
    std::string name = "experiment";
    Method method = Method::maddpg_bcd;
    EnvConfig env;
    TrainConfig train;
    SweepSpec sweep;
    int repetitions = 1;
    std::uint64_t base_seed = 1;
    std::string output_dir;  // empty: $RISVEC_OUTPUT_ROOT/<name>, else ./risvec-runs/<name>

    void validate() const {
        env.validate();
        train.validate();
        if (repetitions < 1) throw ConfigError("repetitions", "must be >= 1");
        static const std::set<std::string> axes{"none", "eta", "N", "c", "b"};
        if (!axes.count(sweep.axis)) throw ConfigError("sweep_axis", "unknown axis '" + sweep.axis + "' (expected none, eta, N, c or b)");
        if (sweep.axis != "none" && sweep.values.empty()) throw ConfigError("sweep_values", "sweep axis set but no values given");
        for (double v : sweep.values)
            if (!(v > 0.0) && !(sweep.axis == "b" && v == 0.0)) throw ConfigError("sweep_values", "sweep values must be positive");
    }
};

inline bool operator==(const RoadDescriptor& a, const RoadDescriptor& b) {
    return a.center == b.center && a.half_length == b.half_length;
}
inline bool operator==(const SystemGeometry& a, const SystemGeometry& b) {
    return a.bs_pos == b.bs_pos && a.ris_pos == b.ris_pos && a.wavelength == b.wavelength &&
           a.element_spacing == b.element_spacing && a.n_elements == b.n_elements;
}
inline bool operator==(const ChannelParams& a, const ChannelParams& b) {
    return a.rho == b.rho && a.alpha_rb == b.alpha_rb && a.alpha_kr == b.alpha_kr && a.rician_r == b.rician_r &&
           a.noise_power_w == b.noise_power_w;
}
inline bool operator==(const EnvConfig& a, const EnvConfig& b) {
    return a.vehicles == b.vehicles && a.bits == b.bits && a.slot_s == b.slot_s && a.arrival_rate == b.arrival_rate &&
           a.bandwidth_hz == b.bandwidth_hz && a.cycles_per_bit == b.cycles_per_bit && a.capacitance == b.capacitance &&
           a.f_max_hz == b.f_max_hz && a.p_max_o == b.p_max_o && a.p_max_l == b.p_max_l && a.w1 == b.w1 && a.w2 == b.w2 &&
           a.pen1 == b.pen1 && a.pen2 == b.pen2 && a.buffer_threshold == b.buffer_threshold &&
           a.overflow_margin == b.overflow_margin && a.q_norm == b.q_norm && a.task_unit == b.task_unit &&
           a.horizon == b.horizon && a.speed_min == b.speed_min && a.speed_max == b.speed_max && a.road == b.road &&
           a.geometry == b.geometry && a.channel == b.channel && a.phase_mode == b.phase_mode &&
           a.bcd_sweeps == b.bcd_sweeps && a.bcd_warm_start == b.bcd_warm_start;
}
inline bool operator==(const TrainConfig& a, const TrainConfig& b) {
    return a.lr_critic == b.lr_critic && a.lr_actor == b.lr_actor && a.gamma == b.gamma && a.tau == b.tau &&
           a.batch == b.batch && a.buffer_capacity == b.buffer_capacity && a.delay == b.delay &&
           a.episodes == b.episodes && a.warmup == b.warmup && a.noise_initial == b.noise_initial &&
           a.noise_decay == b.noise_decay && a.noise_floor == b.noise_floor && a.actor_hidden == b.actor_hidden &&
           a.local_critic_hidden == b.local_critic_hidden && a.global_critic_hidden == b.global_critic_hidden &&
           a.seed == b.seed;
}
inline bool operator==(const ExperimentSpec& a, const ExperimentSpec& b) {
    return a.name == b.name && a.method == b.method && a.env == b.env && a.train == b.train && a.sweep == b.sweep &&
           a.repetitions == b.repetitions && a.base_seed == b.base_seed && a.output_dir == b.output_dir;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline double parse_double(const std::string& key, const std::string& v, int line) {
    if (v.empty()) throw ConfigError(key, "expected a number", line);
    char* end = nullptr;
    errno = 0;
    const double d = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d))
        throw ConfigError(key, "'" + v + "' is not a finite number", line);
    return d;
}

inline long long parse_int(const std::string& key, const std::string& v, int line) {
    const double d = parse_double(key, v, line);
    if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ConfigError(key, "'" + v + "' is not an integer", line);
    return static_cast<long long>(d);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v, int line) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError(key, "'" + v + "' is not an unsigned integer", line);
    errno = 0;
    const auto x = std::strtoull(v.c_str(), nullptr, 10);
    if (errno == ERANGE) throw ConfigError(key, "value out of range", line);
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& v, int line) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key, "expected true or false", line);
}

inline Vec3 parse_vec3(const std::string& key, const std::string& v, int line) {
    const auto parts = split(v, ',');
    if (parts.size() != 3) throw ConfigError(key, "expected three comma-separated numbers", line);
    return {parse_double(key, parts[0], line), parse_double(key, parts[1], line), parse_double(key, parts[2], line)};
}

inline std::vector<int> parse_widths(const std::string& key, const std::string& v, int line) {
    std::vector<int> out;
    for (const auto& p : split(v, ',')) {
        const auto w = parse_int(key, p, line);
        if (w < 1 || w > 1 << 20) throw ConfigError(key, "hidden widths must be in [1, 2^20]", line);
        out.push_back(static_cast<int>(w));
    }
    if (out.empty()) throw ConfigError(key, "need at least one hidden layer", line);
    return out;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v, int line) {
    std::vector<double> out;
    if (v.empty()) return out;
    for (const auto& p : split(v, ',')) out.push_back(parse_double(key, p, line));
    return out;
}

inline std::string join_widths(const std::vector<int>& w) {
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
    return s;
}

inline std::string join_doubles(const std::vector<double>& w) {
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + fmt_double(w[i]);
    return s;
}

inline std::string fmt_vec3(const Vec3& v) { return fmt_double(v.x()) + "," + fmt_double(v.y()) + "," + fmt_double(v.z()); }

}  // namespace detail

/// Keys accepted in a config file, in serialization order.
inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "name", "method", "seed", "repetitions", "output", "episodes", "sweep_axis", "sweep_values",
        "K", "N", "b", "eta", "dt", "T", "W", "L", "c", "F_max", "P_max_o", "P_max_l",
        "w1", "w2", "pen1", "pen2", "buffer_threshold", "overflow_margin", "q_norm", "task_unit",
        "sigma2_w", "sigma2_dbm", "alpha_rb", "alpha_kr", "rho", "rician_R", "wavelength", "element_spacing",
        "bs", "ris", "intersection", "road_half_length", "speed_min", "speed_max",
        "phase_mode", "bcd_sweeps", "bcd_warm_start",
        "alpha_C", "alpha_A", "gamma", "tau", "I", "D", "d", "warmup",
        "noise_initial", "noise_decay", "noise_floor", "actor_hidden", "local_critic_hidden", "global_critic_hidden"};
    return keys;
}

inline const std::set<std::string>& required_config_keys() {
    static const std::set<std::string> keys{"K", "N", "b", "eta"};
    return keys;
}

/// Applies one key/value pair. `line` is used only for diagnostics.
inline void apply_config_key(ExperimentSpec& s, const std::string& key, const std::string& v, int line = 0) {
    using namespace detail;
    auto& e = s.env;
    auto& t = s.train;
    if (key == "name") s.name = v;
    else if (key == "method") {
        const auto m = find_method(v);
        if (!m) throw ConfigError(key, "unknown method '" + v + "' (" + kMethodChoices + ")", line);
        s.method = *m;
    }
    else if (key == "seed") s.base_seed = parse_u64(key, v, line);
    else if (key == "repetitions") s.repetitions = static_cast<int>(parse_int(key, v, line));
    else if (key == "output") s.output_dir = v;
    else if (key == "episodes") t.episodes = static_cast<int>(parse_int(key, v, line));
    else if (key == "sweep_axis") s.sweep.axis = v;
    else if (key == "sweep_values") s.sweep.values = parse_list(key, v, line);
    else if (key == "K") e.vehicles = static_cast<int>(parse_int(key, v, line));
    else if (key == "N") e.geometry.n_elements = static_cast<int>(parse_int(key, v, line));
    else if (key == "b") e.bits = static_cast<int>(parse_int(key, v, line));
    else if (key == "eta") e.arrival_rate = parse_double(key, v, line);
    else if (key == "dt") e.slot_s = parse_double(key, v, line);
    else if (key == "T") e.horizon = static_cast<int>(parse_int(key, v, line));
    else if (key == "W") e.bandwidth_hz = parse_double(key, v, line);
    else if (key == "L") e.cycles_per_bit = parse_double(key, v, line);
    else if (key == "c") e.capacitance = parse_double(key, v, line);
    else if (key == "F_max") e.f_max_hz = parse_double(key, v, line);
    else if (key == "P_max_o") e.p_max_o = parse_double(key, v, line);
    else if (key == "P_max_l") e.p_max_l = parse_double(key, v, line);
    else if (key == "w1") e.w1 = parse_double(key, v, line);
    else if (key == "w2") e.w2 = parse_double(key, v, line);
    else if (key == "pen1") e.pen1 = parse_double(key, v, line);
    else if (key == "pen2") e.pen2 = parse_double(key, v, line);
    else if (key == "buffer_threshold") e.buffer_threshold = parse_double(key, v, line);
    else if (key == "overflow_margin") e.overflow_margin = parse_double(key, v, line);
    else if (key == "q_norm") e.q_norm = parse_double(key, v, line);
    else if (key == "task_unit") e.task_unit = parse_double(key, v, line);
    else if (key == "sigma2_w") e.channel.noise_power_w = parse_double(key, v, line);
    else if (key == "sigma2_dbm") e.channel.noise_power_w = dbm_to_watts(parse_double(key, v, line));
    else if (key == "alpha_rb") e.channel.alpha_rb = parse_double(key, v, line);
    else if (key == "alpha_kr") e.channel.alpha_kr = parse_double(key, v, line);
    else if (key == "rho") e.channel.rho = parse_double(key, v, line);
    else if (key == "rician_R") e.channel.rician_r = parse_double(key, v, line);
    else if (key == "wavelength") e.geometry.wavelength = parse_double(key, v, line);
    else if (key == "element_spacing") e.geometry.element_spacing = parse_double(key, v, line);
    else if (key == "bs") e.geometry.bs_pos = parse_vec3(key, v, line);
    else if (key == "ris") e.geometry.ris_pos = parse_vec3(key, v, line);
    else if (key == "intersection") e.road.center = parse_vec3(key, v, line);
    else if (key == "road_half_length") e.road.half_length = parse_double(key, v, line);
    else if (key == "speed_min") e.speed_min = parse_double(key, v, line);
    else if (key == "speed_max") e.speed_max = parse_double(key, v, line);
    else if (key == "phase_mode") {
        if (v == "bcd") e.phase_mode = PhaseMode::bcd;
        else if (v == "random") e.phase_mode = PhaseMode::random;
        else throw ConfigError(key, "expected bcd or random", line);
    }
    else if (key == "bcd_sweeps") e.bcd_sweeps = static_cast<int>(parse_int(key, v, line));
    else if (key == "bcd_warm_start") e.bcd_warm_start = parse_bool(key, v, line);
    else if (key == "alpha_C") t.lr_critic = parse_double(key, v, line);
    else if (key == "alpha_A") t.lr_actor = parse_double(key, v, line);
    else if (key == "gamma") t.gamma = parse_double(key, v, line);
    else if (key == "tau") t.tau = parse_double(key, v, line);
    else if (key == "I") t.batch = static_cast<int>(parse_int(key, v, line));
    else if (key == "D") {
        const auto d = parse_int(key, v, line);
        if (d < 1) throw ConfigError(key, "replay capacity must be >= 1", line);
        t.buffer_capacity = static_cast<std::size_t>(d);
    }
    else if (key == "d") t.delay = static_cast<int>(parse_int(key, v, line));
    else if (key == "warmup") {
        const auto w = parse_int(key, v, line);
        if (w < 0) throw ConfigError(key, "must be non-negative", line);
        t.warmup = static_cast<std::size_t>(w);
    }
    else if (key == "noise_initial") t.noise_initial = parse_double(key, v, line);
    else if (key == "noise_decay") t.noise_decay = parse_double(key, v, line);
    else if (key == "noise_floor") t.noise_floor = parse_double(key, v, line);
    else if (key == "actor_hidden") t.actor_hidden = parse_widths(key, v, line);
    else if (key == "local_critic_hidden") t.local_critic_hidden = parse_widths(key, v, line);
    else if (key == "global_critic_hidden") t.global_critic_hidden = parse_widths(key, v, line);
    else throw ConfigError(key, "unknown key", line);
}

/// Parses `key = value` lines; `#` starts a comment. Unknown and duplicate keys
/// are errors, as are missing required keys. Range checks run after parsing.
inline ExperimentSpec parse_config(std::istream& is) {
    ExperimentSpec spec;
    std::set<std::string> seen;
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string text = detail::trim(raw);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError("", "expected 'key = value'", line);
        const std::string key = detail::trim(text.substr(0, eq));
        const std::string value = detail::trim(text.substr(eq + 1));
        if (key.empty()) throw ConfigError("", "missing key before '='", line);
        if (!seen.insert(key).second) throw ConfigError(key, "duplicate key", line);
        if ((key == "sigma2_w" && seen.count("sigma2_dbm")) || (key == "sigma2_dbm" && seen.count("sigma2_w")))
            throw ConfigError(key, "give noise power once, as sigma2_w or sigma2_dbm", line);
        apply_config_key(spec, key, value, line);
    }
    for (const auto& k : required_config_keys())
        if (!seen.count(k)) throw ConfigError(k, "missing required key");
    spec.validate();
    return spec;
}

inline ExperimentSpec load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("", "cannot open config file '" + path.string() + "'");
    return parse_config(is);
}

/// Writes every key; parse_config(serialize_config(s)) == s.
inline std::string serialize_config(const ExperimentSpec& s) {
    using namespace detail;
    const auto& e = s.env;
    const auto& t = s.train;
    std::ostringstream os;
    auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
    os << "# risvec experiment configuration\n";
    kv("name", s.name);
    kv("method", to_string(s.method));
    kv("seed", std::to_string(s.base_seed));
    kv("repetitions", std::to_string(s.repetitions));
    if (!s.output_dir.empty()) kv("output", s.output_dir);
    kv("episodes", std::to_string(t.episodes));
    kv("sweep_axis", s.sweep.axis);
    kv("sweep_values", join_doubles(s.sweep.values));
    os << "\n# environment\n";
    kv("K", std::to_string(e.vehicles));
    kv("N", std::to_string(e.geometry.n_elements));
    kv("b", std::to_string(e.bits));
    kv("eta", fmt_double(e.arrival_rate));
    kv("dt", fmt_double(e.slot_s));
    kv("T", std::to_string(e.horizon));
    kv("W", fmt_double(e.bandwidth_hz));
    kv("L", fmt_double(e.cycles_per_bit));
    kv("c", fmt_double(e.capacitance));
    kv("F_max", fmt_double(e.f_max_hz));
    kv("P_max_o", fmt_double(e.p_max_o));
    kv("P_max_l", fmt_double(e.p_max_l));
    kv("w1", fmt_double(e.w1));
    kv("w2", fmt_double(e.w2));
    kv("pen1", fmt_double(e.pen1));
    kv("pen2", fmt_double(e.pen2));
    if (e.buffer_threshold) kv("buffer_threshold", fmt_double(*e.buffer_threshold));
    if (e.overflow_margin) kv("overflow_margin", fmt_double(*e.overflow_margin));
    kv("q_norm", fmt_double(e.q_norm));
    kv("task_unit", fmt_double(e.task_unit));
    if (const double dbm = watts_to_dbm(e.channel.noise_power_w); dbm_to_watts(dbm) == e.channel.noise_power_w)
        kv("sigma2_dbm", fmt_double(dbm));
    else
        kv("sigma2_w", fmt_double(e.channel.noise_power_w));
    kv("alpha_rb", fmt_double(e.channel.alpha_rb));
    kv("alpha_kr", fmt_double(e.channel.alpha_kr));
    kv("rho", fmt_double(e.channel.rho));
    kv("rician_R", fmt_double(e.channel.rician_r));
    kv("wavelength", fmt_double(e.geometry.wavelength));
    kv("element_spacing", fmt_double(e.geometry.element_spacing));
    kv("bs", fmt_vec3(e.geometry.bs_pos));
    kv("ris", fmt_vec3(e.geometry.ris_pos));
    kv("intersection", fmt_vec3(e.road.center));
    kv("road_half_length", fmt_double(e.road.half_length));
    kv("speed_min", fmt_double(e.speed_min));
    kv("speed_max", fmt_double(e.speed_max));
    kv("phase_mode", to_string(e.phase_mode));
    kv("bcd_sweeps", std::to_string(e.bcd_sweeps));
    kv("bcd_warm_start", e.bcd_warm_start ? "true" : "false");
    os << "\n# training\n";
    kv("alpha_C", fmt_double(t.lr_critic));
    kv("alpha_A", fmt_double(t.lr_actor));
    kv("gamma", fmt_double(t.gamma));
    kv("tau", fmt_double(t.tau));
    kv("I", std::to_string(t.batch));
    kv("D", std::to_string(t.buffer_capacity));
    kv("d", std::to_string(t.delay));
    kv("warmup", std::to_string(t.warmup));
    kv("noise_initial", fmt_double(t.noise_initial));
    kv("noise_decay", fmt_double(t.noise_decay));
    kv("noise_floor", fmt_double(t.noise_floor));
    kv("actor_hidden", join_widths(t.actor_hidden));
    kv("local_critic_hidden", join_widths(t.local_critic_hidden));
    kv("global_critic_hidden", join_widths(t.global_critic_hidden));
    return os.str();
}

/// One row of the metrics file.
struct MetricRecord {
    std::string method;
    std::string phase_mode;
    std::string sweep_axis;
    double sweep_value = 0.0;
    int repetition = 0;
    std::uint64_t seed = 0;
    EpisodeMetrics m;
};

inline std::string metrics_header(int k_count) {
    std::string h =
        "method,phase_mode,sweep_axis,sweep_value,repetition,seed,episode,global_reward,mean_total_power,mean_buffer,"
        "critic_loss_1,critic_loss_2,local_critic_loss,noise_scale,learning_steps,twin_checks,twin_violations";
    for (int k = 0; k < k_count; ++k) h += ",reward_agent_" + std::to_string(k);
    return h;
}

inline std::string format_record(const MetricRecord& r) {
    using detail::fmt_double;
    std::string s = r.method + "," + r.phase_mode + "," + r.sweep_axis + "," + fmt_double(r.sweep_value) + "," +
                    std::to_string(r.repetition) + "," + std::to_string(r.seed) + "," + std::to_string(r.m.episode) + "," +
                    fmt_double(r.m.global_reward) + "," + fmt_double(r.m.mean_total_power) + "," +
                    fmt_double(r.m.mean_buffer) + "," + fmt_double(r.m.critic_loss_1) + "," +
                    fmt_double(r.m.critic_loss_2) + "," + fmt_double(r.m.local_critic_loss) + "," +
                    fmt_double(r.m.noise_scale) + "," + std::to_string(r.m.learning_steps) + "," +
                    std::to_string(r.m.twin_checks) + "," + std::to_string(r.m.twin_violations);
    for (double a : r.m.agent_rewards) s += "," + fmt_double(a);
    return s;
}

/// Parses a metrics file; rejects files whose schema line is not ours.
inline std::vector<MetricRecord> read_metrics(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open metrics file '" + path.string() + "'");
    std::string line;
    if (!std::getline(is, line) || line != std::string("# ") + kMetricsSchema)
        throw std::runtime_error("metrics file '" + path.string() + "' has an unknown schema version");
    if (!std::getline(is, line)) throw std::runtime_error("metrics file '" + path.string() + "' has no header");
    const auto header = detail::split(line, ',');
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* needed : {"method", "phase_mode", "sweep_axis", "sweep_value", "repetition", "seed", "episode",
                               "global_reward", "mean_total_power", "mean_buffer"})
        if (!col.count(needed)) throw std::runtime_error("metrics file missing column '" + std::string(needed) + "'");
    std::vector<std::size_t> agent_cols;
    for (int k = 0; col.count("reward_agent_" + std::to_string(k)); ++k) agent_cols.push_back(col["reward_agent_" + std::to_string(k)]);

    std::vector<MetricRecord> out;
    int lineno = 2;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = detail::split(line, ',');
        if (f.size() != header.size()) throw ConfigError("", "metrics row has wrong column count", lineno);
        auto num = [&](const char* c) { return detail::parse_double(c, f[col.at(c)], lineno); };
        auto opt = [&](const char* c) { return col.count(c) ? detail::parse_double(c, f[col.at(c)], lineno) : 0.0; };
        MetricRecord r;
        r.method = f[col["method"]];
        r.phase_mode = f[col["phase_mode"]];
        r.sweep_axis = f[col["sweep_axis"]];
        r.sweep_value = num("sweep_value");
        r.repetition = static_cast<int>(num("repetition"));
        r.seed = detail::parse_u64("seed", f[col["seed"]], lineno);
        r.m.episode = static_cast<int>(num("episode"));
        r.m.global_reward = num("global_reward");
        r.m.mean_total_power = num("mean_total_power");
        r.m.mean_buffer = num("mean_buffer");
        r.m.critic_loss_1 = opt("critic_loss_1");
        r.m.critic_loss_2 = opt("critic_loss_2");
        r.m.local_critic_loss = opt("local_critic_loss");
        r.m.noise_scale = opt("noise_scale");
        r.m.learning_steps = static_cast<std::int64_t>(opt("learning_steps"));
        r.m.twin_checks = static_cast<std::int64_t>(opt("twin_checks"));
        r.m.twin_violations = static_cast<std::int64_t>(opt("twin_violations"));
        for (auto c : agent_cols) r.m.agent_rewards.push_back(detail::parse_double("reward_agent", f[c], lineno));
        out.push_back(std::move(r));
    }
    return out;
}

/// One (sweep value, repetition) unit of an experiment.
struct RunPlan {
    std::string run_id;
    double sweep_value = 0.0;
    int repetition = 0;
    std::uint64_t seed = 0;
    ExperimentSpec resolved;  // sweep applied, single run
};

/// FNV-1a over a string; used in seed derivation so seeds are stable across platforms.
inline std::uint64_t stable_hash(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// seed = base + hash(sweep axis, repetition). The sweep value is deliberately
/// left out so every point of a sweep sees the same vehicles and random streams.
inline std::uint64_t run_seed(std::uint64_t base, const std::string& axis, int repetition) {
    return base + mix_seed(stable_hash(axis) ^ mix_seed(static_cast<std::uint64_t>(repetition)));
}

inline void apply_sweep_value(ExperimentSpec& s, const std::string& axis, double v) {
    if (axis == "eta") s.env.arrival_rate = v;
    else if (axis == "N") s.env.geometry.n_elements = static_cast<int>(std::lround(v));
    else if (axis == "c") s.env.capacitance = v;
    else if (axis == "b") s.env.bits = static_cast<int>(std::lround(v));
    else if (axis != "none") throw ConfigError("sweep_axis", "unknown axis '" + axis + "'");
}

inline std::vector<RunPlan> plan_runs(const ExperimentSpec& spec) {
    spec.validate();
    std::vector<double> values = spec.sweep.axis == "none" ? std::vector<double>{0.0} : spec.sweep.values;
    std::vector<RunPlan> plans;
    for (double v : values) {
        for (int rep = 0; rep < spec.repetitions; ++rep) {
            RunPlan p;
            p.sweep_value = v;
            p.repetition = rep;
            p.seed = run_seed(spec.base_seed, spec.sweep.axis, rep);
            p.resolved = spec;
            apply_sweep_value(p.resolved, spec.sweep.axis, v);
            p.resolved.sweep = {};
            p.resolved.repetitions = 1;
            p.resolved.base_seed = p.seed;
            p.resolved.train.seed = p.seed;
            p.resolved.env.phase_mode = phase_mode_for(spec.method);
            p.resolved.validate();
            p.run_id = std::string(to_string(spec.method)) + "_" + spec.sweep.axis + "-" + detail::fmt_double(v) + "_rep" + std::to_string(rep);
            plans.push_back(std::move(p));
        }
    }
    return plans;
}

/// Trains (or rolls out) one method on one resolved single-run spec.
inline std::vector<EpisodeMetrics> run_method(const ExperimentSpec& resolved,
                                              const std::function<void(const EpisodeMetrics&)>& on_episode = {}) {
    EnvConfig env_cfg = resolved.env;
    env_cfg.phase_mode = phase_mode_for(resolved.method);
    TrainConfig tc = resolved.train;
    tc.seed = resolved.base_seed;
    const EnvFactory make_env = [env_cfg] { return VecEnv(env_cfg); };
    switch (resolved.method) {
        case Method::maddpg_bcd:
        case Method::maddpg_random_phase: {
            MaddpgTrainer trainer(env_cfg, tc);
            return trainer.train(make_env, on_episode);
        }
        case Method::ddpg: {
            DdpgTrainer trainer(env_cfg, tc);
            return trainer.train(make_env, on_episode);
        }
        case Method::random_power: return random_power_run(make_env, tc.episodes, tc.seed, on_episode);
    }
    return {};
}

inline std::vector<MetricRecord> to_records(const ExperimentSpec& spec, const RunPlan& plan, const std::vector<EpisodeMetrics>& m) {
    std::vector<MetricRecord> out;
    for (const auto& e : m)
        out.push_back({to_string(spec.method), to_string(phase_mode_for(spec.method)), spec.sweep.axis, plan.sweep_value,
                       plan.repetition, plan.seed, e});
    return out;
}

inline nlohmann::ordered_json manifest_json(const ExperimentSpec& spec, const RunPlan& plan, bool complete, int episodes_done) {
    nlohmann::ordered_json j;
    j["schema"] = kManifestSchema;
    j["code_version"] = kCodeVersion;
    j["experiment"] = spec.name;
    j["run_id"] = plan.run_id;
    j["method"] = to_string(spec.method);
    j["sweep_axis"] = spec.sweep.axis;
    j["sweep_value"] = plan.sweep_value;
    j["repetition"] = plan.repetition;
    j["seed"] = plan.seed;
    j["status"] = complete ? "complete" : "incomplete";
    j["episodes_completed"] = episodes_done;
    j["metrics_file"] = "metrics.csv";
    j["config"] = serialize_config(plan.resolved);
    return j;
}

inline std::filesystem::path resolve_output_dir(const ExperimentSpec& spec) {
    if (!spec.output_dir.empty()) return spec.output_dir;
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) return std::filesystem::path(root) / spec.name;
    return std::filesystem::path("risvec-runs") / spec.name;
}

struct ExperimentResult {
    std::filesystem::path output_dir;
    std::filesystem::path metrics_file;
    std::vector<std::filesystem::path> manifests;
    std::vector<MetricRecord> records;
};

struct RunOptions {
    unsigned jobs = 1;
    std::function<void(const std::string& run_id, const EpisodeMetrics&)> on_episode;
};

/// Runs every (sweep value x repetition) unit. Metrics of all runs go to one
/// delimiter-separated file in plan order; each run also gets a manifest that
/// is rewritten from "incomplete" to "complete" when it finishes.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {}) {
    namespace fs = std::filesystem;
    const auto plans = plan_runs(spec);
    ExperimentResult res;
    res.output_dir = resolve_output_dir(spec);
    fs::create_directories(res.output_dir / "manifests");
    res.metrics_file = res.output_dir / "metrics.csv";

    auto write_manifest = [&](const RunPlan& p, bool complete, int done) {
        const auto path = res.output_dir / "manifests" / (p.run_id + ".json");
        std::ofstream os(path, std::ios::binary);
        os << manifest_json(spec, p, complete, done).dump(2) << '\n';
        if (!os) throw std::runtime_error("cannot write manifest '" + path.string() + "'");
        return path;
    };
    for (const auto& p : plans) res.manifests.push_back(write_manifest(p, false, 0));

    std::vector<std::vector<EpisodeMetrics>> results(plans.size());
    std::mutex cb_mutex;
    auto run_one = [&](std::size_t i) {
        results[i] = run_method(plans[i].resolved, [&](const EpisodeMetrics& m) {
            if (!opts.on_episode) return;
            std::lock_guard lock(cb_mutex);
            opts.on_episode(plans[i].run_id, m);
        });
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(plans.size())));
    if (jobs == 1) {
        for (std::size_t i = 0; i < plans.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(jobs);
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i; (i = next++) < plans.size();) run_one(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::ofstream os(res.metrics_file, std::ios::binary);
    os << "# " << kMetricsSchema << '\n' << metrics_header(spec.env.vehicles) << '\n';
    for (std::size_t i = 0; i < plans.size(); ++i) {
        for (auto& r : to_records(spec, plans[i], results[i])) {
            os << format_record(r) << '\n';
            res.records.push_back(std::move(r));
        }
    }
    os.close();
    if (!os) throw std::runtime_error("cannot write metrics file '" + res.metrics_file.string() + "'");
    for (std::size_t i = 0; i < plans.size(); ++i)
        write_manifest(plans[i], true, static_cast<int>(results[i].size()));
    return res;
}

/// Re-runs the single run described by a manifest and returns its records.
inline std::vector<MetricRecord> replay_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open manifest '" + path.string() + "'");
    const auto j = nlohmann::json::parse(is);
    if (j.value("schema", "") != kManifestSchema) throw std::runtime_error("manifest has an unknown schema version");
    std::istringstream cfg(j.at("config").get<std::string>());
    ExperimentSpec resolved = parse_config(cfg);
    ExperimentSpec original = resolved;
    original.sweep.axis = j.at("sweep_axis").get<std::string>();
    RunPlan plan;
    plan.sweep_value = j.at("sweep_value").get<double>();
    plan.repetition = j.at("repetition").get<int>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.resolved = resolved;
    return to_records(original, plan, run_method(resolved));
}

struct SummaryRow {
    std::string method;
    std::string sweep_axis;
    double sweep_value = 0.0;
    int runs = 0;
    double reward_mean = 0.0, reward_sd = 0.0;
    double power_mean = 0.0, power_sd = 0.0;
    double buffer_mean = 0.0, buffer_sd = 0.0;
    /// Per-run final-window means, in repetition order.
    std::vector<double> run_reward, run_power, run_buffer;
};

inline constexpr int kDefaultSummaryWindow = 50;

/// Per (method, sweep value): final-window means of each run, then mean and
/// sample standard deviation across repetitions (0 for a single run).
inline std::vector<SummaryRow> summarize(const std::vector<MetricRecord>& records, int window = kDefaultSummaryWindow) {
    if (records.empty()) throw DomainError("summarize: no metric records");
    if (window < 1) throw DomainError("summarize: window must be >= 1");
    using RunKey = std::tuple<std::string, std::string, double, int>;
    std::map<RunKey, std::vector<const MetricRecord*>> runs;
    for (const auto& r : records) runs[{r.method, r.sweep_axis, r.sweep_value, r.repetition}].push_back(&r);

    std::map<std::tuple<std::string, std::string, double>, SummaryRow> groups;
    for (auto& [key, rows] : runs) {
        std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->m.episode < b->m.episode; });
        const std::size_t start = rows.size() > static_cast<std::size_t>(window) ? rows.size() - static_cast<std::size_t>(window) : 0;
        double rw = 0, pw = 0, bf = 0;
        for (std::size_t i = start; i < rows.size(); ++i) {
            rw += rows[i]->m.global_reward;
            pw += rows[i]->m.mean_total_power;
            bf += rows[i]->m.mean_buffer;
        }
        const double n = static_cast<double>(rows.size() - start);
        auto& g = groups[{std::get<0>(key), std::get<1>(key), std::get<2>(key)}];
        g.method = std::get<0>(key);
        g.sweep_axis = std::get<1>(key);
        g.sweep_value = std::get<2>(key);
        g.run_reward.push_back(rw / n);
        g.run_power.push_back(pw / n);
        g.run_buffer.push_back(bf / n);
    }
    auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
        mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    };
    std::vector<SummaryRow> out;
    for (auto& [key, g] : groups) {
        g.runs = static_cast<int>(g.run_reward.size());
        stats(g.run_reward, g.reward_mean, g.reward_sd);
        stats(g.run_power, g.power_mean, g.power_sd);
        stats(g.run_buffer, g.buffer_mean, g.buffer_sd);
        out.push_back(g);
    }
    return out;
}

inline std::vector<SummaryRow> summarize_files(const std::vector<std::filesystem::path>& files, int window = kDefaultSummaryWindow) {
    if (files.empty()) throw DomainError("summarize: no metrics files given");
    std::vector<MetricRecord> all;
    for (const auto& f : files) {
        auto r = read_metrics(f);
        all.insert(all.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
    return summarize(all, window);
}

inline std::string format_summary(const std::vector<SummaryRow>& rows) {
    using detail::fmt_double;
    std::string s = "method,sweep_axis,sweep_value,runs,reward_mean,reward_sd,power_mean,power_sd,buffer_mean,buffer_sd\n";
    for (const auto& r : rows)
        s += r.method + "," + r.sweep_axis + "," + fmt_double(r.sweep_value) + "," + std::to_string(r.runs) + "," +
             fmt_double(r.reward_mean) + "," + fmt_double(r.reward_sd) + "," + fmt_double(r.power_mean) + "," +
             fmt_double(r.power_sd) + "," + fmt_double(r.buffer_mean) + "," + fmt_double(r.buffer_sd) + "\n";
    return s;
}

}  // namespace risvec
