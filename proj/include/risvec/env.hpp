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
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "risvec/channel.hpp"
#include "risvec/errors.hpp"
#include "risvec/phase_opt.hpp"
#include "risvec/random.hpp"

namespace risvec {

enum class PhaseMode { bcd, random };

inline const char* to_string(PhaseMode m) { return m == PhaseMode::bcd ? "bcd" : "random"; }

/// Two perpendicular straight roads crossing at `center`, each spanning
/// center +/- half_length along its axis. Vehicles leaving one end re-enter at
/// the other.
struct RoadDescriptor {
    Vec3 center{220.0, 220.0, 0.0};
    double half_length = 50.0;
};

struct EnvConfig {
    int vehicles = 8;
    int bits = 3;
    double slot_s = 0.1;
    double arrival_rate = 3e6;  // bits/s per vehicle
    double bandwidth_hz = 1e6;
    double cycles_per_bit = 500.0;
    double capacitance = 1e-28;
    double f_max_hz = 2.15e9;
    double p_max_o = 1.0;
    double p_max_l = 1.0;
    double w1 = 1.0;
    double w2 = 0.6;
    double pen1 = 2.0;
    double pen2 = 2.0;
    std::optional<double> buffer_threshold;  // bits; unset = 2 slots of mean arrivals
    std::optional<double> overflow_margin;   // bits; unset = 1 slot of mean arrivals
    double q_norm = 1e5;                     // bits per reward/observation unit
    double task_unit = 1000.0;               // bits per Poisson arrival
    int horizon = 100;
    double speed_min = 10.0 / 3.6;  // m/s
    double speed_max = 15.0 / 3.6;
    RoadDescriptor road;
    SystemGeometry geometry;
    ChannelParams channel;
    PhaseMode phase_mode = PhaseMode::bcd;
    int bcd_sweeps = 1;
    bool bcd_warm_start = false;

    double mean_arrivals_per_slot() const { return arrival_rate * slot_s; }
    double buffer_threshold_bits() const { return buffer_threshold.value_or(2.0 * mean_arrivals_per_slot()); }
    double overflow_margin_bits() const { return overflow_margin.value_or(mean_arrivals_per_slot()); }

    void validate() const {
        auto positive = [](double v, const char* key) {
            if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be positive and finite");
        };
        auto non_negative = [](double v, const char* key) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be non-negative and finite");
        };
        if (vehicles < 1) throw ConfigError("K", "need at least one vehicle");
        if (bits < 0 || bits > 16) throw ConfigError("b", "phase resolution must be in [0, 16]");
        positive(slot_s, "dt");
        non_negative(arrival_rate, "eta");
        positive(bandwidth_hz, "W");
        positive(cycles_per_bit, "L");
        positive(capacitance, "c");
        positive(f_max_hz, "F_max");
        positive(p_max_o, "P_max_o");
        positive(p_max_l, "P_max_l");
        non_negative(w1, "w1");
        non_negative(w2, "w2");
        non_negative(pen1, "pen1");
        non_negative(pen2, "pen2");
        if (buffer_threshold) non_negative(*buffer_threshold, "buffer_threshold");
        if (overflow_margin) non_negative(*overflow_margin, "overflow_margin");
        positive(q_norm, "q_norm");
        positive(task_unit, "task_unit");
        if (horizon < 1) throw ConfigError("T", "episode needs at least one step");
        non_negative(speed_min, "speed_min");
        if (!(speed_max >= speed_min)) throw ConfigError("speed_max", "must be >= speed_min");
        positive(road.half_length, "road_half_length");
        if (bcd_sweeps < 1) throw ConfigError("bcd_sweeps", "need at least one sweep");
        geometry.validate();
        channel.validate();
    }
};

struct Action {
    double p_o = 0.0;
    double p_l = 0.0;
    friend bool operator==(const Action&, const Action&) = default;
};

/// [q(t), q_o(t-1), q_l(t-1), q_o + q_l - q_prev, snr(t-1)], all in raw units (bits, linear SNR).
using Observation = std::array<double, 5>;
inline constexpr std::size_t kObservationWidth = 5;
inline constexpr std::size_t kActionWidth = 2;

struct VehicleState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    int axis = 0;  // 0 = road along x, 1 = road along y
    double buffer = 0.0;
    double last_snr = 0.0;
};

struct StepDiagnostics {
    std::vector<double> offload_bits;   // q_o capacity per VU
    std::vector<double> local_bits;     // q_l capacity per VU
    std::vector<double> arrivals;
    std::vector<double> overflow;       // max(0, q_o + q_l - q)
    std::vector<bool> buffer_penalty;   // Pen1 triggered
    std::vector<bool> overflow_penalty; // Pen2 triggered
    std::vector<double> snr;
    std::vector<Action> applied;        // post-clamp actions
    int clamped = 0;
    double phase_objective = 0.0;
    friend bool operator==(const StepDiagnostics&, const StepDiagnostics&) = default;
};

struct StepOutcome {
    std::vector<Observation> observations;
    std::vector<double> local_rewards;
    double global_reward = 0.0;
    StepDiagnostics diagnostics;
    friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

struct QueueUpdate {
    double next = 0.0;
    double overflow = 0.0;
};

/// Task arrivals in one slot: Poisson count of `task_unit`-bit packets with mean eta * dt bits.
inline double sample_arrivals(Rng& rng, double eta, double dt, double task_unit = 1000.0) {
    if (!(eta >= 0.0)) throw DomainError("arrival rate must be non-negative");
    if (eta == 0.0) return 0.0;
    return static_cast<double>(poisson_inversion(rng, eta * dt / task_unit)) * task_unit;
}

/// DVFS frequency (p/c)^(1/3), capped at F_max.
inline double local_frequency(double p_l, const EnvConfig& cfg) {
    if (p_l < 0.0) throw DomainError("local power must be non-negative");
    return std::min(std::cbrt(p_l / cfg.capacitance), cfg.f_max_hz);
}

/// Bits processed locally in one slot.
inline double local_capacity(double p_l, const EnvConfig& cfg) {
    return cfg.slot_s * local_frequency(p_l, cfg) / cfg.cycles_per_bit;
}

/// Bits offloaded in one slot through the RIS link.
inline double offload_capacity(double p_o, double gain, const EnvConfig& cfg) {
    return cfg.slot_s * cfg.bandwidth_hz * std::log2(1.0 + snr(p_o, gain, cfg.channel.noise_power_w));
}

/// q' = max(0, q - q_o - q_l) + a, overflow = max(0, q_o + q_l - q). Written
/// through served = min(q, q_o + q_l) so that q' - a = q - served holds exactly.
inline QueueUpdate queue_update(double q, double q_o, double q_l, double arrivals) {
    if (!(q >= 0.0) || !(q_o >= 0.0) || !(q_l >= 0.0) || !(arrivals >= 0.0))
        throw DomainError("queue_update: inputs must be non-negative");
    const double capacity = q_o + q_l;
    const double served = std::min(q, capacity);
    return {(q - served) + arrivals, capacity - served};
}

inline double local_reward(const Action& a, double q_next, double overflow, const EnvConfig& cfg) {
    double r = -(cfg.w1 * (a.p_o + a.p_l) + cfg.w2 * q_next / cfg.q_norm);
    if (q_next > cfg.buffer_threshold_bits()) r -= cfg.pen1;
    if (overflow > cfg.overflow_margin_bits()) r -= cfg.pen2;
    return r;
}

inline double global_reward(std::span<const double> local) {
    if (local.empty()) throw DomainError("global_reward: no agents");
    return std::accumulate(local.begin(), local.end(), 0.0) / static_cast<double>(local.size());
}

/// Multi-vehicle RIS-assisted edge computing environment. One instance is
/// driven by a single thread; separate instances share nothing.
class VecEnv {
public:
    explicit VecEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        h_rb_ = ris_bs_gain(cfg_.geometry, cfg_.channel);
        theta_ = PhaseShiftMatrix(cfg_.geometry.n_elements, cfg_.bits);
    }

    VecEnv(EnvConfig cfg, std::uint64_t seed) : VecEnv(std::move(cfg)) { reset(seed); }

    std::vector<Observation> reset(std::uint64_t seed) {
        rng_.seed(derive_seed(seed, 1));
        phase_rng_.seed(derive_seed(seed, 2));
        step_ = 0;
        theta_ = PhaseShiftMatrix(cfg_.geometry.n_elements, cfg_.bits);
        vehicles_.assign(static_cast<std::size_t>(cfg_.vehicles), {});
        for (auto& v : vehicles_) {
            v.axis = static_cast<int>(rng_() >> 63);
            const double offset = (2.0 * uniform01(rng_) - 1.0) * cfg_.road.half_length;
            const double direction = (rng_() >> 63) ? 1.0 : -1.0;
            const double speed = cfg_.speed_min + (cfg_.speed_max - cfg_.speed_min) * uniform01(rng_);
            v.position = cfg_.road.center;
            v.position[v.axis] += offset;
            v.velocity = Vec3::Zero();
            v.velocity[v.axis] = direction * speed;
        }
        return observations_from({}, {}, {});
    }

    StepOutcome step(std::span<const Action> actions) {
        const auto k_count = vehicles_.size();
        if (actions.size() != k_count) throw DimensionError("step: expected one action per vehicle");
        StepOutcome out;
        auto& diag = out.diagnostics;
        diag.applied.resize(k_count);
        for (std::size_t k = 0; k < k_count; ++k) {
            diag.applied[k] = clamp_action(actions[k], diag.clamped);
        }

        // (1) channels for the current positions
        h_kr_.resize(k_count);
        for (std::size_t k = 0; k < k_count; ++k)
            h_kr_[k] = vu_ris_gain(vehicles_[k].position, cfg_.geometry, cfg_.channel);

        // (2) phase configuration for this slot
        if (cfg_.phase_mode == PhaseMode::bcd) {
            const PhaseShiftMatrix init = cfg_.bcd_warm_start ? theta_ : PhaseShiftMatrix(cfg_.geometry.n_elements, cfg_.bits);
            auto result = bcd_optimize(h_rb_, h_kr_, cfg_.bits, init, BcdOptions{cfg_.bcd_sweeps, {}});
            theta_ = std::move(result.theta);
            diag.phase_objective = result.objective;
        } else {
            theta_ = random_phases(phase_rng_, cfg_.geometry.n_elements, cfg_.bits);
            diag.phase_objective = modulus_sum_objective(theta_, h_rb_, h_kr_);
        }

        diag.offload_bits.resize(k_count);
        diag.local_bits.resize(k_count);
        diag.arrivals.resize(k_count);
        diag.overflow.resize(k_count);
        diag.buffer_penalty.resize(k_count);
        diag.overflow_penalty.resize(k_count);
        diag.snr.resize(k_count);
        out.local_rewards.resize(k_count);
        std::vector<double> prev_buffer(k_count);

        for (std::size_t k = 0; k < k_count; ++k) {
            const Action& a = diag.applied[k];
            // (3) rates
            const double gain = composite_gain(h_rb_, theta_, h_kr_[k]);
            diag.snr[k] = snr(a.p_o, gain, cfg_.channel.noise_power_w);
            diag.offload_bits[k] = offload_capacity(a.p_o, gain, cfg_);
            diag.local_bits[k] = local_capacity(a.p_l, cfg_);
            // (4) arrivals
            diag.arrivals[k] = sample_arrivals(rng_, cfg_.arrival_rate, cfg_.slot_s, cfg_.task_unit);
            // (5) queue
            auto& v = vehicles_[k];
            prev_buffer[k] = v.buffer;
            const auto qu = queue_update(v.buffer, diag.offload_bits[k], diag.local_bits[k], diag.arrivals[k]);
            v.buffer = qu.next;
            diag.overflow[k] = qu.overflow;
            // (6) rewards
            out.local_rewards[k] = local_reward(a, qu.next, qu.overflow, cfg_);
            diag.buffer_penalty[k] = qu.next > cfg_.buffer_threshold_bits();
            diag.overflow_penalty[k] = qu.overflow > cfg_.overflow_margin_bits();
            v.last_snr = diag.snr[k];
        }
        out.global_reward = global_reward(out.local_rewards);

        // (7) mobility
        advance_vehicles(cfg_.slot_s);
        ++step_;

        // (8) next observations
        out.observations = observations_from(diag.offload_bits, diag.local_bits, prev_buffer);
        return out;
    }

    /// Moves every vehicle along its road; positions wrap within the road span.
    void advance_vehicles(double dt) {
        const double span = 2.0 * cfg_.road.half_length;
        for (auto& v : vehicles_) {
            v.position += v.velocity * dt;
            const int ax = v.axis;
            double rel = v.position[ax] - cfg_.road.center[ax];
            rel = rel - span * std::floor((rel + cfg_.road.half_length) / span);
            v.position[ax] = cfg_.road.center[ax] + rel;
        }
    }

    void set_phase_mode(PhaseMode mode) { cfg_.phase_mode = mode; }
    PhaseMode phase_mode() const noexcept { return cfg_.phase_mode; }

    const EnvConfig& config() const noexcept { return cfg_; }
    const std::vector<VehicleState>& vehicles() const noexcept { return vehicles_; }
    std::vector<VehicleState>& mutable_vehicles() noexcept { return vehicles_; }
    const ComplexVector& h_rb() const noexcept { return h_rb_; }
    /// Channels used by the most recent step.
    const std::vector<ComplexVector>& h_kr() const noexcept { return h_kr_; }
    const PhaseShiftMatrix& theta() const noexcept { return theta_; }
    int steps_taken() const noexcept { return step_; }
    bool done() const noexcept { return step_ >= cfg_.horizon; }

private:
    Action clamp_action(Action a, int& clamped) const {
        auto fix = [&](double v, double hi) {
            const double c = std::isfinite(v) ? std::clamp(v, 0.0, hi) : 0.0;
            if (c != v) ++clamped;
            return c;
        };
        return {fix(a.p_o, cfg_.p_max_o), fix(a.p_l, cfg_.p_max_l)};
    }

    std::vector<Observation> observations_from(std::span<const double> q_o, std::span<const double> q_l,
                                               std::span<const double> prev_buffer) const {
        std::vector<Observation> obs(vehicles_.size());
        for (std::size_t k = 0; k < vehicles_.size(); ++k) {
            const double qo = q_o.empty() ? 0.0 : q_o[k];
            const double ql = q_l.empty() ? 0.0 : q_l[k];
            const double qp = prev_buffer.empty() ? 0.0 : prev_buffer[k];
            obs[k] = {vehicles_[k].buffer, qo, ql, qo + ql - qp, vehicles_[k].last_snr};
        }
        return obs;
    }

    EnvConfig cfg_;
    ComplexVector h_rb_;
    std::vector<ComplexVector> h_kr_;
    PhaseShiftMatrix theta_;
    std::vector<VehicleState> vehicles_;
    Rng rng_;
    Rng phase_rng_;
    int step_ = 0;
};

}  // namespace risvec
