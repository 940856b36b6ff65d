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
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "risvec/env.hpp"
#include "risvec/errors.hpp"
#include "risvec/nn.hpp"
#include "risvec/random.hpp"

namespace risvec {

/// One replay record. States hold network-ready features (see FeatureScaler),
/// actions hold the clamped powers in watts.
struct Transition {
    std::vector<double> joint_state;       // K x 5
    std::vector<double> joint_action;      // K x 2
    std::vector<double> local_rewards;     // K
    double global_reward = 0.0;
    std::vector<double> next_joint_state;  // K x 5
};

/// FIFO ring of transitions with uniform sampling without replacement.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw CapacityError("replay buffer capacity must be positive");
    }

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return items_.size(); }

    void store(Transition t) {
        if (items_.size() < capacity_) {
            items_.push_back(std::move(t));
        } else {
            items_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    /// i-th oldest stored transition.
    const Transition& at(std::size_t i) const { return items_.at((head_ + i) % items_.size()); }

    /// Distinct positions (oldest = 0) by Floyd's algorithm; order is the draw order.
    std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const {
        const std::size_t n = items_.size();
        if (batch == 0 || batch > n) throw CapacityError("replay buffer holds fewer transitions than the batch size");
        std::vector<std::size_t> picked;
        picked.reserve(batch);
        for (std::size_t j = n - batch; j < n; ++j) {
            const auto t = static_cast<std::size_t>(uniform_index(rng, j + 1));
            if (std::find(picked.begin(), picked.end(), t) == picked.end())
                picked.push_back(t);
            else
                picked.push_back(j);
        }
        return picked;
    }

    std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const {
        std::vector<const Transition*> out;
        for (auto i : sample_indices(batch, rng)) out.push_back(&at(i));
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> items_;
};

/// Maps raw observations to network inputs: bit quantities divided by q_norm,
/// SNR divided by the largest SNR seen so far.
class FeatureScaler {
public:
    explicit FeatureScaler(double q_norm = 1e5) : q_norm_(q_norm) {}

    void observe(std::span<const Observation> obs) {
        for (const auto& o : obs) snr_max_ = std::max(snr_max_, o[4]);
    }

    void features(const Observation& o, double* out) const {
        for (std::size_t i = 0; i < 4; ++i) out[i] = o[i] / q_norm_;
        out[4] = snr_max_ > 0.0 ? o[4] / snr_max_ : 0.0;
    }

    std::vector<double> joint(std::span<const Observation> obs) const {
        std::vector<double> f(obs.size() * kObservationWidth);
        for (std::size_t k = 0; k < obs.size(); ++k) features(obs[k], f.data() + k * kObservationWidth);
        return f;
    }

    double snr_max() const noexcept { return snr_max_; }

private:
    double q_norm_;
    double snr_max_ = 0.0;
};

/// Column-per-sample view of a sampled mini-batch.
struct Batch {
    nn::Matrix states;       // 5K x I
    nn::Matrix actions;      // 2K x I, divided by the power caps
    nn::Matrix local_rewards;  // K x I
    nn::Matrix global_reward;  // 1 x I
    nn::Matrix next_states;  // 5K x I

    Eigen::Index size() const { return states.cols(); }

    static Batch from(std::span<const Transition* const> rows, int k_count, double p_max_o, double p_max_l) {
        const auto cols = static_cast<Eigen::Index>(rows.size());
        const Eigen::Index sw = k_count * static_cast<Eigen::Index>(kObservationWidth);
        const Eigen::Index aw = k_count * static_cast<Eigen::Index>(kActionWidth);
        Batch b{nn::Matrix(sw, cols), nn::Matrix(aw, cols), nn::Matrix(k_count, cols), nn::Matrix(1, cols), nn::Matrix(sw, cols)};
        for (Eigen::Index j = 0; j < cols; ++j) {
            const Transition& t = *rows[static_cast<std::size_t>(j)];
            if (static_cast<Eigen::Index>(t.joint_state.size()) != sw || static_cast<Eigen::Index>(t.joint_action.size()) != aw)
                throw DimensionError("batch: transition width does not match agent count");
            for (Eigen::Index i = 0; i < sw; ++i) {
                b.states(i, j) = t.joint_state[static_cast<std::size_t>(i)];
                b.next_states(i, j) = t.next_joint_state[static_cast<std::size_t>(i)];
            }
            for (Eigen::Index k = 0; k < k_count; ++k) {
                b.actions(2 * k, j) = t.joint_action[static_cast<std::size_t>(2 * k)] / p_max_o;
                b.actions(2 * k + 1, j) = t.joint_action[static_cast<std::size_t>(2 * k + 1)] / p_max_l;
                b.local_rewards(k, j) = t.local_rewards[static_cast<std::size_t>(k)];
            }
            b.global_reward(0, j) = t.global_reward;
        }
        return b;
    }

    auto agent_states(int k) const { return states.middleRows(k * 5, 5); }
    auto agent_next_states(int k) const { return next_states.middleRows(k * 5, 5); }
    auto agent_actions(int k) const { return actions.middleRows(k * 2, 2); }
};

struct TrainConfig {
    double lr_critic = 1e-3;
    double lr_actor = 1e-4;
    double gamma = 0.99;
    double tau = 0.005;
    int batch = 64;
    std::size_t buffer_capacity = 1'000'000;
    int delay = 2;
    int episodes = 300;
    /// Learning starts once the buffer holds more than this many transitions (0 = batch size).
    std::size_t warmup = 0;
    double noise_initial = 0.2;  // fraction of the power cap
    double noise_decay = 0.995;  // per episode
    double noise_floor = 0.01;
    std::vector<int> actor_hidden{64, 64};
    std::vector<int> local_critic_hidden{64, 64, 64};
    std::vector<int> global_critic_hidden{128, 128, 128};
    std::uint64_t seed = 1;

    std::size_t learning_threshold() const { return warmup == 0 ? static_cast<std::size_t>(batch) : warmup; }
    double noise_at(int episode) const { return std::max(noise_floor, noise_initial * std::pow(noise_decay, episode)); }

    void validate() const {
        if (!(lr_critic > 0.0)) throw ConfigError("alpha_C", "must be positive");
        if (!(lr_actor > 0.0)) throw ConfigError("alpha_A", "must be positive");
        if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma", "must lie in (0, 1)");
        if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau", "must lie in (0, 1]");
        if (batch < 1) throw ConfigError("I", "batch size must be >= 1");
        if (buffer_capacity < 1) throw ConfigError("D", "replay capacity must be >= 1");
        if (delay < 1) throw ConfigError("d", "policy delay must be >= 1");
        if (episodes < 0) throw ConfigError("episodes", "must be non-negative");
        if (!(noise_initial >= 0.0)) throw ConfigError("noise_initial", "must be non-negative");
        if (!(noise_decay > 0.0 && noise_decay <= 1.0)) throw ConfigError("noise_decay", "must lie in (0, 1]");
        if (!(noise_floor >= 0.0)) throw ConfigError("noise_floor", "must be non-negative");
        const std::pair<const std::vector<int>*, const char*> hidden[] = {
            {&actor_hidden, "actor_hidden"}, {&local_critic_hidden, "local_critic_hidden"}, {&global_critic_hidden, "global_critic_hidden"}};
        for (const auto& [h, key] : hidden) {
            if (h->empty()) throw ConfigError(key, "need at least one hidden layer");
            for (int w : *h)
                if (w < 1) throw ConfigError(key, "hidden widths must be >= 1");
        }
    }
};

/// Per-episode training record.
struct EpisodeMetrics {
    int episode = 0;
    double global_reward = 0.0;           // mean over steps
    std::vector<double> agent_rewards;    // mean over steps, per agent
    double critic_loss_1 = 0.0;           // mean over learning steps
    double critic_loss_2 = 0.0;
    double local_critic_loss = 0.0;       // mean over agents and delayed updates
    double mean_total_power = 0.0;        // mean over steps and agents of p_o + p_l, watts
    double mean_buffer = 0.0;             // mean over steps and agents of q, bits
    double noise_scale = 0.0;
    std::int64_t learning_steps = 0;
    std::int64_t twin_checks = 0;
    std::int64_t twin_violations = 0;
    friend bool operator==(const EpisodeMetrics&, const EpisodeMetrics&) = default;
};

/// Environment seed of a given episode; shared by every method so that runs
/// with the same base seed see the same vehicles and arrivals.
inline std::uint64_t episode_seed(std::uint64_t base, int episode) {
    return derive_seed(base, 0x1000u + static_cast<std::uint64_t>(episode));
}

/// Sums step outcomes into one EpisodeMetrics.
class EpisodeAccumulator {
public:
    EpisodeAccumulator(int episode, int k_count) : k_(k_count) {
        m_.episode = episode;
        m_.agent_rewards.assign(static_cast<std::size_t>(k_count), 0.0);
    }

    void add_step(const StepOutcome& out) {
        ++steps_;
        m_.global_reward += out.global_reward;
        for (int k = 0; k < k_; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            m_.agent_rewards[uk] += out.local_rewards[uk];
            m_.mean_total_power += out.diagnostics.applied[uk].p_o + out.diagnostics.applied[uk].p_l;
            m_.mean_buffer += out.observations[uk][0];
        }
    }

    void add_global_losses(double l1, double l2) {
        ++m_.learning_steps;
        m_.critic_loss_1 += l1;
        m_.critic_loss_2 += l2;
    }

    void add_local_loss(double l) {
        ++local_updates_;
        m_.local_critic_loss += l;
    }

    void add_twin(std::int64_t checks, std::int64_t violations) {
        m_.twin_checks += checks;
        m_.twin_violations += violations;
    }

    EpisodeMetrics finish(double noise) {
        if (steps_ > 0) {
            const double s = static_cast<double>(steps_);
            m_.global_reward /= s;
            for (auto& r : m_.agent_rewards) r /= s;
            m_.mean_total_power /= s * k_;
            m_.mean_buffer /= s * k_;
        }
        if (m_.learning_steps > 0) {
            m_.critic_loss_1 /= static_cast<double>(m_.learning_steps);
            m_.critic_loss_2 /= static_cast<double>(m_.learning_steps);
        }
        if (local_updates_ > 0) m_.local_critic_loss /= static_cast<double>(local_updates_);
        m_.noise_scale = noise;
        return m_;
    }

private:
    int k_;
    std::int64_t steps_ = 0;
    std::int64_t local_updates_ = 0;
    EpisodeMetrics m_;
};

/// Deterministic policy output scaled to the power caps, plus zero-mean
/// Gaussian noise (std = noise_scale * cap), clamped into the box.
inline Action select_action(const nn::Mlp& actor, std::span<const double> features, double noise_scale, Rng& rng,
                            double p_max_o, double p_max_l) {
    nn::Vector x = Eigen::Map<const nn::Vector>(features.data(), static_cast<Eigen::Index>(features.size()));
    const nn::Vector y = actor.forward(x);
    double p_o = y[0] * p_max_o;
    double p_l = y[1] * p_max_l;
    if (noise_scale > 0.0) {
        p_o += noise_scale * p_max_o * standard_normal(rng);
        p_l += noise_scale * p_max_l * standard_normal(rng);
    }
    return {std::clamp(p_o, 0.0, p_max_o), std::clamp(p_l, 0.0, p_max_l)};
}

struct AgentNets {
    nn::Mlp actor, target_actor;
    nn::Mlp local_critic, target_local_critic;
};

struct GlobalCritics {
    nn::Mlp q1, q2;
    nn::Mlp target_q1, target_q2;
};

struct GlobalTarget {
    nn::Matrix y;            // 1 x I
    std::int64_t checks = 0;
    std::int64_t violations = 0;
};

using EnvFactory = std::function<VecEnv()>;

/// Multi-agent DDPG with per-agent local critics and twin delayed global critics.
class MaddpgTrainer {
public:
    MaddpgTrainer(const EnvConfig& env_cfg, TrainConfig cfg)
        : cfg_(std::move(cfg)),
          k_(env_cfg.vehicles),
          p_max_o_(env_cfg.p_max_o),
          p_max_l_(env_cfg.p_max_l),
          buffer_(cfg_.buffer_capacity),
          scaler_(env_cfg.q_norm) {
        cfg_.validate();
        const int k_count = k_;
        if (k_count < 1) throw ConfigError("K", "need at least one agent");
        Rng init(derive_seed(cfg_.seed, 11));
        noise_rng_.seed(derive_seed(cfg_.seed, 12));
        replay_rng_.seed(derive_seed(cfg_.seed, 13));
        const int sw = 5, aw = 2, gw = 7 * k_count;
        for (int k = 0; k < k_count; ++k) {
            AgentNets a;
            a.actor = nn::Mlp(nn::make_spec(sw, cfg_.actor_hidden, aw, nn::OutputActivation::sigmoid), init);
            a.target_actor = a.actor;
            a.local_critic = nn::Mlp(nn::make_spec(sw + aw, cfg_.local_critic_hidden, 1, nn::OutputActivation::linear), init);
            a.target_local_critic = a.local_critic;
            agents_.push_back(std::move(a));
        }
        global_.q1 = nn::Mlp(nn::make_spec(gw, cfg_.global_critic_hidden, 1, nn::OutputActivation::linear), init);
        global_.q2 = nn::Mlp(nn::make_spec(gw, cfg_.global_critic_hidden, 1, nn::OutputActivation::linear), init);
        global_.target_q1 = global_.q1;
        global_.target_q2 = global_.q2;
    }

    const TrainConfig& config() const noexcept { return cfg_; }
    int agent_count() const noexcept { return k_; }
    std::vector<AgentNets>& agents() noexcept { return agents_; }
    const std::vector<AgentNets>& agents() const noexcept { return agents_; }
    GlobalCritics& global_critics() noexcept { return global_; }
    ReplayBuffer& buffer() noexcept { return buffer_; }
    const FeatureScaler& scaler() const noexcept { return scaler_; }
    Rng& replay_rng() noexcept { return replay_rng_; }

    std::vector<Action> act(std::span<const Observation> obs, double noise_scale) {
        scaler_.observe(obs);
        const auto f = scaler_.joint(obs);
        std::vector<Action> actions;
        for (int k = 0; k < k_; ++k)
            actions.push_back(select_action(agents_[static_cast<std::size_t>(k)].actor,
                                            std::span<const double>(f).subspan(static_cast<std::size_t>(k) * 5, 5), noise_scale,
                                            noise_rng_, p_max_o_, p_max_l_));
        return actions;
    }

    Batch sample_batch() {
        const auto rows = buffer_.sample(static_cast<std::size_t>(cfg_.batch), replay_rng_);
        return Batch::from(rows, k_, p_max_o_, p_max_l_);
    }

    /// y_g = r_g + gamma * min_j Q'_j(s', pi'(s')), with the per-row check that
    /// y_g does not exceed either individual bootstrap.
    GlobalTarget global_target(const Batch& b) const {
        const nn::Matrix x2 = joint_input(b.next_states, target_actions(b.next_states));
        const nn::Matrix q1 = global_.target_q1.forward(x2);
        const nn::Matrix q2 = global_.target_q2.forward(x2);
        GlobalTarget t;
        t.y = b.global_reward + cfg_.gamma * q1.cwiseMin(q2);
        for (Eigen::Index j = 0; j < t.y.cols(); ++j) {
            const double b1 = b.global_reward(0, j) + cfg_.gamma * q1(0, j);
            const double b2 = b.global_reward(0, j) + cfg_.gamma * q2(0, j);
            t.checks += 2;
            t.violations += (t.y(0, j) > b1) + (t.y(0, j) > b2);
        }
        return t;
    }

    /// One Adam step on each twin critic toward the shared target; returns the two MSE losses.
    std::pair<double, double> update_global_critics(const Batch& b, const nn::Matrix& y) {
        const nn::Matrix x = joint_input(b.states, b.actions);
        return {regress(global_.q1, x, y), regress(global_.q2, x, y)};
    }

    nn::Matrix local_target(int k, const Batch& b) const {
        const auto& a = agents_[static_cast<std::size_t>(k)];
        const nn::Matrix s2 = b.agent_next_states(k);
        nn::Matrix x(7, b.size());
        x.topRows(5) = s2;
        x.bottomRows(2) = a.target_actor.forward(s2);
        return b.local_rewards.row(k) + cfg_.gamma * a.target_local_critic.forward(x);
    }

    double update_local_critic(int k, const Batch& b) {
        const nn::Matrix y = local_target(k, b);
        nn::Matrix x(7, b.size());
        x.topRows(5) = b.agent_states(k);
        x.bottomRows(2) = b.agent_actions(k);
        return regress(agents_[static_cast<std::size_t>(k)].local_critic, x, y);
    }

    /// Ascent direction of Q_g1(s, a | a_k = pi_k(s_k)) + Q_k(s_k, pi_k(s_k)),
    /// averaged over the batch, with respect to the actor parameters.
    nn::Gradients actor_gradient(int k, const Batch& b) const {
        const auto& a = agents_[static_cast<std::size_t>(k)];
        const nn::Matrix s_k = b.agent_states(k);
        nn::Tape actor_tape;
        const nn::Matrix pi = a.actor.forward(s_k, actor_tape);
        const nn::Matrix ones = nn::Matrix::Ones(1, b.size());

        nn::Matrix joint_a = b.actions;
        joint_a.middleRows(2 * k, 2) = pi;
        nn::Tape g_tape;
        global_.q1.forward(joint_input(b.states, joint_a), g_tape);
        const nn::Matrix dg = global_.q1.input_gradient(g_tape, ones);

        nn::Matrix xl(7, b.size());
        xl.topRows(5) = s_k;
        xl.bottomRows(2) = pi;
        nn::Tape l_tape;
        a.local_critic.forward(xl, l_tape);
        const nn::Matrix dl = a.local_critic.input_gradient(l_tape, ones);

        const nn::Matrix dq_dpi = dg.middleRows(5 * k_ + 2 * k, 2) + dl.bottomRows(2);
        // Minimize -(mean Q): upstream into the actor output is -dQ/dpi / I.
        return a.actor.backward(actor_tape, -dq_dpi / static_cast<double>(b.size()));
    }

    double update_actor(int k, const Batch& b) {
        const auto grads = actor_gradient(k, b);
        double sq = 0.0;
        for (const auto& g : grads) sq += g.weight.squaredNorm() + g.bias.squaredNorm();
        if (!std::isfinite(sq)) throw NumericError("update_actor: non-finite gradient");
        agents_[static_cast<std::size_t>(k)].actor.adam_step(grads, cfg_.lr_actor);
        return std::sqrt(sq);
    }

    /// One learning step: twin global critics plus their targets every call; on
    /// delayed episodes also every agent's local critic, actor and local targets.
    void learn(int episode, EpisodeAccumulator& acc) {
        const Batch b = sample_batch();
        const auto target = global_target(b);
        acc.add_twin(target.checks, target.violations);
        const auto [l1, l2] = update_global_critics(b, target.y);
        acc.add_global_losses(l1, l2);
        global_.target_q1.soft_update(global_.q1, cfg_.tau);
        global_.target_q2.soft_update(global_.q2, cfg_.tau);
        if (episode % cfg_.delay == 0) {
            for (int k = 0; k < k_; ++k) {
                acc.add_local_loss(update_local_critic(k, b));
                update_actor(k, b);
                auto& a = agents_[static_cast<std::size_t>(k)];
                a.target_actor.soft_update(a.actor, cfg_.tau);
                a.target_local_critic.soft_update(a.local_critic, cfg_.tau);
            }
        }
    }

    EpisodeMetrics run_episode(VecEnv& env, int episode) {
        const double noise = cfg_.noise_at(episode);
        EpisodeAccumulator acc(episode, k_);
        auto obs = env.reset(episode_seed(cfg_.seed, episode));
        for (int t = 0; t < env.config().horizon; ++t) {
            const auto actions = act(obs, noise);
            const auto state = scaler_.joint(obs);
            StepOutcome out = env.step(actions);
            acc.add_step(out);
            Transition tr;
            tr.joint_state = state;
            for (const auto& a : out.diagnostics.applied) {
                tr.joint_action.push_back(a.p_o);
                tr.joint_action.push_back(a.p_l);
            }
            tr.local_rewards = out.local_rewards;
            tr.global_reward = out.global_reward;
            scaler_.observe(out.observations);
            tr.next_joint_state = scaler_.joint(out.observations);
            buffer_.store(std::move(tr));
            if (buffer_.size() > cfg_.learning_threshold()) learn(episode, acc);
            obs = std::move(out.observations);
        }
        return acc.finish(noise);
    }

    std::vector<EpisodeMetrics> train(const EnvFactory& make_env,
                                      const std::function<void(const EpisodeMetrics&)>& on_episode = {}) {
        std::vector<EpisodeMetrics> metrics;
        if (cfg_.episodes == 0) return metrics;
        VecEnv env = make_env();
        if (env.config().vehicles != k_) throw ConfigError("K", "environment vehicle count differs from trainer agent count");
        for (int ep = 0; ep < cfg_.episodes; ++ep) {
            metrics.push_back(run_episode(env, ep));
            if (on_episode) on_episode(metrics.back());
        }
        return metrics;
    }

private:
    nn::Matrix target_actions(const nn::Matrix& states) const {
        nn::Matrix out(2 * k_, states.cols());
        for (int k = 0; k < k_; ++k)
            out.middleRows(2 * k, 2) = agents_[static_cast<std::size_t>(k)].target_actor.forward(nn::Matrix(states.middleRows(5 * k, 5)));
        return out;
    }

    nn::Matrix joint_input(const nn::Matrix& states, const nn::Matrix& actions) const {
        nn::Matrix x(states.rows() + actions.rows(), states.cols());
        x.topRows(states.rows()) = states;
        x.bottomRows(actions.rows()) = actions;
        return x;
    }

    double regress(nn::Mlp& critic, const nn::Matrix& x, const nn::Matrix& y) {
        nn::Tape tape;
        const nn::Matrix q = critic.forward(x, tape);
        const nn::Matrix resid = q - y;
        const double loss = resid.squaredNorm() / static_cast<double>(resid.cols());
        if (!std::isfinite(loss)) throw NumericError("critic update: non-finite loss");
        critic.adam_step(critic.backward(tape, 2.0 * resid / static_cast<double>(resid.cols())), cfg_.lr_critic);
        return loss;
    }

    TrainConfig cfg_;
    int k_;
    double p_max_o_, p_max_l_;
    std::vector<AgentNets> agents_;
    GlobalCritics global_;
    ReplayBuffer buffer_;
    FeatureScaler scaler_;
    Rng noise_rng_;
    Rng replay_rng_;
};

}  // namespace risvec
