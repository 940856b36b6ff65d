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

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "risvec/env.hpp"
#include "risvec/marl.hpp"
#include "risvec/nn.hpp"
#include "risvec/random.hpp"

namespace risvec {

/// Every power component uniform in [0, cap].
inline std::vector<Action> random_power_policy(Rng& rng, const EnvConfig& cfg) {
    std::vector<Action> actions(static_cast<std::size_t>(cfg.vehicles));
    for (auto& a : actions) {
        a.p_o = cfg.p_max_o * uniform01(rng);
        a.p_l = cfg.p_max_l * uniform01(rng);
    }
    return actions;
}

/// Switches the per-slot phase source to uniform random draws.
inline VecEnv& random_phase_mode(VecEnv& env) {
    env.set_phase_mode(PhaseMode::random);
    return env;
}

/// Runs the random-power policy with the same per-episode environment seeds as
/// the learned methods.
inline std::vector<EpisodeMetrics> random_power_run(const EnvFactory& make_env, int episodes, std::uint64_t seed,
                                                    const std::function<void(const EpisodeMetrics&)>& on_episode = {}) {
    std::vector<EpisodeMetrics> metrics;
    if (episodes <= 0) return metrics;
    VecEnv env = make_env();
    Rng rng(derive_seed(seed, 21));
    for (int ep = 0; ep < episodes; ++ep) {
        EpisodeAccumulator acc(ep, env.config().vehicles);
        env.reset(episode_seed(seed, ep));
        for (int t = 0; t < env.config().horizon; ++t) acc.add_step(env.step(random_power_policy(rng, env.config())));
        metrics.push_back(acc.finish(0.0));
        if (on_episode) on_episode(metrics.back());
    }
    return metrics;
}

/// Centralized DDPG: one actor maps the joint 5K-wide state to the joint
/// 2K-wide action, one critic scores (joint state, joint action) against the
/// global reward. Hidden widths default to twice the per-agent MADDPG widths.
class DdpgTrainer {
public:
    DdpgTrainer(const EnvConfig& env_cfg, TrainConfig cfg)
        : cfg_(std::move(cfg)),
          k_(env_cfg.vehicles),
          p_max_o_(env_cfg.p_max_o),
          p_max_l_(env_cfg.p_max_l),
          buffer_(cfg_.buffer_capacity),
          scaler_(env_cfg.q_norm) {
        cfg_.validate();
        Rng init(derive_seed(cfg_.seed, 31));
        noise_rng_.seed(derive_seed(cfg_.seed, 32));
        replay_rng_.seed(derive_seed(cfg_.seed, 33));
        actor_ = nn::Mlp(nn::make_spec(5 * k_, doubled(cfg_.actor_hidden), 2 * k_, nn::OutputActivation::sigmoid), init);
        critic_ = nn::Mlp(nn::make_spec(7 * k_, doubled(cfg_.global_critic_hidden), 1, nn::OutputActivation::linear), init);
        target_actor_ = actor_;
        target_critic_ = critic_;
    }

    const nn::Mlp& actor() const noexcept { return actor_; }
    const nn::Mlp& critic() const noexcept { return critic_; }

    std::vector<Action> act(std::span<const Observation> obs, double noise_scale) {
        scaler_.observe(obs);
        const auto f = scaler_.joint(obs);
        const nn::Vector y = actor_.forward(nn::Vector(Eigen::Map<const nn::Vector>(f.data(), static_cast<Eigen::Index>(f.size()))));
        std::vector<Action> actions(static_cast<std::size_t>(k_));
        for (int k = 0; k < k_; ++k) {
            double p_o = y[2 * k] * p_max_o_;
            double p_l = y[2 * k + 1] * p_max_l_;
            if (noise_scale > 0.0) {
                p_o += noise_scale * p_max_o_ * standard_normal(noise_rng_);
                p_l += noise_scale * p_max_l_ * standard_normal(noise_rng_);
            }
            actions[static_cast<std::size_t>(k)] = {std::clamp(p_o, 0.0, p_max_o_), std::clamp(p_l, 0.0, p_max_l_)};
        }
        return actions;
    }

    void learn(EpisodeAccumulator& acc) {
        const auto rows = buffer_.sample(static_cast<std::size_t>(cfg_.batch), replay_rng_);
        const Batch b = Batch::from(rows, k_, p_max_o_, p_max_l_);
        const double inv_i = 1.0 / static_cast<double>(b.size());

        const nn::Matrix y = b.global_reward + cfg_.gamma * target_critic_.forward(stack(b.next_states, target_actor_.forward(b.next_states)));
        nn::Tape tape;
        const nn::Matrix resid = critic_.forward(stack(b.states, b.actions), tape) - y;
        const double loss = resid.squaredNorm() * inv_i;
        if (!std::isfinite(loss)) throw NumericError("ddpg critic: non-finite loss");
        critic_.adam_step(critic_.backward(tape, 2.0 * resid * inv_i), cfg_.lr_critic);
        acc.add_global_losses(loss, loss);

        nn::Tape actor_tape;
        const nn::Matrix pi = actor_.forward(b.states, actor_tape);
        nn::Tape q_tape;
        critic_.forward(stack(b.states, pi), q_tape);
        const nn::Matrix dq = critic_.input_gradient(q_tape, nn::Matrix::Ones(1, b.size()));
        actor_.adam_step(actor_.backward(actor_tape, -dq.bottomRows(2 * k_) * inv_i), cfg_.lr_actor);

        target_critic_.soft_update(critic_, cfg_.tau);
        target_actor_.soft_update(actor_, cfg_.tau);
    }

    EpisodeMetrics run_episode(VecEnv& env, int episode) {
        const double noise = cfg_.noise_at(episode);
        EpisodeAccumulator acc(episode, k_);
        auto obs = env.reset(episode_seed(cfg_.seed, episode));
        for (int t = 0; t < env.config().horizon; ++t) {
            const auto actions = act(obs, noise);
            Transition tr;
            tr.joint_state = scaler_.joint(obs);
            StepOutcome out = env.step(actions);
            acc.add_step(out);
            for (const auto& a : out.diagnostics.applied) {
                tr.joint_action.push_back(a.p_o);
                tr.joint_action.push_back(a.p_l);
            }
            tr.local_rewards = out.local_rewards;
            tr.global_reward = out.global_reward;
            scaler_.observe(out.observations);
            tr.next_joint_state = scaler_.joint(out.observations);
            buffer_.store(std::move(tr));
            if (buffer_.size() > cfg_.learning_threshold()) learn(acc);
            obs = std::move(out.observations);
        }
        return acc.finish(noise);
    }

    std::vector<EpisodeMetrics> train(const EnvFactory& make_env,
                                      const std::function<void(const EpisodeMetrics&)>& on_episode = {}) {
        std::vector<EpisodeMetrics> metrics;
        if (cfg_.episodes == 0) return metrics;
        VecEnv env = make_env();
        for (int ep = 0; ep < cfg_.episodes; ++ep) {
            metrics.push_back(run_episode(env, ep));
            if (on_episode) on_episode(metrics.back());
        }
        return metrics;
    }

private:
    static std::vector<int> doubled(std::vector<int> widths) {
        for (auto& w : widths) w *= 2;
        return widths;
    }

    static nn::Matrix stack(const nn::Matrix& top, const nn::Matrix& bottom) {
        nn::Matrix x(top.rows() + bottom.rows(), top.cols());
        x << top, bottom;
        return x;
    }

    TrainConfig cfg_;
    int k_;
    double p_max_o_, p_max_l_;
    nn::Mlp actor_, critic_, target_actor_, target_critic_;
    ReplayBuffer buffer_;
    FeatureScaler scaler_;
    Rng noise_rng_;
    Rng replay_rng_;
};

/// Free-function form of the centralized baseline.
inline std::vector<EpisodeMetrics> ddpg_train(const EnvFactory& make_env, const EnvConfig& env_cfg, const TrainConfig& cfg) {
    DdpgTrainer trainer(env_cfg, cfg);
    return trainer.train(make_env);
}

}  // namespace risvec
