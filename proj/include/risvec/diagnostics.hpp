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
#include <limits>
#include <vector>

#include "risvec/channel.hpp"
#include "risvec/nn.hpp"
#include "risvec/phase_opt.hpp"
#include "risvec/random.hpp"

namespace risvec {

struct OracleReport {
    int instances = 0;
    int above_oracle = 0;       // bcd > brute force (must stay 0)
    int below_init = 0;         // bcd < init (must stay 0)
    int monotone_breaks = 0;    // element updates that lowered the objective
    int beats_random = 0;       // bcd >= best of the random draws
    double mean_ratio = 0.0;    // bcd / brute force
    double min_ratio = 1.0;
};

/// Relative slack for float rounding when comparing objectives.
inline constexpr double kObjectiveTolerance = 1e-12;

inline ComplexVector random_gaussian_vector(Rng& rng, int n) {
    ComplexVector v(n);
    for (int i = 0; i < n; ++i) {
        const double re = standard_normal(rng), im = standard_normal(rng);
        v[i] = Complex(re, im) * std::sqrt(0.5);
    }
    return v;
}

/// BCD against the exhaustive oracle on i.i.d. CN(0,1) channels, all-zero start.
inline OracleReport run_bcd_oracle(int instances, int n_elements, int bits, int k_count, int random_draws, std::uint64_t seed,
                                   int sweeps = 1) {
    OracleReport r;
    Rng rng(seed);
    double ratio_sum = 0.0;
    for (int i = 0; i < instances; ++i) {
        const ComplexVector h_rb = random_gaussian_vector(rng, n_elements);
        std::vector<ComplexVector> h_kr;
        for (int k = 0; k < k_count; ++k) h_kr.push_back(random_gaussian_vector(rng, n_elements));

        const PhaseShiftMatrix init(n_elements, bits);
        const double init_obj = modulus_sum_objective(init, h_rb, h_kr);
        double last = init_obj;
        BcdOptions opts;
        opts.sweeps = sweeps;
        opts.on_update = [&](std::size_t, const PhaseShiftMatrix& theta, double) {
            const double now = modulus_sum_objective(theta, h_rb, h_kr);
            if (now < last * (1.0 - kObjectiveTolerance)) ++r.monotone_breaks;
            last = now;
        };
        const auto bcd = bcd_optimize(h_rb, h_kr, bits, init, opts);
        const auto oracle = brute_force_optimize(h_rb, h_kr, bits, n_elements);

        double best_random = 0.0;
        for (int d = 0; d < random_draws; ++d)
            best_random = std::max(best_random, modulus_sum_objective(random_phases(rng, n_elements, bits), h_rb, h_kr));

        if (bcd.objective > oracle.objective * (1.0 + kObjectiveTolerance)) ++r.above_oracle;
        if (bcd.objective < init_obj * (1.0 - kObjectiveTolerance)) ++r.below_init;
        if (bcd.objective >= best_random * (1.0 - kObjectiveTolerance)) ++r.beats_random;
        const double ratio = oracle.objective > 0.0 ? bcd.objective / oracle.objective : 1.0;
        ratio_sum += ratio;
        r.min_ratio = std::min(r.min_ratio, ratio);
        ++r.instances;
    }
    r.mean_ratio = instances > 0 ? ratio_sum / instances : 0.0;
    return r;
}

struct GradcheckReport {
    int nets = 0;
    std::size_t values = 0;        // gradient entries compared
    double max_rel_error = 0.0;    // worst block-wise relative error
    int worst_net = -1;
};

/// ||a - n|| / max(||a||, ||n||), 0 when both vanish.
inline double relative_error(const Eigen::ArrayXd& analytic, const Eigen::ArrayXd& numeric) {
    const double scale = std::max(analytic.matrix().norm(), numeric.matrix().norm());
    if (scale == 0.0) return 0.0;
    return (analytic - numeric).matrix().norm() / scale;
}

/// Analytic backprop against central differences of L = sum(U .* f(X)) for
/// every weight, bias and input, on randomly shaped networks.
inline GradcheckReport run_gradcheck(int nets, double h, std::uint64_t seed) {
    GradcheckReport rep;
    Rng rng(seed);
    for (int t = 0; t < nets; ++t) {
        const int in = 1 + static_cast<int>(uniform_index(rng, 8));
        const int out = 1 + static_cast<int>(uniform_index(rng, 3));
        std::vector<int> hidden(1 + uniform_index(rng, 3));
        for (auto& w : hidden) w = 2 + static_cast<int>(uniform_index(rng, 11));
        const auto act = t % 2 ? nn::OutputActivation::sigmoid : nn::OutputActivation::linear;
        nn::Mlp net(nn::make_spec(in, hidden, out, act), rng);
        const int batch = 1 + static_cast<int>(uniform_index(rng, 4));
        nn::Matrix x(in, batch), u(out, batch);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * uniform01(rng) - 1.0;
        for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = 2.0 * uniform01(rng) - 1.0;

        nn::Tape tape;
        net.forward(x, tape);
        nn::Matrix dx;
        const auto grads = net.backward(tape, u, &dx);
        auto loss = [&](const nn::Mlp& m, const nn::Matrix& xx) { return (u.array() * m.forward(xx).array()).sum(); };

        auto check_block = [&](double* data, Eigen::Index size, const double* analytic, nn::Mlp& m, nn::Matrix& xx) {
            Eigen::ArrayXd num(size), ana(size);
            for (Eigen::Index i = 0; i < size; ++i) {
                const double keep = data[i];
                data[i] = keep + h;
                const double up = loss(m, xx);
                data[i] = keep - h;
                const double down = loss(m, xx);
                data[i] = keep;
                num[i] = (up - down) / (2.0 * h);
                ana[i] = analytic[i];
            }
            rep.values += static_cast<std::size_t>(size);
            const double e = relative_error(ana, num);
            if (e > rep.max_rel_error) {
                rep.max_rel_error = e;
                rep.worst_net = t;
            }
        };
        for (std::size_t l = 0; l < net.layers().size(); ++l) {
            auto& layer = net.layers()[l];
            check_block(layer.weight.data(), layer.weight.size(), grads[l].weight.data(), net, x);
            check_block(layer.bias.data(), layer.bias.size(), grads[l].bias.data(), net, x);
        }
        check_block(x.data(), x.size(), dx.data(), net, x);
        ++rep.nets;
    }
    return rep;
}

}  // namespace risvec
