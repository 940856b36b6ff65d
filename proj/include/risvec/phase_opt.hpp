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
#include <numbers>
#include <span>
#include <vector>

#include "risvec/channel.hpp"
#include "risvec/errors.hpp"
#include "risvec/random.hpp"

namespace risvec {

/// Sum over vehicles of |h_rb^H Theta h_kr|^2.
inline double modulus_sum_objective(const PhaseShiftMatrix& theta, const ComplexVector& h_rb,
                                    std::span<const ComplexVector> h_kr_all) {
    if (h_kr_all.empty()) throw DomainError("modulus_sum_objective: no vehicles");
    double total = 0.0;
    for (const auto& h_kr : h_kr_all) total += composite_gain(h_rb, theta, h_kr);
    return total;
}

struct BcdOptions {
    int sweeps = 1;
    /// Called after every single-element update with (element, current matrix, objective).
    std::function<void(std::size_t, const PhaseShiftMatrix&, double)> on_update;
};

struct PhaseResult {
    PhaseShiftMatrix theta;
    double objective = 0.0;
};

/// Block coordinate descent over the discrete phase alphabet: each element in
/// turn is set to the alphabet value maximizing the modulus sum while the others
/// stay fixed. Ties go to the lowest alphabet index. The objective never
/// decreases across element updates.
inline constexpr double kBcdTieTolerance = 1e-13;

inline PhaseResult bcd_optimize(const ComplexVector& h_rb, std::span<const ComplexVector> h_kr_all, int bits,
                                const PhaseShiftMatrix& init, const BcdOptions& options = {}) {
    if (h_kr_all.empty()) throw DomainError("bcd_optimize: no vehicles");
    if (init.bits() != bits) throw DomainError("bcd_optimize: initial matrix uses a different resolution");
    const auto n_el = static_cast<Eigen::Index>(init.size());
    if (h_rb.size() != n_el) throw DimensionError("bcd_optimize: h_rb length differs from RIS size");
    for (const auto& h : h_kr_all)
        if (h.size() != n_el) throw DimensionError("bcd_optimize: h_kr length differs from RIS size");

    const std::size_t k_count = h_kr_all.size();
    const std::uint32_t levels = init.levels();

    // Per-vehicle cascaded coefficients x[k][n] = beta_n conj(h_rb[n]) h_kr[n].
    Eigen::MatrixXcd x(static_cast<Eigen::Index>(k_count), n_el);
    for (std::size_t k = 0; k < k_count; ++k)
        for (Eigen::Index n = 0; n < n_el; ++n)
            x(static_cast<Eigen::Index>(k), n) =
                init.amplitude(static_cast<std::size_t>(n)) * std::conj(h_rb[n]) * h_kr_all[k][n];

    std::vector<Complex> alphabet(levels);
    for (std::uint32_t m = 0; m < levels; ++m) alphabet[m] = std::polar(1.0, PhaseShiftMatrix::alphabet_radians(m, bits));

    PhaseShiftMatrix theta = init;
    std::vector<Complex> rest(k_count);
    std::vector<double> values(levels);
    double objective = modulus_sum_objective(theta, h_rb, h_kr_all);

    for (int sweep = 0; sweep < options.sweeps; ++sweep) {
        for (Eigen::Index n = 0; n < n_el; ++n) {
            const auto un = static_cast<std::size_t>(n);
            for (std::size_t k = 0; k < k_count; ++k) {
                Complex acc(0.0, 0.0);
                for (Eigen::Index j = 0; j < n_el; ++j)
                    if (j != n) acc += alphabet[theta.index(static_cast<std::size_t>(j))] * x(static_cast<Eigen::Index>(k), j);
                rest[k] = acc;
            }
            double top = -1.0;
            for (std::uint32_t m = 0; m < levels; ++m) {
                double value = 0.0;
                for (std::size_t k = 0; k < k_count; ++k)
                    value += std::norm(rest[k] + alphabet[m] * x(static_cast<Eigen::Index>(k), n));
                values[m] = value;
                top = std::max(top, value);
            }
            // rounding noise counts as a tie; lowest index wins
            std::uint32_t best_m = 0;
            while (values[best_m] < top * (1.0 - kBcdTieTolerance)) ++best_m;
            const double best = values[best_m];
            theta.set_index(un, best_m);
            objective = best;
            if (options.on_update) options.on_update(un, theta, objective);
        }
    }
    const double final_objective = modulus_sum_objective(theta, h_rb, h_kr_all);
    return {std::move(theta), final_objective};
}

/// Exhaustive search over all (2^b)^N phase combinations. Index vectors are
/// enumerated in lexicographic order and only a strictly better value replaces
/// the incumbent, so ties resolve to the lexicographically smallest vector.
inline PhaseResult brute_force_optimize(const ComplexVector& h_rb, std::span<const ComplexVector> h_kr_all, int bits,
                                        int n_elements) {
    if (h_kr_all.empty()) throw DomainError("brute_force_optimize: no vehicles");
    if (n_elements < 1) throw DomainError("brute_force_optimize: need at least one element");
    constexpr double kMaxCombinations = 1e6;
    const double levels = std::ldexp(1.0, bits);
    if (std::pow(levels, n_elements) > kMaxCombinations)
        throw CapacityError("brute_force_optimize: search space exceeds 1e6 combinations");

    PhaseShiftMatrix theta(n_elements, bits);
    PhaseResult best{theta, modulus_sum_objective(theta, h_rb, h_kr_all)};
    const std::uint32_t lv = theta.levels();
    std::vector<std::uint32_t> idx(static_cast<std::size_t>(n_elements), 0);
    while (true) {
        // Odometer increment with the last element fastest (lexicographic order).
        int pos = n_elements - 1;
        while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == lv) {
            idx[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        for (std::size_t n = 0; n < idx.size(); ++n) theta.set_index(n, idx[n]);
        const double value = modulus_sum_objective(theta, h_rb, h_kr_all);
        if (value > best.objective) best = {theta, value};
    }
    return best;
}

/// Each phase drawn uniformly and independently from the alphabet.
inline PhaseShiftMatrix random_phases(Rng& rng, int n_elements, int bits) {
    PhaseShiftMatrix theta(n_elements, bits);
    for (std::size_t n = 0; n < theta.size(); ++n) {
        // Power-of-two alphabet: the top bits of one engine draw are exactly uniform.
        const auto m = bits == 0 ? 0u : static_cast<std::uint32_t>(rng() >> (64 - bits));
        theta.set_index(n, m);
    }
    return theta;
}

}  // namespace risvec
