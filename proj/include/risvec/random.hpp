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
#include <cstdint>
#include <random>

namespace risvec {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    return mix_seed(base ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) using exactly one engine call.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by multiply-shift; one engine call.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

/// Poisson draw by CDF inversion from a single uniform. For a fixed uniform the
/// result is non-decreasing in the mean, so runs that share a random stream but
/// differ in arrival rate see coupled arrival sequences. Means above
/// `kChunk` are split into equal chunks, each inverted separately.
inline std::uint64_t poisson_inversion(Rng& rng, double mean) {
    constexpr double kChunk = 500.0;
    if (!(mean > 0.0)) return 0;
    const auto chunks = static_cast<int>(std::ceil(mean / kChunk));
    const double lambda = mean / chunks;
    std::uint64_t total = 0;
    for (int c = 0; c < chunks; ++c) {
        const double u = uniform01(rng);
        double pmf = std::exp(-lambda);
        double cdf = pmf;
        std::uint64_t k = 0;
        // The tail beyond lambda + 40 sqrt(lambda) + 40 is below double resolution.
        const double cap = lambda + 40.0 * std::sqrt(lambda) + 40.0;
        while (u >= cdf && k < cap) {
            ++k;
            pmf *= lambda / static_cast<double>(k);
            cdf += pmf;
        }
        total += k;
    }
    return total;
}

/// Standard normal via Box-Muller; two engine calls per draw, no cached state.
inline double standard_normal(Rng& rng) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double u1 = 1.0 - uniform01(rng);  // (0, 1]
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace risvec
