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
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "risvec/diagnostics.hpp"
#include "risvec/phase_opt.hpp"

using namespace risvec;

namespace {

ComplexVector vec(std::initializer_list<Complex> xs) {
    ComplexVector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (auto x : xs) v[i++] = x;
    return v;
}

}  // namespace

TEST(Objective, SingleVehicleIsCompositeGain) {
    const auto h_rb = vec({{1, 2}, {0.5, -1}});
    const auto h_kr = vec({{-1, 0.3}, {2, 2}});
    PhaseShiftMatrix theta({1, 3}, 2);
    const std::vector<ComplexVector> one{h_kr};
    EXPECT_EQ(modulus_sum_objective(theta, h_rb, one), composite_gain(h_rb, theta, h_kr));
}

TEST(Objective, IdenticalVehiclesDouble) {
    const auto h_rb = vec({{1, 2}, {0.5, -1}});
    const auto h_kr = vec({{-1, 0.3}, {2, 2}});
    PhaseShiftMatrix theta({2, 1}, 2);
    const std::vector<ComplexVector> one{h_kr}, two{h_kr, h_kr};
    EXPECT_EQ(modulus_sum_objective(theta, h_rb, two), 2.0 * modulus_sum_objective(theta, h_rb, one));
}

TEST(Objective, TwoVehiclesHandSet) {
    // h_rb = [1, 1]; vehicles [1, j] and [1, -1]; theta = [0, pi/2]
    // |1 + j*j|^2 = 0 and |1 + j*(-1)|^2 = 2
    const auto h_rb = vec({1.0, 1.0});
    const std::vector<ComplexVector> h{vec({1.0, {0.0, 1.0}}), vec({1.0, -1.0})};
    PhaseShiftMatrix theta({0, 1}, 2);
    EXPECT_NEAR(modulus_sum_objective(theta, h_rb, h), 2.0, 1e-12);
}

TEST(Objective, EmptyVehicleListThrows) {
    PhaseShiftMatrix theta(2, 1);
    EXPECT_THROW(modulus_sum_objective(theta, vec({1.0, 1.0}), {}), DomainError);
}

TEST(Bcd, WorkedTwoElementExample) {
    const std::vector<ComplexVector> h{vec({1.0, -1.0})};
    const auto r = bcd_optimize(vec({1.0, 1.0}), h, 1, PhaseShiftMatrix(2, 1));
    EXPECT_EQ(r.theta.indices(), (std::vector<std::uint32_t>{1, 0}));
    EXPECT_NEAR(r.objective, 4.0, 1e-12);
}

TEST(Bcd, SingleElementTiesGoToLowestIndex) {
    for (int bits : {0, 1, 2, 3, 5}) {
        const std::vector<ComplexVector> h{vec({{0.3, -0.8}})};
        const auto r = bcd_optimize(vec({{1.2, 0.4}}), h, bits, PhaseShiftMatrix(1, bits));
        EXPECT_EQ(r.theta.index(0), 0u) << bits;
    }
}

TEST(Bcd, RejectsInconsistentInputs) {
    const std::vector<ComplexVector> h{vec({1.0, -1.0})};
    EXPECT_THROW(bcd_optimize(vec({1.0, 1.0}), h, 2, PhaseShiftMatrix(2, 1)), DomainError);
    EXPECT_THROW(bcd_optimize(vec({1.0}), h, 1, PhaseShiftMatrix(2, 1)), DimensionError);
    EXPECT_THROW(bcd_optimize(vec({1.0, 1.0}), {}, 1, PhaseShiftMatrix(2, 1)), DomainError);
}

TEST(Bcd, ObjectiveNeverBelowInitAndSecondSweepNeverLowers) {
    Rng rng(21);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(uniform_index(rng, 16));
        const int bits = 1 + static_cast<int>(uniform_index(rng, 3));
        const auto h_rb = random_gaussian_vector(rng, n);
        std::vector<ComplexVector> h;
        for (int k = 0; k < 3; ++k) h.push_back(random_gaussian_vector(rng, n));
        const auto init = random_phases(rng, n, bits);
        const double init_obj = modulus_sum_objective(init, h_rb, h);
        const auto one = bcd_optimize(h_rb, h, bits, init);
        ASSERT_GE(one.objective, init_obj * (1.0 - kObjectiveTolerance));
        const auto two = bcd_optimize(h_rb, h, bits, one.theta);
        ASSERT_GE(two.objective, one.objective * (1.0 - kObjectiveTolerance));
        for (std::size_t i = 0; i < one.theta.size(); ++i) ASSERT_LT(one.theta.index(i), one.theta.levels());
    }
}

TEST(Bcd, ReportedObjectiveMatchesReturnedMatrix) {
    Rng rng(22);
    const auto h_rb = random_gaussian_vector(rng, 10);
    const std::vector<ComplexVector> h{random_gaussian_vector(rng, 10), random_gaussian_vector(rng, 10)};
    const auto r = bcd_optimize(h_rb, h, 3, PhaseShiftMatrix(10, 3));
    EXPECT_EQ(r.objective, modulus_sum_objective(r.theta, h_rb, h));
}

TEST(Bcd, SweepOptionRunsMoreUpdates) {
    Rng rng(23);
    const auto h_rb = random_gaussian_vector(rng, 5);
    const std::vector<ComplexVector> h{random_gaussian_vector(rng, 5)};
    int calls = 0;
    BcdOptions o;
    o.sweeps = 3;
    o.on_update = [&](std::size_t, const PhaseShiftMatrix&, double) { ++calls; };
    bcd_optimize(h_rb, h, 2, PhaseShiftMatrix(5, 2), o);
    EXPECT_EQ(calls, 15);
}

TEST(BruteForce, WorkedTieBreak) {
    const std::vector<ComplexVector> h{vec({1.0, -1.0})};
    const auto r = brute_force_optimize(vec({1.0, 1.0}), h, 1, 2);
    EXPECT_EQ(r.theta.indices(), (std::vector<std::uint32_t>{0, 1}));
    EXPECT_NEAR(r.objective, 4.0, 1e-12);
}

TEST(BruteForce, SingleElementReturnsIndexZero) {
    const std::vector<ComplexVector> h{vec({{0.2, 0.9}})};
    const auto r = brute_force_optimize(vec({{-0.4, 0.1}}), h, 3, 1);
    EXPECT_EQ(r.theta.index(0), 0u);
}

TEST(BruteForce, SearchSpaceCap) {
    Rng rng(1);
    const auto h_rb = random_gaussian_vector(rng, 3);
    const std::vector<ComplexVector> h{random_gaussian_vector(rng, 3)};
    EXPECT_THROW(brute_force_optimize(h_rb, h, 7, 3), CapacityError);  // 128^3 > 1e6
    EXPECT_NO_THROW(brute_force_optimize(h_rb, h, 2, 3));
}

TEST(BruteForce, MatchesManualEnumeration) {
    Rng rng(31);
    const auto h_rb = random_gaussian_vector(rng, 3);
    const std::vector<ComplexVector> h{random_gaussian_vector(rng, 3), random_gaussian_vector(rng, 3)};
    double best = -1.0;
    for (std::uint32_t a = 0; a < 4; ++a)
        for (std::uint32_t b = 0; b < 4; ++b)
            for (std::uint32_t c = 0; c < 4; ++c) {
                const double v = modulus_sum_objective(PhaseShiftMatrix({a, b, c}, 2), h_rb, h);
                best = std::max(best, v);
            }
    EXPECT_EQ(brute_force_optimize(h_rb, h, 2, 3).objective, best);
}

// Oracle suite on 100 i.i.d. CN(0,1) instances, N=3, b=2, K=2, seed 7.
TEST(OracleSuite, DominanceAndMonotonicity) {
    const auto r = run_bcd_oracle(100, 3, 2, 2, 100, 7);
    EXPECT_EQ(r.instances, 100);
    EXPECT_EQ(r.above_oracle, 0);
    EXPECT_EQ(r.below_init, 0);
    EXPECT_EQ(r.monotone_breaks, 0);
    EXPECT_LE(r.min_ratio, 1.0);
}

TEST(OracleSuite, QualityRatioFloor) {
    // Measured by this suite: mean bcd/optimum ratio 0.976842 on seed 7.
    const auto r = run_bcd_oracle(100, 3, 2, 2, 100, 7);
    EXPECT_NEAR(r.mean_ratio, 0.976842, 5e-6);
    EXPECT_GE(r.mean_ratio, 0.95);
}

TEST(RandomPhases, ZeroBitsIsAllZero) {
    Rng rng(2);
    const auto t = random_phases(rng, 6, 0);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t.index(i), 0u);
}

TEST(RandomPhases, SeedReproducible) {
    Rng a(99), b(99);
    EXPECT_EQ(random_phases(a, 40, 3), random_phases(b, 40, 3));
}

TEST(RandomPhases, ChiSquareUniformity) {
    Rng rng(5);
    const int bits = 3, levels = 8, draws = 100000;
    std::vector<double> counts(levels, 0.0);
    for (int i = 0; i < draws / 10; ++i) {
        const auto t = random_phases(rng, 10, bits);
        for (std::size_t n = 0; n < t.size(); ++n) counts[t.index(n)] += 1.0;
    }
    const double expect = static_cast<double>(draws) / levels;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expect) * (c - expect) / expect;
    // 7 degrees of freedom: mean 7, sd sqrt(14); allow 3 sd
    EXPECT_LT(chi2, 7.0 + 3.0 * std::sqrt(14.0));
}
