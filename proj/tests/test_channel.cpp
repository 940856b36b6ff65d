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
#include <numbers>

#include "risvec/channel.hpp"
#include "risvec/random.hpp"

using namespace risvec;

namespace {

constexpr double kPi = std::numbers::pi;

ComplexVector vec(std::initializer_list<Complex> xs) {
    ComplexVector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (auto x : xs) v[i++] = x;
    return v;
}

}  // namespace

TEST(Steering, ZeroAngleIsAllOnes) {
    const auto v = los_steering(2, 0.07, 0.15, 0.0);
    EXPECT_EQ(v[0], Complex(1.0, 0.0));
    EXPECT_EQ(v[1], Complex(1.0, 0.0));
}

TEST(Steering, SingleElementIsOne) {
    const auto v = los_steering(1, 0.05, 0.1, 0.7);
    ASSERT_EQ(v.size(), 1);
    EXPECT_EQ(v[0], Complex(1.0, 0.0));
}

TEST(Steering, HalfWavelengthBroadsideEndfireAlternates) {
    const double lambda = 0.15;
    const auto v = los_steering(4, lambda / 2.0, lambda, 1.0);
    const double expect[] = {1.0, -1.0, 1.0, -1.0};
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(v[i].real(), expect[i], 1e-12);
        EXPECT_NEAR(v[i].imag(), 0.0, 1e-12);
    }
}

TEST(Steering, ElementPhaseProgression) {
    const double lambda = 0.2, d = 0.07, s = 0.31;
    const auto v = los_steering(6, d, lambda, s);
    for (int i = 0; i < 6; ++i) {
        const Complex expect = std::exp(Complex(0.0, -2.0 * kPi / lambda * i * d * s));
        EXPECT_NEAR(std::abs(v[i] - expect), 0.0, 1e-12);
    }
}

TEST(Steering, RejectsBadAngles) {
    EXPECT_THROW(los_steering(3, 0.1, 0.2, 1.5), DomainError);
    EXPECT_THROW(los_steering(3, 0.1, 0.2, std::nan("")), DomainError);
    EXPECT_THROW(los_steering(0, 0.1, 0.2, 0.0), DomainError);
}

TEST(Steering, UnitModulusProperty) {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(uniform_index(rng, 64));
        const double s = 2.0 * uniform01(rng) - 1.0;
        const auto v = los_steering(n, 0.01 + uniform01(rng), 0.05 + uniform01(rng), s);
        for (int i = 0; i < n; ++i) ASSERT_NEAR(std::abs(v[i]), 1.0, 1e-12);
    }
}

TEST(Angle, VerticalDisplacementIsOne) { EXPECT_EQ(sin_angle_between({0, 0, 0}, {0, 0, 10}), 1.0); }

TEST(Angle, HorizontalDisplacementIsZero) { EXPECT_EQ(sin_angle_between({0, 0, 0}, {10, 0, 0}), 0.0); }

TEST(Angle, RisToBaseStationAtEqualHeight) {
    // dz = 0 between (220,220,25) and (0,0,25)
    EXPECT_EQ(sin_angle_between({220, 220, 25}, {0, 0, 25}), 0.0);
}

TEST(Angle, GeneralDisplacement) {
    // dz/d for (3,4,12): 12/13
    EXPECT_DOUBLE_EQ(sin_angle_between({0, 0, 0}, {3, 4, 12}), 12.0 / 13.0);
    EXPECT_DOUBLE_EQ(sin_angle_between({3, 4, 12}, {0, 0, 0}), -12.0 / 13.0);
}

TEST(Angle, CoincidentPositionsThrow) { EXPECT_THROW(sin_angle_between({1, 2, 3}, {1, 2, 3}), DomainError); }

TEST(PathLoss, ReferenceDistanceUnitRician) {
    EXPECT_NEAR(pathloss_amplitude(1.0, 2.5, 1e-3, INFINITY), 0.0316227766016838, 1e-15);
}

TEST(PathLoss, RicianOne) {
    EXPECT_NEAR(pathloss_amplitude(1.0, 3.1, 1e-3, 1.0), std::sqrt(1e-3) * std::sqrt(0.5), 1e-16);
}

TEST(PathLoss, HundredMetres) {
    EXPECT_NEAR(pathloss_amplitude(100.0, 2.0, 1.0, 10.0), 0.01 * std::sqrt(10.0 / 11.0), 1e-16);
}

TEST(PathLoss, StrictlyDecreasingAndRejectsNonPositive) {
    double prev = pathloss_amplitude(0.5, 2.2, 1e-3, 10.0);
    for (double d = 1.0; d < 1000.0; d *= 1.7) {
        const double a = pathloss_amplitude(d, 2.2, 1e-3, 10.0);
        EXPECT_LT(a, prev);
        prev = a;
    }
    EXPECT_THROW(pathloss_amplitude(0.0, 2.2, 1e-3, 10.0), DomainError);
    EXPECT_THROW(pathloss_amplitude(-1.0, 2.2, 1e-3, 10.0), DomainError);
}

TEST(RisBs, SingleElementModulus) {
    SystemGeometry g;
    g.n_elements = 1;
    ChannelParams p;
    const auto h = ris_bs_gain(g, p);
    const double d = (g.bs_pos - g.ris_pos).norm();
    EXPECT_NEAR(std::abs(h[0]), std::sqrt(p.rho * std::pow(d, -p.alpha_rb) * p.rician_r / (1.0 + p.rician_r)), 1e-18);
}

TEST(RisBs, DefaultGeometryModuliAndPhases) {
    SystemGeometry g;  // BS (0,0,25), RIS (220,220,25)
    ChannelParams p;   // rho 1e-3, alpha_rb 2.5, R 10
    const auto h = ris_bs_gain(g, p);
    ASSERT_EQ(h.size(), 40);
    const double d = 220.0 * std::sqrt(2.0);
    const double expect = std::sqrt(1e-3 * std::pow(d, -2.5) * 10.0 / 11.0);
    for (int i = 0; i < h.size(); ++i) {
        EXPECT_NEAR(std::abs(h[i]), expect, expect * 1e-12);
        // equal heights: no phase progression
        EXPECT_EQ(h[i], h[0]);
    }
}

TEST(RisBs, PureFunction) {
    SystemGeometry g;
    g.ris_pos = {200.0, 210.0, 31.0};
    ChannelParams p;
    const auto a = ris_bs_gain(g, p);
    const auto b = ris_bs_gain(g, p);
    EXPECT_TRUE((a.array() == b.array()).all());
}

TEST(VuRis, UnitDistanceSingleElement) {
    SystemGeometry g;
    g.n_elements = 1;
    ChannelParams p;
    const auto h = vu_ris_gain(g.ris_pos - Vec3(0.6, 0.8, 0.0), g, p);
    EXPECT_NEAR(std::abs(h[0]), std::sqrt(1e-3 * 10.0 / 11.0), 1e-15);
}

TEST(VuRis, DistanceDoublingScalesByPowerLaw) {
    SystemGeometry g;
    ChannelParams p;
    const Vec3 dir = Vec3(1.0, 2.0, -0.5).normalized();
    const auto near = vu_ris_gain(g.ris_pos + 10.0 * dir, g, p);
    const auto far = vu_ris_gain(g.ris_pos + 20.0 * dir, g, p);
    for (int i = 0; i < near.size(); ++i)
        EXPECT_NEAR(std::abs(far[i]) / std::abs(near[i]), std::pow(2.0, -p.alpha_kr / 2.0), 1e-12);
}

TEST(VuRis, WorkedPosition) {
    SystemGeometry g;
    ChannelParams p;
    const Vec3 vu(200.0, 210.0, 0.0);
    const auto h = vu_ris_gain(vu, g, p);
    const double d = std::sqrt(1125.0);
    const double amp = std::sqrt(1e-3 * std::pow(d, -2.2) * 10.0 / 11.0);
    const double s = 25.0 / d;
    for (int i = 0; i < h.size(); ++i) {
        EXPECT_NEAR(std::abs(h[i]), amp, amp * 1e-12);
        const Complex expect = amp * std::exp(Complex(0.0, -2.0 * kPi / g.wavelength * i * g.element_spacing * s));
        EXPECT_NEAR(std::abs(h[i] - expect), 0.0, amp * 1e-10);
    }
    EXPECT_THROW(vu_ris_gain(g.ris_pos, g, p), DomainError);
}

TEST(Composite, UnitScalar) {
    PhaseShiftMatrix theta(1, 2);
    EXPECT_EQ(composite_gain(vec({1.0}), theta, vec({1.0})), 1.0);
}

TEST(Composite, TwoElementWorkedExample) {
    PhaseShiftMatrix theta({1, 0}, 1);  // [pi, 0]
    EXPECT_NEAR(composite_gain(vec({1.0, 1.0}), theta, vec({1.0, -1.0})), 4.0, 1e-12);
}

TEST(Composite, ZeroAmplitudesGiveZero) {
    PhaseShiftMatrix theta({1, 3, 2}, 2);
    for (std::size_t n = 0; n < 3; ++n) theta.set_amplitude(n, 0.0);
    EXPECT_EQ(composite_gain(vec({{1, 2}, {3, -1}, {0.5, 0.5}}), theta, vec({{2, 0}, {1, 1}, {-1, 4}})), 0.0);
}

TEST(Composite, LengthMismatchThrows) {
    PhaseShiftMatrix theta(2, 1);
    EXPECT_THROW(composite_gain(vec({1.0}), theta, vec({1.0, 1.0})), DimensionError);
}

TEST(Composite, TriangleBoundAndGlobalRotationInvariance) {
    Rng rng(12);
    for (int t = 0; t < 300; ++t) {
        const int n = 1 + static_cast<int>(uniform_index(rng, 12));
        const int bits = static_cast<int>(uniform_index(rng, 4));
        ComplexVector a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = {standard_normal(rng), standard_normal(rng)};
            b[i] = {standard_normal(rng), standard_normal(rng)};
        }
        PhaseShiftMatrix theta(n, bits);
        for (int i = 0; i < n; ++i) {
            theta.set_index(static_cast<std::size_t>(i), static_cast<std::uint32_t>(uniform_index(rng, theta.levels())));
            theta.set_amplitude(static_cast<std::size_t>(i), uniform01(rng));
        }
        const double g = composite_gain(a, theta, b);
        double bound = 0.0;
        for (int i = 0; i < n; ++i) bound += std::abs(a[i]) * theta.amplitude(static_cast<std::size_t>(i)) * std::abs(b[i]);
        ASSERT_LE(g, bound * bound * (1.0 + 1e-12));

        const auto shift = static_cast<std::uint32_t>(uniform_index(rng, theta.levels()));
        PhaseShiftMatrix rotated = theta;
        for (int i = 0; i < n; ++i)
            rotated.set_index(static_cast<std::size_t>(i), (theta.index(static_cast<std::size_t>(i)) + shift) % theta.levels());
        ASSERT_NEAR(composite_gain(a, rotated, b), g, 1e-10 * std::max(1.0, g));
    }
}

TEST(Snr, WorkedValues) {
    EXPECT_EQ(snr(0.0, 1e-13, 1e-14), 0.0);
    EXPECT_NEAR(snr(1.0, 1e-13, 1e-14), 10.0, 1e-12);
    EXPECT_THROW(snr(1.0, 1.0, 0.0), DomainError);
    EXPECT_THROW(snr(-1.0, 1.0, 1e-14), DomainError);
}

TEST(Snr, ExactlyLinearInPower) {
    Rng rng(4);
    for (int i = 0; i < 1000; ++i) {
        const double p = uniform01(rng), g = uniform01(rng) * 1e-12;
        ASSERT_EQ(snr(2.0 * p, g, 1e-14), 2.0 * snr(p, g, 1e-14));
    }
}

TEST(Units, NoisePowerConversion) {
    EXPECT_NEAR(dbm_to_watts(-110.0), 1e-14, 1e-28);
    EXPECT_NEAR(watts_to_dbm(1e-3), 0.0, 1e-12);
    EXPECT_NEAR(watts_to_dbm(dbm_to_watts(-87.5)), -87.5, 1e-12);
}

TEST(PhaseMatrix, AlphabetMembership) {
    PhaseShiftMatrix theta(3, 2);
    EXPECT_THROW(theta.set_index(0, 4), DomainError);
    theta.set_index(1, 3);
    EXPECT_DOUBLE_EQ(theta.radians(1), 1.5 * kPi);
    EXPECT_THROW(theta.set_amplitude(0, 1.5), DomainError);
    EXPECT_THROW(PhaseShiftMatrix(0, 2), DomainError);
    EXPECT_EQ(PhaseShiftMatrix(4, 0).levels(), 1u);
}

TEST(Geometry, ValidationNamesKeys) {
    SystemGeometry g;
    g.n_elements = 0;
    try {
        g.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "N");
    }
    ChannelParams p;
    p.noise_power_w = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
}
