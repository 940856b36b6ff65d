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
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "risvec/errors.hpp"

namespace risvec {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;

/// Static placement and array parameters shared by every link.
struct SystemGeometry {
    Vec3 bs_pos{0.0, 0.0, 25.0};
    Vec3 ris_pos{220.0, 220.0, 25.0};
    double wavelength = 299792458.0 / 2.0e9;
    double element_spacing = 299792458.0 / 2.0e9 / 2.0;
    int n_elements = 40;

    void validate() const {
        if (n_elements < 1) throw ConfigError("N", "RIS needs at least one element");
        if (!(wavelength > 0.0)) throw ConfigError("wavelength", "must be positive");
        if (!(element_spacing > 0.0)) throw ConfigError("element_spacing", "must be positive");
        if ((bs_pos - ris_pos).norm() == 0.0) throw ConfigError("bs", "BS and RIS positions coincide");
    }
};

/// Large-scale and noise parameters. Only the LoS component of the Rician
/// channel is modelled, so `rician_r` acts as a deterministic amplitude factor.
struct ChannelParams {
    double rho = 1e-3;
    double alpha_rb = 2.5;
    double alpha_kr = 2.2;
    double rician_r = 10.0;
    double noise_power_w = 1e-14;

    void validate() const {
        if (!(rho > 0.0)) throw ConfigError("rho", "must be positive");
        if (!(alpha_rb > 0.0)) throw ConfigError("alpha_rb", "must be positive");
        if (!(alpha_kr > 0.0)) throw ConfigError("alpha_kr", "must be positive");
        if (!(rician_r >= 0.0)) throw ConfigError("rician_R", "must be non-negative");
        if (!(noise_power_w > 0.0)) throw ConfigError("sigma2_dbm", "noise power must be positive");
    }
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

/// Diagonal RIS reflection matrix. Phases are stored as indices into the
/// 2^b-point alphabet so that membership is exact.
class PhaseShiftMatrix {
public:
    PhaseShiftMatrix() = default;

    PhaseShiftMatrix(int n_elements, int bits) : bits_(bits) {
        if (n_elements < 1) throw DomainError("phase matrix needs at least one element");
        if (bits < 0 || bits > 16) throw DomainError("phase resolution must be in [0, 16] bits");
        indices_.assign(static_cast<std::size_t>(n_elements), 0);
        amplitudes_.assign(static_cast<std::size_t>(n_elements), 1.0);
    }

    PhaseShiftMatrix(std::vector<std::uint32_t> indices, int bits) : PhaseShiftMatrix(static_cast<int>(indices.size()), bits) {
        for (std::size_t n = 0; n < indices.size(); ++n) set_index(n, indices[n]);
    }

    std::size_t size() const noexcept { return indices_.size(); }
    int bits() const noexcept { return bits_; }
    std::uint32_t levels() const noexcept { return 1u << bits_; }

    std::uint32_t index(std::size_t n) const { return indices_.at(n); }
    void set_index(std::size_t n, std::uint32_t m) {
        if (m >= levels()) throw DomainError("phase index outside the alphabet");
        indices_.at(n) = m;
    }
    const std::vector<std::uint32_t>& indices() const noexcept { return indices_; }

    double amplitude(std::size_t n) const { return amplitudes_.at(n); }
    void set_amplitude(std::size_t n, double beta) {
        if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("RIS amplitude must lie in [0, 1]");
        amplitudes_.at(n) = beta;
    }

    double radians(std::size_t n) const { return alphabet_radians(index(n), bits_); }

    /// beta_n * exp(j theta_n) for every element.
    ComplexVector diagonal() const {
        ComplexVector d(static_cast<Eigen::Index>(size()));
        for (std::size_t n = 0; n < size(); ++n)
            d[static_cast<Eigen::Index>(n)] = std::polar(amplitudes_[n], radians(n));
        return d;
    }

    static double alphabet_radians(std::uint32_t m, int bits) {
        return 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(1u << bits);
    }

    friend bool operator==(const PhaseShiftMatrix&, const PhaseShiftMatrix&) = default;

private:
    int bits_ = 0;
    std::vector<std::uint32_t> indices_;
    std::vector<double> amplitudes_;
};

/// Uniform-linear-array steering vector, element i = exp(-j 2pi/lambda i d sin).
inline ComplexVector los_steering(int n, double spacing, double wavelength, double sin_angle) {
    if (n < 1) throw DomainError("steering vector needs n >= 1");
    if (!(wavelength > 0.0)) throw DomainError("wavelength must be positive");
    if (!std::isfinite(sin_angle) || std::abs(sin_angle) > 1.0) throw DomainError("sin(angle) must be finite and within [-1, 1]");
    ComplexVector v(n);
    const double step = 2.0 * std::numbers::pi / wavelength * spacing * sin_angle;
    v[0] = Complex(1.0, 0.0);
    for (int i = 1; i < n; ++i) v[i] = std::polar(1.0, -step * i);
    return v;
}

/// sin of the link angle: the array axis is vertical, so sin = dz / |d|.
inline double sin_angle_between(const Vec3& from, const Vec3& to) {
    const Vec3 delta = to - from;
    const double d = delta.norm();
    if (d == 0.0) throw DomainError("angle undefined for coincident positions");
    return std::clamp(delta.z() / d, -1.0, 1.0);
}

/// sqrt(rho d^-alpha) * sqrt(R / (1 + R)); R = +inf gives a unit Rician factor.
inline double pathloss_amplitude(double d, double alpha, double rho, double rician_r) {
    if (!(d > 0.0)) throw DomainError("distance must be positive");
    const double rician = std::isinf(rician_r) ? 1.0 : rician_r / (1.0 + rician_r);
    return std::sqrt(rho * std::pow(d, -alpha)) * std::sqrt(rician);
}

/// RIS to BS channel; static for a fixed geometry.
inline ComplexVector ris_bs_gain(const SystemGeometry& geom, const ChannelParams& params) {
    const double d = (geom.bs_pos - geom.ris_pos).norm();
    const double amp = pathloss_amplitude(d, params.alpha_rb, params.rho, params.rician_r);
    return amp * los_steering(geom.n_elements, geom.element_spacing, geom.wavelength,
                              sin_angle_between(geom.ris_pos, geom.bs_pos));
}

/// Vehicle to RIS channel for the vehicle's current position.
inline ComplexVector vu_ris_gain(const Vec3& vu_pos, const SystemGeometry& geom, const ChannelParams& params) {
    const double d = (geom.ris_pos - vu_pos).norm();
    if (d == 0.0) throw DomainError("vehicle coincides with the RIS");
    const double amp = pathloss_amplitude(d, params.alpha_kr, params.rho, params.rician_r);
    return amp * los_steering(geom.n_elements, geom.element_spacing, geom.wavelength,
                              sin_angle_between(vu_pos, geom.ris_pos));
}

/// |h_rb^H Theta h_kr|^2
inline double composite_gain(const ComplexVector& h_rb, const PhaseShiftMatrix& theta, const ComplexVector& h_kr) {
    const auto n = static_cast<Eigen::Index>(theta.size());
    if (h_rb.size() != n || h_kr.size() != n) throw DimensionError("composite_gain: vector lengths differ from RIS size");
    return std::norm((h_rb.conjugate().cwiseProduct(theta.diagonal()).cwiseProduct(h_kr)).sum());
}

inline double snr(double p_o, double gain, double noise_power_w) {
    if (!(noise_power_w > 0.0)) throw DomainError("noise power must be positive");
    if (p_o < 0.0 || gain < 0.0) throw DomainError("power and gain must be non-negative");
    return p_o * gain / noise_power_w;
}

}  // namespace risvec
