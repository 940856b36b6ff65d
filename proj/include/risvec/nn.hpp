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
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "risvec/errors.hpp"
#include "risvec/random.hpp"

namespace risvec::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class OutputActivation : std::uint8_t { linear = 0, sigmoid = 1 };

/// Layer widths including the input and output layers; hidden layers use ReLU.
struct MlpSpec {
    std::vector<int> widths;
    OutputActivation output = OutputActivation::linear;

    void validate() const {
        if (widths.size() < 3) throw DimensionError("MlpSpec: need input, at least one hidden layer and output");
        for (int w : widths)
            if (w < 1) throw DimensionError("MlpSpec: layer widths must be >= 1");
    }

    friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Builds {input, hidden..., output}.
inline MlpSpec make_spec(int input, const std::vector<int>& hidden, int output, OutputActivation act) {
    MlpSpec s;
    s.widths.push_back(input);
    s.widths.insert(s.widths.end(), hidden.begin(), hidden.end());
    s.widths.push_back(output);
    s.output = act;
    s.validate();
    return s;
}

struct Layer {
    Matrix weight;  // out x in
    Vector bias;
};

/// Per-parameter gradients, laid out like the network's layers.
using Gradients = std::vector<Layer>;

struct AdamState {
    std::vector<Layer> m;
    std::vector<Layer> v;
    std::int64_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// Intermediate activations of a batched forward pass; column j is sample j.
struct Tape {
    std::vector<Matrix> activations;  // [0] = input, [l + 1] = output of layer l
    const Matrix& output() const { return activations.back(); }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Dense feed-forward network with its own Adam moments.
class Mlp {
public:
    Mlp() = default;

    /// Weights and biases uniform in +/- 1/sqrt(fan_in).
    Mlp(MlpSpec spec, Rng& rng) : spec_(std::move(spec)) {
        spec_.validate();
        allocate();
        for (auto& layer : layers_) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
            for (Eigen::Index i = 0; i < layer.weight.size(); ++i)
                layer.weight.data()[i] = bound * (2.0 * uniform01(rng) - 1.0);
            for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = bound * (2.0 * uniform01(rng) - 1.0);
        }
    }

    static Mlp zeros(MlpSpec spec) {
        Mlp net;
        net.spec_ = std::move(spec);
        net.spec_.validate();
        net.allocate();
        return net;
    }

    const MlpSpec& spec() const noexcept { return spec_; }
    int input_width() const { return spec_.widths.front(); }
    int output_width() const { return spec_.widths.back(); }
    std::vector<Layer>& layers() noexcept { return layers_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    const AdamState& adam() const noexcept { return adam_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
        return n;
    }

    Vector forward(const Vector& x) const {
        Matrix in = x;
        return forward(in).col(0);
    }

    Matrix forward(const Matrix& x) const {
        check_input(x);
        Matrix a = x;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            Matrix z = layers_[l].weight * a;
            z.colwise() += layers_[l].bias;
            activate(z, l);
            a = std::move(z);
        }
        return a;
    }

    // Eigen expressions: column vectors at compile time stay vectors
    template <typename Derived>
    auto forward(const Eigen::MatrixBase<Derived>& x) const {
        if constexpr (Derived::ColsAtCompileTime == 1) {
            return forward(Vector(x));
        } else {
            return forward(Matrix(x));
        }
    }

    Matrix forward(const Matrix& x, Tape& tape) const {
        check_input(x);
        tape.activations.resize(layers_.size() + 1);
        tape.activations[0] = x;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            Matrix& z = tape.activations[l + 1];
            z.noalias() = layers_[l].weight * tape.activations[l];
            z.colwise() += layers_[l].bias;
            activate(z, l);
        }
        return tape.output();
    }

    /// Gradients of sum_j upstream(:, j) . f(x_j) with respect to the parameters
    /// (summed over the batch) and, when `input_grad` is given, the inputs.
    Gradients backward(const Tape& tape, const Matrix& upstream, Matrix* input_grad = nullptr) const {
        if (tape.activations.size() != layers_.size() + 1) throw DimensionError("backward: tape does not match network");
        const Matrix& out = tape.output();
        if (upstream.rows() != out.rows() || upstream.cols() != out.cols())
            throw DimensionError("backward: upstream gradient shape differs from output");

        Matrix delta = upstream;
        if (spec_.output == OutputActivation::sigmoid) delta.array() *= out.array() * (1.0 - out.array());

        Gradients grads(layers_.size());
        for (std::size_t li = layers_.size(); li-- > 0;) {
            const Matrix& a_in = tape.activations[li];
            grads[li].weight.noalias() = delta * a_in.transpose();
            grads[li].bias = delta.rowwise().sum();
            if (li > 0 || input_grad) {
                Matrix prev = layers_[li].weight.transpose() * delta;
                if (li > 0) prev.array() *= (a_in.array() > 0.0).cast<double>();
                delta = std::move(prev);
            }
        }
        if (input_grad) *input_grad = std::move(delta);
        return grads;
    }

    /// Input gradient only; skips the parameter gradients.
    Matrix input_gradient(const Tape& tape, const Matrix& upstream) const {
        if (tape.activations.size() != layers_.size() + 1) throw DimensionError("input_gradient: tape does not match network");
        const Matrix& out = tape.output();
        if (upstream.rows() != out.rows() || upstream.cols() != out.cols())
            throw DimensionError("input_gradient: upstream gradient shape differs from output");
        Matrix delta = upstream;
        if (spec_.output == OutputActivation::sigmoid) delta.array() *= out.array() * (1.0 - out.array());
        for (std::size_t li = layers_.size(); li-- > 0;) {
            Matrix prev = layers_[li].weight.transpose() * delta;
            if (li > 0) prev.array() *= (tape.activations[li].array() > 0.0).cast<double>();
            delta = std::move(prev);
        }
        return delta;
    }

    /// One Adam step (bias-corrected, beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
    void adam_step(const Gradients& grads, double lr) {
        if (grads.size() != layers_.size()) throw DimensionError("adam_step: gradient layer count differs");
        for (std::size_t l = 0; l < grads.size(); ++l) {
            if (grads[l].weight.rows() != layers_[l].weight.rows() || grads[l].weight.cols() != layers_[l].weight.cols() ||
                grads[l].bias.size() != layers_[l].bias.size())
                throw DimensionError("adam_step: gradient shape differs from parameters");
            if (!grads[l].weight.allFinite() || !grads[l].bias.allFinite()) throw NumericError("adam_step: non-finite gradient");
        }
        ++adam_.step;
        const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adam_.step));
        const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adam_.step));
        auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
            m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
            v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
            param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEps);
        };
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            update(layers_[l].weight, adam_.m[l].weight, adam_.v[l].weight, grads[l].weight);
            update(layers_[l].bias, adam_.m[l].bias, adam_.v[l].bias, grads[l].bias);
        }
    }

    /// Polyak average toward `source`: this <- tau * source + (1 - tau) * this.
    void soft_update(const Mlp& source, double tau) {
        if (!(spec_.widths == source.spec_.widths)) throw DimensionError("soft_update: network shapes differ");
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            layers_[l].weight = tau * source.layers_[l].weight + (1.0 - tau) * layers_[l].weight;
            layers_[l].bias = tau * source.layers_[l].bias + (1.0 - tau) * layers_[l].bias;
        }
    }

    /// Checkpoint layout (host byte order):
    ///   char[8]  "RISVECNN"
    ///   u32      format version (1)
    ///   u32      layer-width count W, then W x i32 widths
    ///   u8       output activation (0 linear, 1 sigmoid)
    ///   per layer: out*in f64 weights (row-major), out f64 biases
    ///   i64      Adam step counter
    ///   per layer: first moments (same layout), then per layer: second moments
    void save(std::ostream& os) const {
        os.write(kMagic, 8);
        put<std::uint32_t>(os, kVersion);
        put<std::uint32_t>(os, static_cast<std::uint32_t>(spec_.widths.size()));
        for (int w : spec_.widths) put<std::int32_t>(os, w);
        put<std::uint8_t>(os, static_cast<std::uint8_t>(spec_.output));
        write_layers(os, layers_);
        put<std::int64_t>(os, adam_.step);
        write_layers(os, adam_.m);
        write_layers(os, adam_.v);
        if (!os) throw std::runtime_error("checkpoint write failed");
    }

    static Mlp load(std::istream& is) {
        char magic[8];
        is.read(magic, 8);
        if (!is || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("checkpoint: bad magic");
        if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("checkpoint: unsupported version");
        const auto count = get<std::uint32_t>(is);
        if (count > 1024) throw std::runtime_error("checkpoint: implausible layer count");
        MlpSpec spec;
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto w = get<std::int32_t>(is);
            if (w < 1 || w > (1 << 24)) throw std::runtime_error("checkpoint: implausible layer width");
            spec.widths.push_back(w);
        }
        const auto act = get<std::uint8_t>(is);
        if (act > 1) throw std::runtime_error("checkpoint: unknown output activation");
        spec.output = static_cast<OutputActivation>(act);
        Mlp net = zeros(std::move(spec));
        read_layers(is, net.layers_);
        net.adam_.step = get<std::int64_t>(is);
        read_layers(is, net.adam_.m);
        read_layers(is, net.adam_.v);
        if (!is) throw std::runtime_error("checkpoint: truncated");
        return net;
    }

private:
    static constexpr char kMagic[8] = {'R', 'I', 'S', 'V', 'E', 'C', 'N', 'N'};
    static constexpr std::uint32_t kVersion = 1;

    void allocate() {
        layers_.clear();
        for (std::size_t l = 0; l + 1 < spec_.widths.size(); ++l)
            layers_.push_back({Matrix::Zero(spec_.widths[l + 1], spec_.widths[l]), Vector::Zero(spec_.widths[l + 1])});
        adam_ = {layers_, layers_, 0};
    }

    void check_input(const Matrix& x) const {
        if (layers_.empty()) throw DimensionError("forward: network is empty");
        if (x.rows() != input_width()) throw DimensionError("forward: input width differs from network input");
    }

    void activate(Matrix& z, std::size_t layer) const {
        if (layer + 1 < layers_.size()) {
            z = z.cwiseMax(0.0);
        } else if (spec_.output == OutputActivation::sigmoid) {
            z = z.unaryExpr([](double v) { return sigmoid(v); });
        }
    }

    template <typename T>
    static void put(std::ostream& os, T v) {
        os.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    template <typename T>
    static T get(std::istream& is) {
        T v{};
        is.read(reinterpret_cast<char*>(&v), sizeof(T));
        return v;
    }

    static void write_layers(std::ostream& os, const std::vector<Layer>& layers) {
        for (const auto& l : layers) {
            for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
                for (Eigen::Index c = 0; c < l.weight.cols(); ++c) put<double>(os, l.weight(r, c));
            for (Eigen::Index r = 0; r < l.bias.size(); ++r) put<double>(os, l.bias[r]);
        }
    }
    static void read_layers(std::istream& is, std::vector<Layer>& layers) {
        for (auto& l : layers) {
            for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
                for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = get<double>(is);
            for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = get<double>(is);
        }
    }

    MlpSpec spec_;
    std::vector<Layer> layers_;
    AdamState adam_;
};

/// Free-function forms of the network operations.
inline Vector forward(const Mlp& net, const Vector& x) { return net.forward(x); }
inline void adam_step(Mlp& net, const Gradients& g, double lr) { net.adam_step(g, lr); }
inline void soft_update(Mlp& target, const Mlp& source, double tau) { target.soft_update(source, tau); }

}  // namespace risvec::nn
