// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/velocity_model.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <string>

namespace cosflow {

namespace {

using Matrix = Eigen::MatrixXd;

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu(double z) { return 0.5 * z * (1.0 + std::erf(z * kInvSqrt2)); }

double gelu_grad(double z) {
    return 0.5 * (1.0 + std::erf(z * kInvSqrt2)) + z * kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

void require_inputs(const ModelParams& params, const Batch& x, const Vector& t) {
    if (x.cols() != params.dim) {
        throw ShapeError("forward: expected dimension " + std::to_string(params.dim) + ", got " +
                         std::to_string(x.cols()));
    }
    if (t.size() != x.rows()) {
        throw ShapeError("forward: one time per row required");
    }
    if (!x.allFinite() || !t.allFinite()) {
        throw DomainError("forward: non-finite input");
    }
    if ((t.array() < 0.0).any() || (t.array() > 1.0).any()) {
        throw DomainError("forward: time outside [0, 1]");
    }
}

Matrix input_features(const ModelParams& params, const Batch& x, const Vector& t) {
    Matrix in(x.rows(), params.input_width());
    in.leftCols(params.dim) = x;
    in.rightCols(2 * params.time_features) = time_embedding(t, params.time_features);
    return in;
}

// Pre-activations of every layer; activations are recomputed from them.
struct Tape {
    std::vector<Matrix> inputs;  // input to layer l (post-activation of l-1)
    std::vector<Matrix> pre;     // pre-activation of layer l
};

Matrix run(const ModelParams& params, Matrix h, Tape* tape) {
    const std::size_t n_layers = params.layers.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        const DenseLayer& layer = params.layers[l];
        Matrix z = h * layer.weight;
        z.rowwise() += layer.bias.transpose();
        if (tape) {
            tape->inputs.push_back(std::move(h));
        }
        if (l + 1 == n_layers) {
            h = std::move(z);
        } else {
            h = z.unaryExpr(&gelu);
            if (tape) tape->pre.push_back(std::move(z));
        }
    }
    return h;
}

template <class Fn>
void for_each_param(const std::vector<DenseLayer>& layers, Fn&& fn) {
    for (const DenseLayer& layer : layers) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) fn(layer.weight(r, c));
        }
        for (Eigen::Index k = 0; k < layer.bias.size(); ++k) fn(layer.bias(k));
    }
}

Eigen::VectorXd flatten_layers(const std::vector<DenseLayer>& layers) {
    std::size_t count = 0;
    for_each_param(layers, [&](double) { ++count; });
    Eigen::VectorXd flat(static_cast<Eigen::Index>(count));
    Eigen::Index k = 0;
    for_each_param(layers, [&](double v) { flat(k++) = v; });
    return flat;
}

}  // namespace

std::size_t ModelParams::parameter_count() const noexcept {
    std::size_t count = 0;
    for (const DenseLayer& layer : layers) {
        count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    }
    return count;
}

double GradientSet::norm() const {
    double sq = 0.0;
    for (const DenseLayer& layer : layers) {
        sq += layer.weight.squaredNorm() + layer.bias.squaredNorm();
    }
    return std::sqrt(sq);
}

Eigen::VectorXd GradientSet::flatten() const { return flatten_layers(layers); }

ModelParams init_params(std::uint64_t seed, const std::vector<int>& hidden, int dim, int time_features) {
    if (hidden.empty()) throw ConfigError("init_params: at least one hidden width required");
    if (dim < 1) throw ConfigError("init_params: dimension must be positive");
    if (time_features < 0) throw ConfigError("init_params: time_features must be >= 0");
    for (int w : hidden) {
        if (w < 1) throw ConfigError("init_params: hidden widths must be positive");
    }

    ModelParams params;
    params.dim = dim;
    params.time_features = time_features;
    params.hidden = hidden;
    params.init_seed = seed;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    int fan_in = params.input_width();
    std::vector<int> widths = hidden;
    widths.push_back(dim);
    for (int fan_out : widths) {
        DenseLayer layer{Matrix(fan_in, fan_out), Eigen::VectorXd::Zero(fan_out)};
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = scale * normal(rng);
        }
        params.layers.push_back(std::move(layer));
        fan_in = fan_out;
    }
    return params;
}

Batch time_embedding(const Vector& t, int time_features) {
    Batch out(t.size(), 2 * time_features);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        for (int k = 0; k < time_features; ++k) {
            const double phase = std::ldexp(std::numbers::pi, k) * t(i);
            out(i, 2 * k) = std::sin(phase);
            out(i, 2 * k + 1) = std::cos(phase);
        }
    }
    return out;
}

Batch forward(const ModelParams& params, const Batch& x, const Vector& t) {
    require_inputs(params, x, t);
    return run(params, input_features(params, x, t), nullptr);
}

Vector forward(const ModelParams& params, const Vector& x, double t) {
    Batch row = x.transpose();
    Vector times = Vector::Constant(1, t);
    return forward(params, row, times).row(0).transpose();
}

double loss_value(const ModelParams& params, const PathBatch& batch) {
    if (batch.size() == 0) throw DomainError("loss: empty batch");
    const Batch out = forward(params, batch.x_t, batch.t);
    return (out - batch.v_target).rowwise().squaredNorm().mean();
}

LossAndGrad loss_and_grad(const ModelParams& params, const PathBatch& batch) {
    if (batch.size() == 0) throw DomainError("loss_and_grad: empty batch");
    require_inputs(params, batch.x_t, batch.t);
    const double n = static_cast<double>(batch.size());

    Tape tape;
    const Matrix out = run(params, input_features(params, batch.x_t, batch.t), &tape);
    const Matrix residual = out - batch.v_target;
    const double loss = residual.rowwise().squaredNorm().mean();

    GradientSet grad;
    grad.layers.resize(params.layers.size());
    Matrix delta = (2.0 / n) * residual;  // dL/dz of the output layer
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        grad.layers[l].weight = tape.inputs[l].transpose() * delta;
        grad.layers[l].bias = delta.colwise().sum().transpose();
        if (l == 0) break;
        Matrix upstream = delta * params.layers[l].weight.transpose();
        delta = upstream.cwiseProduct(tape.pre[l - 1].unaryExpr(&gelu_grad));
    }
    return {loss, std::move(grad)};
}

Eigen::VectorXd flatten_params(const ModelParams& params) { return flatten_layers(params.layers); }

void assign_flat_params(ModelParams& params, const Eigen::VectorXd& flat) {
    if (static_cast<std::size_t>(flat.size()) != params.parameter_count()) {
        throw ShapeError("assign_flat_params: size mismatch");
    }
    Eigen::Index k = 0;
    for (DenseLayer& layer : params.layers) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = flat(k++);
        }
        for (Eigen::Index b = 0; b < layer.bias.size(); ++b) layer.bias(b) = flat(k++);
    }
}

bool bitwise_equal(const ModelParams& a, const ModelParams& b) {
    if (a.dim != b.dim || a.time_features != b.time_features || a.hidden != b.hidden ||
        a.layers.size() != b.layers.size()) {
        return false;
    }
    const Eigen::VectorXd fa = flatten_params(a);
    const Eigen::VectorXd fb = flatten_params(b);
    return fa.size() == fb.size() &&
           std::memcmp(fa.data(), fb.data(), static_cast<std::size_t>(fa.size()) * sizeof(double)) == 0;
}

}  // namespace cosflow
