// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/optimizer.hpp"

#include <cmath>

namespace cosflow {

namespace {

bool same_shapes(const std::vector<DenseLayer>& a, const std::vector<DenseLayer>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t l = 0; l < a.size(); ++l) {
        if (a[l].weight.rows() != b[l].weight.rows() || a[l].weight.cols() != b[l].weight.cols() ||
            a[l].bias.size() != b[l].bias.size()) {
            return false;
        }
    }
    return true;
}

std::vector<DenseLayer> zeros_like(const std::vector<DenseLayer>& layers) {
    std::vector<DenseLayer> out;
    out.reserve(layers.size());
    for (const DenseLayer& layer : layers) {
        out.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                       Eigen::VectorXd::Zero(layer.bias.size())});
    }
    return out;
}

template <class P, class G, class M>
void adamw_update(P& param, const G& grad, M& m, M& v, const OptimConfig& c, double bc1, double bc2) {
    m = c.beta1 * m + (1.0 - c.beta1) * grad;
    v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
    const auto m_hat = m.array() / bc1;
    const auto v_hat = v.array() / bc2;
    param.array() -= c.lr * (m_hat / (v_hat.sqrt() + c.eps) + c.weight_decay * param.array());
}

}  // namespace

void OptimConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("optimizer: lr must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optimizer: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optimizer: beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("optimizer: eps must be > 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("optimizer: weight_decay must be >= 0");
}

OptimState make_optim_state(const ModelParams& params, const OptimConfig& config) {
    config.validate();
    return OptimState{config, zeros_like(params.layers), zeros_like(params.layers), 0};
}

void optimizer_step(ModelParams& params, const GradientSet& grads, OptimState& state) {
    if (!same_shapes(params.layers, grads.layers) || !same_shapes(params.layers, state.first_moment) ||
        !same_shapes(params.layers, state.second_moment)) {
        throw ShapeError("optimizer_step: parameter, gradient and moment shapes differ");
    }
    ++state.step;
    const OptimConfig& c = state.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        adamw_update(params.layers[l].weight, grads.layers[l].weight, state.first_moment[l].weight,
                     state.second_moment[l].weight, c, bc1, bc2);
        adamw_update(params.layers[l].bias, grads.layers[l].bias, state.first_moment[l].bias,
                     state.second_moment[l].bias, c, bc1, bc2);
    }
    ++params.steps;
}

}  // namespace cosflow
