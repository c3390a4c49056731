// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Small MLP velocity field v(x, t) with hand-written reverse-mode gradients.
//
// Input features are [x, sin(2^k pi t), cos(2^k pi t)] for k = 0..F-1, followed
// by GELU hidden layers and a linear output layer of width d.

#pragma once

#include "cosflow/interpolant.hpp"
#include "cosflow/types.hpp"

#include <cstdint>
#include <vector>

namespace cosflow {

inline constexpr int kDefaultTimeFeatures = 4;

struct DenseLayer {
    Eigen::MatrixXd weight;  ///< fan_in x fan_out
    Eigen::VectorXd bias;    ///< fan_out
};

struct ModelParams {
    int dim = 0;
    int time_features = kDefaultTimeFeatures;
    std::vector<int> hidden;
    std::vector<DenseLayer> layers;  ///< hidden.size() + 1 layers
    std::uint64_t init_seed = 0;
    int epoch = 0;             ///< completed training epochs over the whole lineage
    std::int64_t steps = 0;    ///< optimizer updates applied over the whole lineage

    [[nodiscard]] int input_width() const noexcept { return dim + 2 * time_features; }
    [[nodiscard]] std::size_t parameter_count() const noexcept;
};

/// Same shapes as ModelParams::layers.
struct GradientSet {
    std::vector<DenseLayer> layers;

    [[nodiscard]] double norm() const;
    [[nodiscard]] Eigen::VectorXd flatten() const;
};

/// Weights ~ N(0, 1/fan_in), biases zero. Deterministic in `seed`.
ModelParams init_params(std::uint64_t seed, const std::vector<int>& hidden, int dim,
                        int time_features = kDefaultTimeFeatures);

/// Sinusoidal time embedding, one row per time.
Batch time_embedding(const Vector& t, int time_features);

/// Batched forward pass; row i is evaluated at time t(i).
/// Throws DomainError on non-finite inputs or t outside [0, 1].
Batch forward(const ModelParams& params, const Batch& x, const Vector& t);
Vector forward(const ModelParams& params, const Vector& x, double t);

struct LossAndGrad {
    double loss;
    GradientSet grad;
};

/// Mean over rows of |v(x_t, t) - v_target|^2 and its exact gradient.
LossAndGrad loss_and_grad(const ModelParams& params, const PathBatch& batch);
double loss_value(const ModelParams& params, const PathBatch& batch);

/// Flat parameter view, weights (row-major) then bias, layer by layer.
Eigen::VectorXd flatten_params(const ModelParams& params);
void assign_flat_params(ModelParams& params, const Eigen::VectorXd& flat);

bool bitwise_equal(const ModelParams& a, const ModelParams& b);

}  // namespace cosflow
