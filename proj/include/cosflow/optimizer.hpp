// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cosflow/velocity_model.hpp"

#include <cstdint>

namespace cosflow {

struct OptimConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 1e-4;

    void validate() const;
};

/// AdamW moments. `step` counts updates since the moments were (re)initialised.
struct OptimState {
    OptimConfig config;
    std::vector<DenseLayer> first_moment;
    std::vector<DenseLayer> second_moment;
    std::int64_t step = 0;
};

/// Zero moments shaped like `params`.
OptimState make_optim_state(const ModelParams& params, const OptimConfig& config);

/// One decoupled-weight-decay Adam update with bias correction:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
/// Throws ShapeError when grads or state do not match params.
void optimizer_step(ModelParams& params, const GradientSet& grads, OptimState& state);

}  // namespace cosflow
