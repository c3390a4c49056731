// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared numeric aliases and the error hierarchy used across the library.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cosflow {

/// A single point in state space (unitless feature coordinates).
using Vector = Eigen::VectorXd;

/// A batch of points, one sample per row.
using Batch = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Argument outside the mathematical domain of an operation (t out of range, empty batch, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Dimension or batch-size mismatch between operands.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Rejected configuration; raised before any work is done.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// File could not be read, written or parsed.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Integrator produced a non-finite state.
struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// splitmix64 finaliser; used to derive independent seed streams from one base seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    return mix_seed(base ^ mix_seed(stream));
}

}  // namespace cosflow
