// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic distributions.
//
//   gauss_mixture_2d  k equal-weight isotropic Gaussians (std `component_std`) with
//                     means r (cos 2 pi j / k, sin 2 pi j / k). Mean 0; covariance
//                     (r^2 / 2 + std^2) I for k >= 3.
//   checkerboard_2d   uniform on the "black" cells (ix + iy even) of a `cells` x `cells`
//                     grid of unit squares centred on the origin.
//   aniso_gauss_hd    N(0, R diag(decay^0, ..., decay^(d-1)) R^T); R is a Haar rotation
//                     fixed by `rotation_seed`, independent of the sample seed.

#pragma once

#include "cosflow/types.hpp"

#include <cstdint>
#include <string>

namespace cosflow {

enum class DatasetKind { gauss_mixture_2d, checkerboard_2d, aniso_gauss_hd };

const char* to_string(DatasetKind kind) noexcept;
DatasetKind parse_dataset_kind(const std::string& name);

struct DatasetSpec {
    DatasetKind kind = DatasetKind::gauss_mixture_2d;
    int n = 4096;
    int d = 2;
    std::uint64_t seed = 0;
    int modes = 8;
    double radius = 4.0;
    double component_std = 0.3;
    int cells = 4;
    double decay = 0.7;
    std::uint64_t rotation_seed = 0;

    /// Throws ConfigError.
    void validate() const;
};

Batch generate(const DatasetSpec& spec);

/// Orthogonal d x d matrix with determinant +1 drawn from the Haar measure.
Eigen::MatrixXd seeded_rotation(int d, std::uint64_t seed);

}  // namespace cosflow
