// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-sample distances between generated and reference point clouds.

#pragma once

#include "cosflow/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>

namespace cosflow {

/// v_statistic averages over all pairs including i = i' and is the squared energy
/// distance between the two empirical measures (>= 0, zero iff the multisets agree).
/// u_statistic drops the diagonal of the within-sample terms; it is unbiased for the
/// population distance but can be negative at small n.
enum class EnergyEstimator { v_statistic, u_statistic };

/// 2 E|a - b| - E|a - a'| - E|b - b'|.
double energy_distance(const Batch& a, const Batch& b, EnergyEstimator estimator = EnergyEstimator::v_statistic);

/// Exact 1-D W2 between equal-size samples: sorted matching.
double exact_w2_1d(std::span<const double> a, std::span<const double> b);

/// Mean of exact_w2_1d over `n_proj` uniformly random unit directions.
double sliced_w2(const Batch& a, const Batch& b, int n_proj, std::uint64_t seed);

struct MetricReport {
    std::string metric;
    double value = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::string config_digest;

    [[nodiscard]] nlohmann::json to_json() const;
};

}  // namespace cosflow
