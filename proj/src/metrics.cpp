// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace cosflow {

namespace {

// Sum of |x_i - y_j| over all pairs; `skip_diagonal` drops i == j.
double pair_distance_sum(const Batch& x, const Batch& y, bool skip_diagonal) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double row_total = 0.0;
        for (Eigen::Index j = 0; j < y.rows(); ++j) {
            if (skip_diagonal && i == j) continue;
            row_total += (x.row(i) - y.row(j)).norm();
        }
        total += row_total;
    }
    return total;
}

double within_mean(const Batch& x, EnergyEstimator estimator) {
    const auto n = static_cast<double>(x.rows());
    if (estimator == EnergyEstimator::v_statistic) return pair_distance_sum(x, x, false) / (n * n);
    if (x.rows() < 2) return 0.0;
    return pair_distance_sum(x, x, true) / (n * (n - 1.0));
}

}  // namespace

double energy_distance(const Batch& a, const Batch& b, EnergyEstimator estimator) {
    if (a.rows() == 0 || b.rows() == 0) throw DomainError("energy_distance: empty sample");
    if (a.cols() != b.cols()) throw ShapeError("energy_distance: dimension mismatch");
    const double cross = pair_distance_sum(a, b, false) / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
    const double value = 2.0 * cross - within_mean(a, estimator) - within_mean(b, estimator);
    // The V-statistic is a squared metric; rounding can leave it a few ulps below zero.
    return estimator == EnergyEstimator::v_statistic ? std::max(0.0, value) : value;
}

double exact_w2_1d(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("exact_w2_1d: sample sizes differ");
    if (a.empty()) throw DomainError("exact_w2_1d: empty sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    double sq = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) sq += (sa[i] - sb[i]) * (sa[i] - sb[i]);
    return std::sqrt(sq / static_cast<double>(sa.size()));
}

double sliced_w2(const Batch& a, const Batch& b, int n_proj, std::uint64_t seed) {
    if (a.rows() != b.rows()) throw ShapeError("sliced_w2: sample sizes differ");
    if (a.cols() != b.cols()) throw ShapeError("sliced_w2: dimension mismatch");
    if (n_proj < 1) throw DomainError("sliced_w2: n_proj must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector dir(a.cols());
    double total = 0.0;
    for (int p = 0; p < n_proj; ++p) {
        do {
            for (Eigen::Index k = 0; k < dir.size(); ++k) dir(k) = normal(rng);
        } while (dir.norm() < 1e-12);
        dir.normalize();
        const Vector pa = a * dir;
        const Vector pb = b * dir;
        total += exact_w2_1d({pa.data(), static_cast<std::size_t>(pa.size())},
                             {pb.data(), static_cast<std::size_t>(pb.size())});
    }
    return total / n_proj;
}

nlohmann::json MetricReport::to_json() const {
    return {{"metric", metric}, {"value", value}, {"n_samples", n_samples}, {"seed", seed}, {"config_digest", config_digest}};
}

}  // namespace cosflow
