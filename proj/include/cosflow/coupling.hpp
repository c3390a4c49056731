// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Minibatch couplings between a data batch and a noise batch. Couplings of two
// equal-size empirical measures are restricted to permutations; the optimum of
// the linear assignment problem is attained at one of them.

#pragma once

#include "cosflow/types.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace cosflow {

/// Norm below which a vector is treated as zero for cosine purposes.
inline constexpr double kZeroNorm = 1e-12;

enum class CostKind { neg_cosine, sq_euclidean };

const char* to_string(CostKind kind) noexcept;
CostKind parse_cost_kind(const std::string& name);

/// <x, y> / (|x| |y|), clamped to [-1, 1]; 0 when either norm is below kZeroNorm.
template <class A, class B>
double cosine_similarity(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
    if (x.size() != y.size()) {
        throw ShapeError("cosine_similarity: dimension mismatch");
    }
    double dot = 0.0, xx = 0.0, yy = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double a = x.coeff(i);
        const double b = y.coeff(i);
        dot += a * b;
        xx += a * a;
        yy += b * b;
    }
    const double nx = std::sqrt(xx);
    const double ny = std::sqrt(yy);
    if (nx < kZeroNorm || ny < kZeroNorm) {
        return 0.0;
    }
    const double c = dot / (nx * ny);
    return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

struct CostMatrix {
    Eigen::MatrixXd entries;  ///< entries(i, j): cost of pairing data i with noise j
    CostKind kind;

    [[nodiscard]] Eigen::Index size() const noexcept { return entries.rows(); }
};

/// perm[i] is the noise index paired with data index i (0-based).
struct AssignmentPlan {
    std::vector<int> perm;
    double total_cost = 0.0;
    CostKind kind = CostKind::neg_cosine;

    /// -total_cost for neg_cosine plans.
    [[nodiscard]] std::optional<double> total_similarity() const {
        if (kind != CostKind::neg_cosine) return std::nullopt;
        return -total_cost;
    }
};

/// Throws DomainError on an empty batch, ShapeError on mismatched shapes.
CostMatrix build_cost_matrix(const Batch& data, const Batch& noise, CostKind kind);

/// Sum of entries(i, perm[i]), accumulated in row order.
double plan_cost(const CostMatrix& cost, const std::vector<int>& perm);

/// Exact minimum-cost assignment (shortest augmenting path Hungarian method, O(n^3)).
/// Among optimal permutations the lexicographically smallest one is returned.
AssignmentPlan solve_assignment(const CostMatrix& cost);

inline constexpr int kBruteForceLimit = 8;

/// Exhaustive search over all n! permutations, same tie rule. Refuses n > 8.
AssignmentPlan brute_force_assignment(const CostMatrix& cost);

/// Outcome of checking the max-similarity / min-cost correspondence by enumeration.
struct DualityReport {
    int n = 0;
    std::size_t permutations = 0;
    double max_identity_error = 0.0;  ///< max over permutations of |C(perm) + J(perm)|
    std::vector<std::vector<int>> argmin_cost;
    std::vector<std::vector<int>> argmax_similarity;
    bool sets_equal = false;

    [[nodiscard]] bool holds(double tol = 1e-12) const { return sets_equal && max_identity_error <= tol; }
};

/// Enumerates every permutation of an n <= 8 batch and compares the argmin of the
/// negative-cosine cost with the argmax of the summed cosine similarity.
DualityReport verify_duality(const Batch& data, const Batch& noise);

nlohmann::json to_json(const CostMatrix& cost);
nlohmann::json to_json(const AssignmentPlan& plan);

}  // namespace cosflow
