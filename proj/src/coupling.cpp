// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cosflow {

namespace {

// Reduced costs and plan costs within this band of the optimum count as ties.
double tie_tolerance(const CostMatrix& cost) {
    const double scale = cost.entries.size() == 0 ? 1.0 : cost.entries.cwiseAbs().maxCoeff();
    return 1e-11 * std::max(1.0, scale);
}

void require_valid(const CostMatrix& cost) {
    if (cost.entries.rows() != cost.entries.cols()) {
        throw ShapeError("cost matrix must be square");
    }
    if (cost.entries.rows() == 0) {
        throw DomainError("cost matrix is empty");
    }
    if (!cost.entries.allFinite()) {
        throw DomainError("cost matrix has non-finite entries");
    }
}

// Greedy row-by-row search for the lexicographically smallest perfect matching in
// the bipartite graph of tight edges, starting from a known perfect matching.
// Fixing (i, j) is feasible iff an alternating path re-matches the displaced row
// to the column i gave up, through rows and columns that are still free.
class TightMatching {
public:
    TightMatching(std::vector<std::vector<char>> tight, std::vector<int> row_to_col)
        : tight_(std::move(tight)), row_to_col_(std::move(row_to_col)) {
        const int n = static_cast<int>(row_to_col_.size());
        col_to_row_.assign(n, -1);
        for (int i = 0; i < n; ++i) col_to_row_[row_to_col_[i]] = i;
        row_fixed_.assign(n, 0);
        col_fixed_.assign(n, 0);
    }

    std::vector<int> lexicographic_min() {
        const int n = static_cast<int>(row_to_col_.size());
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (!tight_[i][j] || col_fixed_[j]) continue;
                if (row_to_col_[i] == j || try_force(i, j)) {
                    row_fixed_[i] = 1;
                    col_fixed_[j] = 1;
                    break;
                }
            }
        }
        return row_to_col_;
    }

private:
    bool try_force(int i, int j) {
        const int displaced_row = col_to_row_[j];
        const int freed_col = row_to_col_[i];
        std::vector<int> saved_r2c = row_to_col_;
        std::vector<int> saved_c2r = col_to_row_;

        row_to_col_[i] = j;
        col_to_row_[j] = i;
        col_to_row_[freed_col] = -1;
        row_to_col_[displaced_row] = -1;
        row_fixed_[i] = 1;
        col_fixed_[j] = 1;

        std::vector<char> visited(row_to_col_.size(), 0);
        const bool ok = augment(displaced_row, visited);

        row_fixed_[i] = 0;
        col_fixed_[j] = 0;
        if (!ok) {
            row_to_col_ = std::move(saved_r2c);
            col_to_row_ = std::move(saved_c2r);
        }
        return ok;
    }

    // Kuhn-style DFS: find a tight free-graph column for `row`, displacing others.
    bool augment(int row, std::vector<char>& visited_cols) {
        const int n = static_cast<int>(row_to_col_.size());
        for (int c = 0; c < n; ++c) {
            if (!tight_[row][c] || col_fixed_[c] || visited_cols[c]) continue;
            visited_cols[c] = 1;
            const int owner = col_to_row_[c];
            if (owner < 0 || (!row_fixed_[owner] && augment(owner, visited_cols))) {
                row_to_col_[row] = c;
                col_to_row_[c] = row;
                return true;
            }
        }
        return false;
    }

    std::vector<std::vector<char>> tight_;
    std::vector<int> row_to_col_;
    std::vector<int> col_to_row_;
    std::vector<char> row_fixed_;
    std::vector<char> col_fixed_;
};

}  // namespace

const char* to_string(CostKind kind) noexcept {
    return kind == CostKind::neg_cosine ? "neg_cosine" : "sq_euclidean";
}

CostKind parse_cost_kind(const std::string& name) {
    if (name == "neg_cosine") return CostKind::neg_cosine;
    if (name == "sq_euclidean") return CostKind::sq_euclidean;
    throw ConfigError("unknown cost kind '" + name + "' (expected neg_cosine|sq_euclidean)");
}

CostMatrix build_cost_matrix(const Batch& data, const Batch& noise, CostKind kind) {
    if (data.rows() == 0 || noise.rows() == 0) {
        throw DomainError("build_cost_matrix: empty batch");
    }
    if (data.rows() != noise.rows() || data.cols() != noise.cols()) {
        throw ShapeError("build_cost_matrix: data and noise batches must have equal shape");
    }
    const Eigen::Index n = data.rows();
    CostMatrix cost{Eigen::MatrixXd(n, n), kind};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            cost.entries(i, j) = kind == CostKind::neg_cosine
                                     ? -cosine_similarity(data.row(i), noise.row(j))
                                     : (data.row(i) - noise.row(j)).squaredNorm();
        }
    }
    return cost;
}

double plan_cost(const CostMatrix& cost, const std::vector<int>& perm) {
    double total = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        total += cost.entries(static_cast<Eigen::Index>(i), perm[i]);
    }
    return total;
}

AssignmentPlan solve_assignment(const CostMatrix& cost) {
    require_valid(cost);
    const int n = static_cast<int>(cost.size());
    const auto& a = cost.entries;
    constexpr double inf = std::numeric_limits<double>::infinity();

    // 1-based potentials; column 0 is the virtual source of each augmentation.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> owner(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        owner[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = owner[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (owner[j0] != 0);
        do {
            const int j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> perm(n, -1);
    for (int j = 1; j <= n; ++j) perm[owner[j] - 1] = j - 1;

    // Complementary slackness: every optimal permutation uses only tight edges.
    const double tol = tie_tolerance(cost);
    std::vector<std::vector<char>> tight(n, std::vector<char>(n, 0));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            tight[i][j] = (a(i, j) - u[i + 1] - v[j + 1]) <= tol ? 1 : 0;
        }
        tight[i][perm[i]] = 1;
    }
    perm = TightMatching(std::move(tight), std::move(perm)).lexicographic_min();

    AssignmentPlan plan{std::move(perm), 0.0, cost.kind};
    plan.total_cost = plan_cost(cost, plan.perm);
    return plan;
}

AssignmentPlan brute_force_assignment(const CostMatrix& cost) {
    require_valid(cost);
    const int n = static_cast<int>(cost.size());
    if (n > kBruteForceLimit) {
        throw DomainError("brute_force_assignment refuses n = " + std::to_string(n) + " > " +
                          std::to_string(kBruteForceLimit));
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);

    double best = std::numeric_limits<double>::infinity();
    do {
        best = std::min(best, plan_cost(cost, perm));
    } while (std::next_permutation(perm.begin(), perm.end()));

    // next_permutation visits permutations in lexicographic order.
    const double tol = tie_tolerance(cost);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        const double c = plan_cost(cost, perm);
        if (c <= best + tol) {
            return AssignmentPlan{perm, c, cost.kind};
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    throw std::logic_error("brute_force_assignment: no permutation reached the minimum");
}

DualityReport verify_duality(const Batch& data, const Batch& noise) {
    const CostMatrix cost = build_cost_matrix(data, noise, CostKind::neg_cosine);
    const int n = static_cast<int>(cost.size());
    if (n > kBruteForceLimit) {
        throw DomainError("verify_duality enumerates permutations; n must be <= 8");
    }
    Eigen::MatrixXd similarity(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) similarity(i, j) = cosine_similarity(data.row(i), noise.row(j));
    }

    std::vector<std::vector<int>> perms;
    std::vector<double> costs, sims;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        double c = 0.0, s = 0.0;
        for (int i = 0; i < n; ++i) {
            c += cost.entries(i, perm[i]);
            s += similarity(i, perm[i]);
        }
        perms.push_back(perm);
        costs.push_back(c);
        sims.push_back(s);
    } while (std::next_permutation(perm.begin(), perm.end()));

    DualityReport report;
    report.n = n;
    report.permutations = perms.size();
    const double min_cost = *std::min_element(costs.begin(), costs.end());
    const double max_sim = *std::max_element(sims.begin(), sims.end());
    constexpr double set_tol = 1e-12;
    for (std::size_t k = 0; k < perms.size(); ++k) {
        report.max_identity_error = std::max(report.max_identity_error, std::abs(costs[k] + sims[k]));
        if (costs[k] <= min_cost + set_tol) report.argmin_cost.push_back(perms[k]);
        if (sims[k] >= max_sim - set_tol) report.argmax_similarity.push_back(perms[k]);
    }
    report.sets_equal = report.argmin_cost == report.argmax_similarity;
    return report;
}

nlohmann::json to_json(const CostMatrix& cost) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < cost.entries.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < cost.entries.cols(); ++j) row.push_back(cost.entries(i, j));
        rows.push_back(std::move(row));
    }
    return {{"cost_kind", to_string(cost.kind)}, {"n", cost.entries.rows()}, {"entries", std::move(rows)}};
}

nlohmann::json to_json(const AssignmentPlan& plan) {
    nlohmann::json out{{"cost_kind", to_string(plan.kind)}, {"perm", plan.perm}, {"total_cost", plan.total_cost}};
    if (auto s = plan.total_similarity()) out["total_similarity"] = *s;
    return out;
}

}  // namespace cosflow
