// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/datasets.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace cosflow {

namespace {

Batch mixture(const DatasetSpec& spec, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, spec.modes - 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    Batch out(spec.n, 2);
    for (int i = 0; i < spec.n; ++i) {
        const int j = pick(rng);
        const double angle = 2.0 * std::numbers::pi * j / spec.modes;
        out(i, 0) = spec.radius * std::cos(angle) + spec.component_std * normal(rng);
        out(i, 1) = spec.radius * std::sin(angle) + spec.component_std * normal(rng);
    }
    return out;
}

Batch checkerboard(const DatasetSpec& spec, std::mt19937_64& rng) {
    std::vector<std::pair<int, int>> black;
    for (int ix = 0; ix < spec.cells; ++ix) {
        for (int iy = 0; iy < spec.cells; ++iy) {
            if ((ix + iy) % 2 == 0) black.emplace_back(ix, iy);
        }
    }
    std::uniform_int_distribution<std::size_t> pick(0, black.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double offset = 0.5 * spec.cells;
    Batch out(spec.n, 2);
    for (int i = 0; i < spec.n; ++i) {
        const auto [ix, iy] = black[pick(rng)];
        out(i, 0) = ix + unit(rng) - offset;
        out(i, 1) = iy + unit(rng) - offset;
    }
    return out;
}

Batch aniso(const DatasetSpec& spec, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector scale(spec.d);
    for (int k = 0; k < spec.d; ++k) scale(k) = std::sqrt(std::pow(spec.decay, k));
    Batch z(spec.n, spec.d);
    for (int i = 0; i < spec.n; ++i) {
        for (int k = 0; k < spec.d; ++k) z(i, k) = scale(k) * normal(rng);
    }
    // Rows are samples, so x = R z becomes X = Z R^T.
    return z * seeded_rotation(spec.d, spec.rotation_seed).transpose();
}

}  // namespace

const char* to_string(DatasetKind kind) noexcept {
    switch (kind) {
        case DatasetKind::gauss_mixture_2d: return "gauss_mixture_2d";
        case DatasetKind::checkerboard_2d: return "checkerboard_2d";
        case DatasetKind::aniso_gauss_hd: return "aniso_gauss_hd";
    }
    return "?";
}

DatasetKind parse_dataset_kind(const std::string& name) {
    if (name == "gauss_mixture_2d") return DatasetKind::gauss_mixture_2d;
    if (name == "checkerboard_2d") return DatasetKind::checkerboard_2d;
    if (name == "aniso_gauss_hd") return DatasetKind::aniso_gauss_hd;
    throw ConfigError("unknown dataset kind '" + name + "'");
}

void DatasetSpec::validate() const {
    if (n < 1) throw ConfigError("dataset: n must be >= 1");
    switch (kind) {
        case DatasetKind::gauss_mixture_2d:
            if (d != 2) throw ConfigError("dataset: gauss_mixture_2d requires d = 2");
            if (modes < 1) throw ConfigError("dataset: modes must be >= 1");
            if (!(radius >= 0.0) || !(component_std >= 0.0)) {
                throw ConfigError("dataset: radius and component_std must be >= 0");
            }
            break;
        case DatasetKind::checkerboard_2d:
            if (d != 2) throw ConfigError("dataset: checkerboard_2d requires d = 2");
            if (cells < 1) throw ConfigError("dataset: cells must be >= 1");
            break;
        case DatasetKind::aniso_gauss_hd:
            if (d < 1) throw ConfigError("dataset: d must be >= 1");
            if (!(decay > 0.0)) throw ConfigError("dataset: decay must be > 0");
            break;
    }
}

Batch generate(const DatasetSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    switch (spec.kind) {
        case DatasetKind::gauss_mixture_2d: return mixture(spec, rng);
        case DatasetKind::checkerboard_2d: return checkerboard(spec, rng);
        case DatasetKind::aniso_gauss_hd: return aniso(spec, rng);
    }
    throw ConfigError("dataset: unhandled kind");
}

Eigen::MatrixXd seeded_rotation(int d, std::uint64_t seed) {
    if (d < 1) throw DomainError("seeded_rotation: d must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) g(i, j) = normal(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix column signs so Q is Haar distributed, then force det = +1.
    for (int j = 0; j < d; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    if (q.determinant() < 0.0) q.col(0) = -q.col(0);
    return q;
}

}  // namespace cosflow
