// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Linear stochastic interpolant x_t = (1 - t) x_* + t eps, its velocity target,
// the score recovered from a velocity field and the reverse-time SDE drift.

#pragma once

#include "cosflow/types.hpp"

namespace cosflow {

/// Lower time clip for anything that divides by sigma_t.
inline constexpr double kDefaultTimeClip = 1e-3;

/// Coefficients of the interpolant at a single time.
struct ScheduleValues {
    double t;
    double alpha;
    double sigma;
    double alpha_dot;
    double sigma_dot;
    double w;  ///< diffusion coefficient of the reverse SDE

    /// alpha * sigma_dot - alpha_dot * sigma; identically 1 for the linear schedule.
    [[nodiscard]] double wronskian() const noexcept { return alpha * sigma_dot - alpha_dot * sigma; }
};

/// Linear schedule. Throws DomainError unless 0 <= t <= 1.
ScheduleValues schedule_at(double t);

struct PathSample {
    Vector data;
    Vector noise;
    double t;
    Vector x_t;
    Vector v_target;
};

/// Struct-of-arrays form of a batch of PathSample, one pair per row.
struct PathBatch {
    Batch data;
    Batch noise;
    Vector t;
    Batch x_t;
    Batch v_target;

    [[nodiscard]] Eigen::Index size() const noexcept { return data.rows(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return data.cols(); }
};

PathSample forward_sample(const Vector& data, const Vector& noise, double t);

/// Row i pairs data.row(i) with noise.row(i) at time t(i).
PathBatch forward_batch(const Batch& data, const Batch& noise, const Vector& t);

/// `derived` is the sign obtained by solving the interpolant/velocity system for
/// E[eps | x]. `paper` flips the prefactor to positive; it is kept only so the
/// oracle tests can show that it is wrong.
enum class ScoreSign { derived, paper };

/// s = -(1/sigma) (alpha v - alpha_dot x) / (alpha sigma_dot - alpha_dot sigma).
/// Throws DomainError when t < t_clip or t > 1.
Vector score_from_velocity(const Vector& x, const Vector& v, double t,
                           double t_clip = kDefaultTimeClip, ScoreSign sign = ScoreSign::derived);
Batch score_from_velocity(const Batch& x, const Batch& v, double t,
                          double t_clip = kDefaultTimeClip, ScoreSign sign = ScoreSign::derived);

/// Deterministic drift v - w s / 2 together with the diffusion magnitude sqrt(w).
template <class T>
struct DriftTerms {
    T drift;
    double diffusion;
};

DriftTerms<Vector> sde_drift(const Vector& x, const Vector& v, const Vector& s, double t);
DriftTerms<Batch> sde_drift(const Batch& x, const Batch& v, const Batch& s, double t);

const char* to_string(ScoreSign sign) noexcept;
ScoreSign parse_score_sign(const std::string& name);

}  // namespace cosflow
