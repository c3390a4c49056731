// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/interpolant.hpp"

#include <cmath>
#include <string>

namespace cosflow {

namespace {

void require_time(double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw DomainError("time " + std::to_string(t) + " outside [0, 1]");
    }
}

template <class A, class B>
void require_same_shape(const A& a, const B& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
    }
}

// Common factor of the score identity: sign / (sigma * wronskian).
double score_prefactor(const ScheduleValues& s, ScoreSign sign) {
    const double magnitude = 1.0 / (s.sigma * s.wronskian());
    return sign == ScoreSign::derived ? -magnitude : magnitude;
}

ScheduleValues checked_score_schedule(double t, double t_clip) {
    if (!(t >= t_clip)) {
        throw DomainError("score undefined below time clip " + std::to_string(t_clip) + " (t = " +
                          std::to_string(t) + ")");
    }
    return schedule_at(t);
}

}  // namespace

ScheduleValues schedule_at(double t) {
    require_time(t);
    return ScheduleValues{t, 1.0 - t, t, -1.0, 1.0, t};
}

PathSample forward_sample(const Vector& data, const Vector& noise, double t) {
    require_same_shape(data, noise, "forward_sample");
    const ScheduleValues s = schedule_at(t);
    PathSample out{data, noise, t, s.alpha * data + s.sigma * noise,
                   s.alpha_dot * data + s.sigma_dot * noise};
    return out;
}

PathBatch forward_batch(const Batch& data, const Batch& noise, const Vector& t) {
    require_same_shape(data, noise, "forward_batch");
    if (t.size() != data.rows()) {
        throw ShapeError("forward_batch: one time per row required");
    }
    PathBatch out{data, noise, t, Batch(data.rows(), data.cols()), Batch(data.rows(), data.cols())};
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const ScheduleValues s = schedule_at(t(i));
        out.x_t.row(i) = s.alpha * data.row(i) + s.sigma * noise.row(i);
        out.v_target.row(i) = s.alpha_dot * data.row(i) + s.sigma_dot * noise.row(i);
    }
    return out;
}

Vector score_from_velocity(const Vector& x, const Vector& v, double t, double t_clip, ScoreSign sign) {
    require_same_shape(x, v, "score_from_velocity");
    const ScheduleValues s = checked_score_schedule(t, t_clip);
    return score_prefactor(s, sign) * (s.alpha * v - s.alpha_dot * x);
}

Batch score_from_velocity(const Batch& x, const Batch& v, double t, double t_clip, ScoreSign sign) {
    require_same_shape(x, v, "score_from_velocity");
    const ScheduleValues s = checked_score_schedule(t, t_clip);
    return score_prefactor(s, sign) * (s.alpha * v - s.alpha_dot * x);
}

DriftTerms<Vector> sde_drift(const Vector& x, const Vector& v, const Vector& s, double t) {
    require_same_shape(x, v, "sde_drift");
    require_same_shape(x, s, "sde_drift");
    const ScheduleValues sv = schedule_at(t);
    return {v - 0.5 * sv.w * s, std::sqrt(sv.w)};
}

DriftTerms<Batch> sde_drift(const Batch& x, const Batch& v, const Batch& s, double t) {
    require_same_shape(x, v, "sde_drift");
    require_same_shape(x, s, "sde_drift");
    const ScheduleValues sv = schedule_at(t);
    return {v - 0.5 * sv.w * s, std::sqrt(sv.w)};
}

const char* to_string(ScoreSign sign) noexcept {
    return sign == ScoreSign::derived ? "derived" : "paper";
}

ScoreSign parse_score_sign(const std::string& name) {
    if (name == "derived") return ScoreSign::derived;
    if (name == "paper") return ScoreSign::paper;
    throw ConfigError("unknown score_sign '" + name + "' (expected derived|paper)");
}

}  // namespace cosflow
