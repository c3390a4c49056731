// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/interpolant.hpp"

#include <doctest.h>

using namespace cosflow;

namespace {

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("schedule_at endpoints and midpoint") {
    const ScheduleValues s0 = schedule_at(0.0);
    CHECK(s0.alpha == 1.0);
    CHECK(s0.sigma == 0.0);
    CHECK(s0.alpha_dot == -1.0);
    CHECK(s0.sigma_dot == 1.0);
    CHECK(s0.w == 0.0);

    const ScheduleValues s1 = schedule_at(1.0);
    CHECK(s1.alpha == 0.0);
    CHECK(s1.sigma == 1.0);
    CHECK(s1.w == 1.0);

    const ScheduleValues h = schedule_at(0.5);
    CHECK(h.alpha == 0.5);
    CHECK(h.sigma == 0.5);
    CHECK(h.w == 0.5);
}

TEST_CASE("wronskian is one across the interval") {
    for (int k = 0; k <= 100; ++k) {
        CHECK(schedule_at(k / 100.0).wronskian() == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("schedule_at rejects times outside [0, 1]") {
    CHECK_THROWS_AS(schedule_at(-1e-9), DomainError);
    CHECK_THROWS_AS(schedule_at(1.0 + 1e-9), DomainError);
    CHECK_THROWS_AS(schedule_at(std::nan("")), DomainError);
}

TEST_CASE("forward_sample examples") {
    const Vector data = vec2(2, 0);
    const Vector noise = vec2(0, 2);

    PathSample p = forward_sample(data, noise, 0.0);
    CHECK(p.x_t == vec2(2, 0));
    CHECK(p.v_target == vec2(-2, 2));

    p = forward_sample(data, noise, 1.0);
    CHECK(p.x_t == vec2(0, 2));

    p = forward_sample(data, noise, 0.5);
    CHECK(p.x_t == vec2(1, 1));
    CHECK(p.v_target == vec2(-2, 2));

    CHECK_THROWS_AS(forward_sample(data, Vector::Zero(3), 0.5), ShapeError);
}

TEST_CASE("forward_batch matches per-row forward_sample") {
    Batch data(3, 2), noise(3, 2);
    data << 1, 2, 3, 4, 5, 6;
    noise << -1, 0, 0.5, 2, 7, -3;
    Vector t(3);
    t << 0.1, 0.5, 0.9;
    const PathBatch b = forward_batch(data, noise, t);
    for (int i = 0; i < 3; ++i) {
        const PathSample p = forward_sample(data.row(i).transpose(), noise.row(i).transpose(), t(i));
        CHECK(Vector(b.x_t.row(i).transpose()) == p.x_t);
        CHECK(Vector(b.v_target.row(i).transpose()) == p.v_target);
    }
    CHECK_THROWS_AS(forward_batch(data, noise, Vector::Zero(2)), ShapeError);
}

TEST_CASE("score from velocity: point-mass oracle") {
    const Vector s = score_from_velocity(vec2(1, 0), vec2(2, 0), 0.5);
    CHECK(s(0) == doctest::Approx(-4.0).epsilon(1e-14));
    CHECK(s(1) == 0.0);
}

TEST_CASE("score from velocity: standard Gaussian oracle") {
    const double t = 0.5;
    const Vector x = vec2(1, 0);
    const double var = (1 - t) * (1 - t) + t * t;
    const Vector v = (t - (1 - t)) / var * x;
    const Vector s = score_from_velocity(x, v, t);
    CHECK(s(0) == doctest::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("score vanishes when alpha v equals alpha_dot x") {
    const double t = 0.3;
    const Vector x = vec2(0.7, -1.2);
    const Vector v = -x / (1 - t);
    CHECK(score_from_velocity(x, v, t).norm() < 1e-15);
}

TEST_CASE("paper sign flips the score") {
    const Vector a = score_from_velocity(vec2(1, 0), vec2(2, 0), 0.5, kDefaultTimeClip, ScoreSign::derived);
    const Vector b = score_from_velocity(vec2(1, 0), vec2(2, 0), 0.5, kDefaultTimeClip, ScoreSign::paper);
    CHECK(b == -a);
    CHECK(parse_score_sign("paper") == ScoreSign::paper);
    CHECK(std::string(to_string(ScoreSign::derived)) == "derived");
    CHECK_THROWS_AS(parse_score_sign("bogus"), ConfigError);
}

TEST_CASE("score rejects t below the clip") {
    CHECK_THROWS_AS(score_from_velocity(vec2(1, 0), vec2(1, 0), 1e-4), DomainError);
    CHECK_NOTHROW(score_from_velocity(vec2(1, 0), vec2(1, 0), 1e-4, 1e-5));
}

TEST_CASE("batched score equals per-row score") {
    Batch x(2, 2), v(2, 2);
    x << 1, 0, 0.3, -2;
    v << 2, 0, 1, 1;
    const Batch s = score_from_velocity(x, v, 0.4);
    for (int i = 0; i < 2; ++i) {
        const Vector r = score_from_velocity(Vector(x.row(i).transpose()), Vector(v.row(i).transpose()), 0.4);
        CHECK((Vector(s.row(i).transpose()) - r).norm() < 1e-15);
    }
}

TEST_CASE("sde drift examples") {
    const DriftTerms<Vector> d0 = sde_drift(vec2(1, 1), vec2(3, -1), vec2(5, 5), 0.0);
    CHECK(d0.drift == vec2(3, -1));
    CHECK(d0.diffusion == 0.0);

    const DriftTerms<Vector> d = sde_drift(vec2(0, 0), vec2(1, 1), vec2(2, 0), 0.5);
    CHECK(d.drift(0) == doctest::Approx(0.5));
    CHECK(d.drift(1) == doctest::Approx(1.0));
    CHECK(d.diffusion == doctest::Approx(std::sqrt(0.5)));

    for (double t : {0.1, 0.6, 1.0}) {
        CHECK(sde_drift(vec2(0, 0), vec2(1, 2), vec2(0, 0), t).drift == vec2(1, 2));
    }
    CHECK_THROWS_AS(sde_drift(vec2(0, 0), vec2(1, 1), Vector::Zero(3), 0.5), ShapeError);
}
