// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/sampler.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace cosflow;

namespace {

Batch initial_noise(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Batch b(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) b(i, j) = normal(rng);
    }
    return b;
}

const VelocityField zero_field = [](const Batch& x, const Vector&) { return Batch(Batch::Zero(x.rows(), x.cols())); };

// A smooth field whose cosine with x depends on t, so adaptive steps vary.
const VelocityField swirl = [](const Batch& x, const Vector& t) {
    Batch v(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double a = 3.0 * t(i);
        v(i, 0) = std::cos(a) * x(i, 0) - std::sin(a) * x(i, 1);
        v(i, 1) = std::sin(a) * x(i, 0) + std::cos(a) * x(i, 1);
    }
    return v;
};

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("uniform schedule") {
    CHECK(uniform_schedule(1).times() == std::vector<double>{1.0, 0.0});
    CHECK(uniform_schedule(4).times() == std::vector<double>{1.0, 0.75, 0.5, 0.25, 0.0});
    const TimeSchedule s = uniform_schedule(50);
    CHECK(s.times().size() == 51);
    CHECK(s.times().front() == 1.0);
    CHECK(s.times().back() == 0.0);
    CHECK_THROWS_AS(uniform_schedule(0), DomainError);
}

TEST_CASE("TimeSchedule validation") {
    CHECK_THROWS_AS(TimeSchedule({1.0, 0.5}), DomainError);
    CHECK_THROWS_AS(TimeSchedule({1.0, 0.6, 0.6, 0.0}), DomainError);
    CHECK_THROWS_AS(TimeSchedule({0.9, 0.0}), DomainError);
}

TEST_CASE("SNR shift") {
    CHECK(snr_shift(0.5, 4.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    for (double r : {0.25, 1.0, 3.0, 16.0}) {
        CHECK(snr_shift(0.0, r) == 0.0);
        CHECK(snr_shift(1.0, r) == 1.0);
    }
    CHECK(snr_shift_schedule(7, 1.0).times() == uniform_schedule(7).times());
    const auto s = snr_shift_schedule(50, 4.0).times();
    CHECK(s.front() == 1.0);
    CHECK(s.back() == 0.0);
    CHECK(s[25] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(snr_shift(0.5, 0.0), DomainError);
}

TEST_CASE("adaptive step anchor values") {
    AdaptiveConfig cfg;
    cfg.dt_min = 0.02;
    cfg.dt_max = 0.1;
    const AdaptiveStep mid = adaptive_step_from_cosine(0.0, cfg);
    CHECK(mid.control == 0.5);
    CHECK(mid.gate == 0.5);
    CHECK(mid.dt == doctest::Approx(0.06).epsilon(1e-15));

    const AdaptiveStep aligned = adaptive_step_from_cosine(1.0, cfg);
    CHECK(std::abs(aligned.gate - 0.0066928509242848554) < 1e-9);
    CHECK(std::abs(aligned.gate - logistic(-5.0)) < 1e-15);
    CHECK(aligned.dt == doctest::Approx(0.02 + logistic(-5.0) * 0.08).epsilon(1e-14));

    const AdaptiveStep opposed = adaptive_step_from_cosine(-1.0, cfg);
    CHECK(std::abs(opposed.gate - 0.9933071490757153) < 1e-9);
    CHECK(opposed.dt == doctest::Approx(0.1 - logistic(-5.0) * 0.08).epsilon(1e-14));

    cfg.invert_gate = true;
    CHECK(adaptive_step_from_cosine(1.0, cfg).gate == doctest::Approx(1.0 - logistic(-5.0)).epsilon(1e-15));

    const AdaptiveStep clamped = adaptive_step_from_cosine(0.0, cfg, 0.01);
    CHECK(clamped.clamped);
    CHECK(clamped.dt == 0.01);
}

TEST_CASE("adaptive config for a budget and validation") {
    const AdaptiveConfig a = AdaptiveConfig::for_budget(10);
    CHECK(a.dt_min == 0.05);
    CHECK(a.dt_max == 0.2);
    CHECK(AdaptiveConfig::for_budget(1).dt_max == 1.0);
    AdaptiveConfig bad;
    bad.dt_min = 0.5;
    bad.dt_max = 0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = AdaptiveConfig{};
    bad.gain = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("adaptive_step uses the batch-mean cosine") {
    Batch x(2, 2), v(2, 2);
    x << 1, 0, 0, 1;
    v << 1, 0, 0, -1;
    const AdaptiveStep s = adaptive_step(x, v, AdaptiveConfig{});
    CHECK(s.cosine == 0.0);
    CHECK(row_cosines(x, v)(1) == -1.0);
}

TEST_CASE("sample_ode: zero field returns the initial draws") {
    for (int steps : {1, 5}) {
        const SampleResult r = sample_ode(zero_field, 3, 10, uniform_schedule(steps), 7);
        CHECK(r.samples == initial_noise(10, 3, 7));
    }
    const SampleResult a = sample_ode(zero_field, 3, 10, AdaptiveConfig::for_budget(5), 7);
    CHECK(a.samples == initial_noise(10, 3, 7));
}

TEST_CASE("sample_ode: one uniform step is x - v(x, 1)") {
    const Batch eps = initial_noise(6, 2, 3);
    const SampleResult r = sample_ode(swirl, 2, 6, uniform_schedule(1), 3);
    const Batch expected = eps - swirl(eps, Vector::Ones(6));
    CHECK((r.samples - expected).norm() < 1e-15);
    REQUIRE(r.trajectory.steps.size() == 1);
    CHECK(r.trajectory.steps[0].t == 1.0);
    CHECK(r.trajectory.steps[0].dt == 1.0);
}

TEST_CASE("sample_ode: adaptive steps stay in bounds and sum to one exactly") {
    for (AdaptiveMode mode : {AdaptiveMode::batch_mean, AdaptiveMode::per_sample}) {
        for (bool invert : {false, true}) {
            AdaptiveConfig cfg = AdaptiveConfig::for_budget(13);
            cfg.mode = mode;
            cfg.invert_gate = invert;
            const SampleResult r = sample_ode(swirl, 2, 16, cfg, 1);
            double total = 0.0;
            int clamps = 0;
            for (std::size_t k = 0; k < r.trajectory.steps.size(); ++k) {
                const TrajectoryStep& s = r.trajectory.steps[k];
                total += s.dt;
                if (s.clamped) {
                    ++clamps;
                    CHECK(k + 1 == r.trajectory.steps.size());
                } else if (mode == AdaptiveMode::batch_mean) {
                    CHECK(s.dt >= cfg.dt_min);
                    CHECK(s.dt <= cfg.dt_max);
                }
            }
            CHECK(clamps <= 1);
            if (mode == AdaptiveMode::batch_mean) CHECK(total == 1.0);
            CHECK(r.samples.allFinite());
        }
    }
}

TEST_CASE("sample_ode: non-finite state names the step") {
    const VelocityField blowup = [](const Batch& x, const Vector& t) {
        Batch v = x;
        if (t(0) < 0.55) v.setConstant(std::numeric_limits<double>::infinity());
        return v;
    };
    try {
        (void)sample_ode(blowup, 2, 3, uniform_schedule(10), 0);
        FAIL("expected an integration error");
    } catch (const IntegrationError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("sample_sde: zero diffusion reproduces the ODE bitwise") {
    SdeOptions opts;
    opts.diffusion_scale = 0.0;
    const SampleResult ode = sample_ode(swirl, 2, 32, uniform_schedule(50), 11);
    const SampleResult sde = sample_sde(swirl, 2, 32, uniform_schedule(50), 11, opts);
    CHECK(ode.samples == sde.samples);
}

TEST_CASE("sample_sde: deterministic given the seed") {
    const SampleResult a = sample_sde(swirl, 2, 8, uniform_schedule(20), 5);
    const SampleResult b = sample_sde(swirl, 2, 8, uniform_schedule(20), 5);
    CHECK(a.samples == b.samples);
    const SampleResult c = sample_sde(swirl, 2, 8, uniform_schedule(20), 6);
    CHECK_FALSE(a.samples == c.samples);
}

TEST_CASE("sample_sde: point-mass field concentrates at the origin") {
    const VelocityField point_mass = [](const Batch& x, const Vector& t) {
        Batch v = x;
        for (Eigen::Index i = 0; i < x.rows(); ++i) v.row(i) /= std::max(t(i), 1e-3);
        return v;
    };
    const SampleResult r = sample_sde(point_mass, 2, 500, uniform_schedule(50), 2);
    const double start = initial_noise(500, 2, 2).rowwise().norm().mean();
    const double end = r.samples.rowwise().norm().mean();
    MESSAGE("mean norm at t=1 " << start << ", at t=0 " << end);
    CHECK(end < 0.1 * start);
}

TEST_CASE("sample_sde: Gaussian-data oracle recovers unit variance only with the derived sign") {
    // Exact velocity for standard Gaussian data under the linear path.
    const VelocityField gaussian_data = [](const Batch& x, const Vector& t) {
        Batch v = x;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double s = t(i);
            v.row(i) *= (2 * s - 1) / ((1 - s) * (1 - s) + s * s);
        }
        return v;
    };
    auto variance = [&](ScoreSign sign) {
        SdeOptions opts;
        opts.score_sign = sign;
        const Batch x = sample_sde(gaussian_data, 2, 4000, uniform_schedule(200), 3, opts).samples;
        return x.squaredNorm() / static_cast<double>(x.size());
    };
    const double derived = variance(ScoreSign::derived);
    const double paper = variance(ScoreSign::paper);
    MESSAGE("sample variance: derived sign " << derived << ", paper sign " << paper);
    CHECK(std::abs(derived - 1.0) < 0.05);
    CHECK(paper > 2.0);
}

TEST_CASE("cosine profile of aligned and opposed fields") {
    const VelocityField same = [](const Batch& x, const Vector&) { return x; };
    const VelocityField opposite = [](const Batch& x, const Vector&) { return Batch(-x); };
    for (const CosinePoint& p : cosine_profile(sample_ode(same, 3, 20, uniform_schedule(10), 0).trajectory)) {
        CHECK(p.mean_cos == doctest::Approx(1.0).epsilon(1e-14));
    }
    const auto prof = cosine_profile(sample_ode(opposite, 3, 20, uniform_schedule(10), 0).trajectory);
    CHECK(prof.size() == 10);
    for (const CosinePoint& p : prof) CHECK(p.mean_cos == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("trajectory CSV") {
    std::ostringstream out;
    write_trajectory_csv(out, sample_ode(swirl, 2, 4, uniform_schedule(3), 0).trajectory);
    const std::string csv = out.str();
    CHECK(csv.rfind(kTrajectoryHeader, 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
