// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/sampler.hpp"

#include "cosflow/coupling.hpp"
#include "cosflow/io.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cosflow {

namespace {

// Adaptive clocks live on a dyadic grid so that step lengths and their sum are exact.
constexpr int kClockBits = 40;
constexpr std::int64_t kClockOne = std::int64_t{1} << kClockBits;

double clock_to_time(std::int64_t q) { return std::ldexp(static_cast<double>(q), -kClockBits); }

// Nearest grid step inside [dt_min, dt_max]; if the interval holds no grid point the
// smallest grid value >= dt_min is used.
std::int64_t quantize_step(double dt, const AdaptiveConfig& cfg) {
    const auto lo = static_cast<std::int64_t>(std::ceil(std::ldexp(cfg.dt_min, kClockBits)));
    const auto hi = static_cast<std::int64_t>(std::floor(std::ldexp(cfg.dt_max, kClockBits)));
    const auto q = static_cast<std::int64_t>(std::llround(std::ldexp(dt, kClockBits)));
    if (lo > hi) return lo;
    return std::clamp(q, lo, hi);
}

Batch initial_noise(int dim, int n, std::mt19937_64& rng) {
    if (n < 1) throw DomainError("sampler: sample count must be >= 1");
    if (dim < 1) throw DomainError("sampler: dimension must be >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    Batch x(n, dim);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dim; ++j) x(i, j) = normal(rng);
    }
    return x;
}

void require_finite(const Batch& m, std::size_t step, const char* what) {
    if (!m.allFinite()) {
        throw IntegrationError(std::string("non-finite ") + what + " at integration step " + std::to_string(step));
    }
}

Batch evaluate(const VelocityField& field, const Batch& x, const Vector& t, std::size_t step) {
    Batch v = field(x, t);
    if (v.rows() != x.rows() || v.cols() != x.cols()) {
        throw ShapeError("velocity field returned wrong shape at step " + std::to_string(step));
    }
    require_finite(v, step, "velocity");
    return v;
}

TrajectoryStep make_step(double t, double dt, const Batch& x, const Batch& v, bool record) {
    TrajectoryStep s{t, dt, {}, {}, row_cosines(x, v), false};
    if (record) {
        s.states = x;
        s.velocities = v;
    }
    return s;
}

SampleResult integrate_adaptive_batch(const VelocityField& field, Batch x, const AdaptiveConfig& cfg,
                                      const SamplerOptions& options) {
    SampleResult out;
    out.trajectory.schedule = "adaptive";
    std::int64_t clock = kClockOne;
    std::size_t step = 0;
    while (clock > 0) {
        const double t = clock_to_time(clock);
        const Batch v = evaluate(field, x, Vector::Constant(x.rows(), t), step);
        TrajectoryStep rec = make_step(t, 0.0, x, v, options.record_states);
        const AdaptiveStep raw = adaptive_step_from_cosine(rec.cosines.mean(), cfg);
        std::int64_t dq = quantize_step(raw.dt, cfg);
        if (dq >= clock) {
            dq = clock;
            rec.clamped = true;
            ++out.trajectory.clamp_count;
        }
        const std::int64_t next = clock - dq;
        rec.dt = clock_to_time(dq);
        x += v * (clock_to_time(next) - t);
        require_finite(x, step, "state");
        out.trajectory.steps.push_back(std::move(rec));
        clock = next;
        ++step;
    }
    out.samples = std::move(x);
    return out;
}

SampleResult integrate_adaptive_per_sample(const VelocityField& field, Batch x, const AdaptiveConfig& cfg,
                                           const SamplerOptions& options) {
    SampleResult out;
    out.trajectory.schedule = "adaptive";
    const Eigen::Index n = x.rows();
    std::vector<std::int64_t> clocks(static_cast<std::size_t>(n), kClockOne);
    std::size_t step = 0;
    for (;;) {
        std::vector<Eigen::Index> active;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (clocks[static_cast<std::size_t>(i)] > 0) active.push_back(i);
        }
        if (active.empty()) break;
        const auto m = static_cast<Eigen::Index>(active.size());
        Batch xa(m, x.cols());
        Vector ta(m);
        for (Eigen::Index k = 0; k < m; ++k) {
            xa.row(k) = x.row(active[k]);
            ta(k) = clock_to_time(clocks[static_cast<std::size_t>(active[k])]);
        }
        const Batch v = evaluate(field, xa, ta, step);
        TrajectoryStep rec = make_step(ta.mean(), 0.0, xa, v, options.record_states);
        double dt_sum = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) {
            auto& clock = clocks[static_cast<std::size_t>(active[k])];
            std::int64_t dq = quantize_step(adaptive_step_from_cosine(rec.cosines(k), cfg).dt, cfg);
            if (dq >= clock) {
                dq = clock;
                rec.clamped = true;
                ++out.trajectory.clamp_count;
            }
            const double t = ta(k);
            const std::int64_t next = clock - dq;
            x.row(active[k]) += v.row(k) * (clock_to_time(next) - t);
            dt_sum += clock_to_time(dq);
            clock = next;
        }
        require_finite(x, step, "state");
        rec.dt = dt_sum / static_cast<double>(m);
        out.trajectory.steps.push_back(std::move(rec));
        ++step;
    }
    out.samples = std::move(x);
    return out;
}

}  // namespace

TimeSchedule::TimeSchedule(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2) throw DomainError("time schedule needs at least two points");
    if (times_.front() != 1.0 || times_.back() != 0.0) {
        throw DomainError("time schedule must start at exactly 1 and end at exactly 0");
    }
    for (std::size_t k = 1; k < times_.size(); ++k) {
        if (!(times_[k] < times_[k - 1])) throw DomainError("time schedule must be strictly decreasing");
    }
}

TimeSchedule uniform_schedule(int steps) {
    if (steps < 1) throw DomainError("uniform_schedule: steps must be >= 1");
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(steps) + 1);
    for (int k = steps; k >= 0; --k) times.push_back(static_cast<double>(k) / steps);
    return TimeSchedule(std::move(times));
}

double snr_shift(double t, double ratio) {
    if (!(ratio > 0.0)) throw DomainError("snr_shift: ratio must be > 0");
    if (t == 0.0 || t == 1.0) return t;
    const double r = std::sqrt(ratio);
    return r * t / (1.0 + (r - 1.0) * t);
}

TimeSchedule snr_shift_schedule(int steps, double ratio) {
    if (!(ratio > 0.0)) throw DomainError("snr_shift_schedule: ratio must be > 0");
    std::vector<double> times = uniform_schedule(steps).times();
    for (double& t : times) t = snr_shift(t, ratio);
    return TimeSchedule(std::move(times));
}

const char* to_string(AdaptiveMode mode) noexcept {
    return mode == AdaptiveMode::batch_mean ? "batch_mean" : "per_sample";
}

AdaptiveMode parse_adaptive_mode(const std::string& name) {
    if (name == "batch_mean") return AdaptiveMode::batch_mean;
    if (name == "per_sample") return AdaptiveMode::per_sample;
    throw ConfigError("unknown adaptive mode '" + name + "' (expected batch_mean|per_sample)");
}

AdaptiveConfig AdaptiveConfig::for_budget(int steps) {
    if (steps < 1) throw ConfigError("adaptive budget must be >= 1 step");
    AdaptiveConfig cfg;
    cfg.dt_min = 1.0 / (2.0 * steps);
    cfg.dt_max = std::min(1.0, 2.0 / steps);
    return cfg;
}

void AdaptiveConfig::validate() const {
    if (!(dt_min > 0.0 && dt_min <= dt_max && dt_max <= 1.0)) {
        throw ConfigError("adaptive: require 0 < dt_min <= dt_max <= 1");
    }
    if (!(gain > 0.0)) throw ConfigError("adaptive: gain must be > 0");
}

AdaptiveStep adaptive_step_from_cosine(double cosine, const AdaptiveConfig& cfg, double remaining) {
    cfg.validate();
    const double c = std::clamp(cosine, -1.0, 1.0);
    const double control = 0.5 * (1.0 - c);
    double gate = 1.0 / (1.0 + std::exp(-cfg.gain * (control - 0.5)));
    if (cfg.invert_gate) gate = 1.0 - gate;
    AdaptiveStep step{c, control, gate, cfg.dt_min + (cfg.dt_max - cfg.dt_min) * gate, false};
    if (step.dt >= remaining) {
        step.dt = remaining;
        step.clamped = true;
    }
    return step;
}

AdaptiveStep adaptive_step(const Batch& x, const Batch& v, const AdaptiveConfig& cfg, double remaining) {
    if (x.rows() == 0) throw DomainError("adaptive_step: empty batch");
    return adaptive_step_from_cosine(row_cosines(x, v).mean(), cfg, remaining);
}

Vector row_cosines(const Batch& x, const Batch& v) {
    if (x.rows() != v.rows() || x.cols() != v.cols()) throw ShapeError("row_cosines: shape mismatch");
    Vector c(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) c(i) = cosine_similarity(x.row(i), v.row(i));
    return c;
}

VelocityField model_field(const ModelParams& params) {
    return [&params](const Batch& x, const Vector& t) { return forward(params, x, t); };
}

SampleResult sample_ode(const VelocityField& field, int dim, int n, const TimeSchedule& schedule,
                        std::uint64_t seed, const SamplerOptions& options) {
    std::mt19937_64 rng(seed);
    Batch x = initial_noise(dim, n, rng);
    SampleResult out;
    out.trajectory.schedule = "explicit";
    const auto& times = schedule.times();
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double t = times[k];
        const double h = times[k + 1] - t;
        const Batch v = evaluate(field, x, Vector::Constant(n, t), k);
        out.trajectory.steps.push_back(make_step(t, -h, x, v, options.record_states));
        x += v * h;
        require_finite(x, k, "state");
    }
    out.samples = std::move(x);
    return out;
}

SampleResult sample_ode(const VelocityField& field, int dim, int n, const AdaptiveConfig& adaptive,
                        std::uint64_t seed, const SamplerOptions& options) {
    adaptive.validate();
    std::mt19937_64 rng(seed);
    Batch x = initial_noise(dim, n, rng);
    return adaptive.mode == AdaptiveMode::batch_mean ? integrate_adaptive_batch(field, std::move(x), adaptive, options)
                                                     : integrate_adaptive_per_sample(field, std::move(x), adaptive, options);
}

SampleResult sample_sde(const VelocityField& field, int dim, int n, const TimeSchedule& schedule,
                        std::uint64_t seed, const SdeOptions& options) {
    if (!(options.diffusion_scale >= 0.0)) throw ConfigError("sample_sde: diffusion_scale must be >= 0");
    if (!(options.t_eps > 0.0 && options.t_eps < 1.0)) throw ConfigError("sample_sde: t_eps must be in (0, 1)");
    std::mt19937_64 rng(seed);
    Batch x = initial_noise(dim, n, rng);
    SampleResult out;
    out.trajectory.schedule = "explicit";

    const bool stochastic = options.diffusion_scale > 0.0;
    std::vector<double> times;
    if (stochastic) {
        for (double t : schedule.times()) {
            if (t > options.t_eps) times.push_back(t);
        }
        times.push_back(options.t_eps);
        times.push_back(0.0);
    } else {
        times = schedule.times();
    }

    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double t = times[k];
        const double h = times[k + 1] - t;
        const Batch v = evaluate(field, x, Vector::Constant(n, t), k);
        out.trajectory.steps.push_back(make_step(t, -h, x, v, options.record_states));
        const bool last = times[k + 1] == 0.0;
        if (!stochastic || last) {
            x += v * h;
        } else {
            const Batch s = score_from_velocity(x, v, t, options.t_eps, options.score_sign);
            const double w = options.diffusion_scale * schedule_at(t).sigma;
            const Batch drift = v - 0.5 * w * s;
            const double scale = std::sqrt(w * std::abs(h));
            Batch xi(x.rows(), x.cols());
            for (Eigen::Index i = 0; i < xi.rows(); ++i) {
                for (Eigen::Index j = 0; j < xi.cols(); ++j) xi(i, j) = normal(rng);
            }
            x += drift * h + scale * xi;
        }
        require_finite(x, k, "state");
    }
    out.samples = std::move(x);
    return out;
}

std::vector<CosinePoint> cosine_profile(const Trajectory& trajectory) {
    std::vector<CosinePoint> profile;
    profile.reserve(trajectory.steps.size());
    for (const TrajectoryStep& s : trajectory.steps) {
        const double mean = s.cosines.size() ? s.cosines.mean() : 0.0;
        const double var = s.cosines.size() ? (s.cosines.array() - mean).square().mean() : 0.0;
        profile.push_back({s.t, mean, std::sqrt(var)});
    }
    return profile;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
    out << kTrajectoryHeader << '\n';
    const auto profile = cosine_profile(trajectory);
    for (std::size_t k = 0; k < profile.size(); ++k) {
        out << k << ',' << format_double(profile[k].t) << ',' << format_double(trajectory.steps[k].dt) << ','
            << format_double(profile[k].mean_cos) << ',' << format_double(profile[k].std_cos) << '\n';
    }
}

}  // namespace cosflow
