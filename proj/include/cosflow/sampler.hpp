// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-time integrators from t = 1 (noise) to t = 0 (data): Euler on the
// probability-flow ODE and Euler-Maruyama on the reverse SDE, driven by a fixed
// schedule (uniform, SNR-shifted) or by the cosine-adaptive step rule.

#pragma once

#include "cosflow/interpolant.hpp"
#include "cosflow/velocity_model.hpp"

#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace cosflow {

/// Strictly decreasing times with exact endpoints 1 and 0.
class TimeSchedule {
public:
    /// Throws DomainError unless `times` is strictly decreasing from exactly 1 to exactly 0.
    explicit TimeSchedule(std::vector<double> times);

    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
    [[nodiscard]] std::size_t steps() const noexcept { return times_.size() - 1; }

private:
    std::vector<double> times_;
};

/// k / steps for k = steps, ..., 0. Throws DomainError when steps < 1.
TimeSchedule uniform_schedule(int steps);

/// sqrt(r) t / (1 + (sqrt(r) - 1) t); 0 and 1 are fixed points for every r > 0.
double snr_shift(double t, double ratio);

/// snr_shift applied to every point of uniform_schedule(steps).
TimeSchedule snr_shift_schedule(int steps, double ratio);

enum class AdaptiveMode { batch_mean, per_sample };

const char* to_string(AdaptiveMode mode) noexcept;
AdaptiveMode parse_adaptive_mode(const std::string& name);

struct AdaptiveConfig {
    double dt_min = 0.01;
    double dt_max = 0.04;
    double gain = 10.0;
    bool invert_gate = false;
    AdaptiveMode mode = AdaptiveMode::batch_mean;

    /// dt_min = 1 / (2N), dt_max = 2 / N for a nominal budget of N steps.
    static AdaptiveConfig for_budget(int steps);
    void validate() const;
};

/// Intermediate values of the cosine-adaptive rule for one control cosine.
struct AdaptiveStep {
    double cosine;
    double control;  ///< (1 - cos) / 2, in [0, 1]
    double gate;     ///< logistic(gain (control - 1/2)), optionally inverted, in (0, 1)
    double dt;       ///< dt_min + (dt_max - dt_min) gate, possibly clamped to the remaining time
    bool clamped;
};

AdaptiveStep adaptive_step_from_cosine(double cosine, const AdaptiveConfig& cfg,
                                       double remaining = std::numeric_limits<double>::infinity());

/// batch_mean control: the mean of per-row cos(x_i, v_i).
AdaptiveStep adaptive_step(const Batch& x, const Batch& v, const AdaptiveConfig& cfg,
                           double remaining = std::numeric_limits<double>::infinity());

/// Per-row cosine similarity between matching rows.
Vector row_cosines(const Batch& x, const Batch& v);

/// v(x, t) with one time per row.
using VelocityField = std::function<Batch(const Batch& x, const Vector& t)>;

/// Wraps a trained model; `params` must outlive the returned field.
VelocityField model_field(const ModelParams& params);

struct TrajectoryStep {
    double t;        ///< time at the start of the step (mean clock in per_sample mode)
    double dt;       ///< positive step length (mean over active rows in per_sample mode)
    Batch states;    ///< empty unless states are recorded
    Batch velocities;
    Vector cosines;  ///< cos(x_i, v_i) for the rows integrated in this step
    bool clamped = false;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    std::string schedule;       ///< uniform | snr_shift | adaptive | explicit
    int clamp_count = 0;        ///< number of final-step clamps (per row in per_sample mode)
};

struct SampleResult {
    Batch samples;
    Trajectory trajectory;
};

struct SamplerOptions {
    bool record_states = false;
};

/// Euler on dx/dt = v(x, t) from x_1 ~ N(0, I). Deterministic in `seed`.
/// Throws IntegrationError naming the step when the state becomes non-finite.
SampleResult sample_ode(const VelocityField& field, int dim, int n, const TimeSchedule& schedule,
                        std::uint64_t seed, const SamplerOptions& options = {});

/// Euler with cosine-adaptive step sizes; the last step is clamped to land on t = 0.
SampleResult sample_ode(const VelocityField& field, int dim, int n, const AdaptiveConfig& adaptive,
                        std::uint64_t seed, const SamplerOptions& options = {});

struct SdeOptions {
    double t_eps = kDefaultTimeClip;
    double diffusion_scale = 1.0;  ///< w_t = diffusion_scale * sigma_t; 0 reduces to the ODE
    ScoreSign score_sign = ScoreSign::derived;
    bool record_states = false;
};

/// Euler-Maruyama on dx = (v - w s / 2) dt + sqrt(w) dW in reverse time.
/// Grid points below t_eps are replaced by t_eps and one deterministic Euler step
/// finishes at t = 0. With diffusion_scale = 0 the score is never evaluated and
/// no clipping happens, so the result equals sample_ode bit for bit.
SampleResult sample_sde(const VelocityField& field, int dim, int n, const TimeSchedule& schedule,
                        std::uint64_t seed, const SdeOptions& options = {});

struct CosinePoint {
    double t;
    double mean_cos;
    double std_cos;
};

std::vector<CosinePoint> cosine_profile(const Trajectory& trajectory);

inline constexpr const char* kTrajectoryHeader = "step,t,dt,mean_cos,std_cos";

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace cosflow
