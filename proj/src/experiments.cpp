// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/experiments.hpp"

#include "cosflow/checkpoint.hpp"

#include <cmath>

namespace cosflow {

namespace {

double nearest_profile_cos(const std::vector<CosinePoint>& profile, double t) {
    const CosinePoint* best = &profile.front();
    for (const CosinePoint& p : profile) {
        if (std::abs(p.t - t) < std::abs(best->t - t)) best = &p;
    }
    return best->mean_cos;
}

}  // namespace

nlohmann::json mixture_benchmark() { return resolve_config(nlohmann::json::object()); }

nlohmann::json aniso_benchmark() { return resolve_config(aniso_patch()); }

nlohmann::json aniso_patch() {
    return nlohmann::json({
        {"dataset", {{"kind", "aniso_gauss_hd"}, {"d", 16}, {"n", 25600}, {"decay", 0.7}}},
        {"trainer", {{"epochs", 2}}},
        {"finetune", {{"extra_epochs", 1}}},
        {"sampler", {{"kind", "ode"}, {"schedule", "uniform"}, {"steps", 50}}},
    });
}

TrainedModel train_model(const ExperimentConfig& cfg, const Batch& data) {
    ModelParams init = init_params(cfg.model.seed, cfg.model.hidden, cfg.dataset.d, cfg.model.time_features);
    TrainResult r = train(data, std::move(init), cfg.trainer);
    return {std::move(r.params), std::move(r.records), std::move(r.optimizer)};
}

SampleResult draw_samples(const ModelParams& params, const SamplerConfig& sampler, int n, bool record_states) {
    const VelocityField field = model_field(params);
    if (sampler.kind == SamplerKind::sde) {
        SdeOptions opts = sampler.sde;
        opts.record_states = record_states;
        return sample_sde(field, params.dim, n, fixed_schedule(sampler), sampler.seed, opts);
    }
    SamplerOptions opts{record_states};
    if (sampler.schedule == ScheduleKind::adaptive) {
        return sample_ode(field, params.dim, n, sampler.adaptive, sampler.seed, opts);
    }
    return sample_ode(field, params.dim, n, fixed_schedule(sampler), sampler.seed, opts);
}

CosineTrend cosine_trend(const ModelParams& params, int n, std::uint64_t seed) {
    const SampleResult r = sample_ode(model_field(params), params.dim, n, uniform_schedule(50), seed);
    CosineTrend out;
    out.profile = cosine_profile(r.trajectory);
    out.late_cos = nearest_profile_cos(out.profile, 0.9);
    out.early_cos = nearest_profile_cos(out.profile, 0.1);
    return out;
}

BudgetComparison compare_schedules(const ModelParams& params, const ExperimentConfig& cfg, int budget,
                                   const Batch& reference) {
    const VelocityField field = model_field(params);
    const int n = static_cast<int>(reference.rows());
    const std::uint64_t seed = cfg.sampler.seed;
    auto metric = [&](const Batch& samples) { return sliced_w2(samples, reference, cfg.metrics.n_proj, cfg.metrics.seed); };

    BudgetComparison out;
    out.budget = budget;
    out.uniform = metric(sample_ode(field, params.dim, n, uniform_schedule(budget), seed).samples);
    out.snr_shift = metric(sample_ode(field, params.dim, n, snr_shift_schedule(budget, cfg.sampler.ratio), seed).samples);

    AdaptiveConfig adaptive = AdaptiveConfig::for_budget(budget);
    adaptive.gain = cfg.sampler.adaptive.gain;
    adaptive.mode = cfg.sampler.adaptive.mode;
    adaptive.invert_gate = false;
    const SampleResult verbatim = sample_ode(field, params.dim, n, adaptive, seed);
    adaptive.invert_gate = true;
    const SampleResult inverted = sample_ode(field, params.dim, n, adaptive, seed);
    out.adaptive = metric(verbatim.samples);
    out.adaptive_inverted = metric(inverted.samples);
    out.adaptive_steps = verbatim.trajectory.steps.size();
    out.inverted_steps = inverted.trajectory.steps.size();
    return out;
}

FinetuneGain finetune_gain(const ExperimentConfig& cfg, const std::filesystem::path& workdir) {
    const Batch data = training_data(cfg);
    const Batch reference = reference_data(cfg);

    ExperimentConfig base_cfg = cfg;
    base_cfg.trainer.strategy = CouplingStrategy::independent;
    TrainedModel base = train_model(base_cfg, data);

    const std::filesystem::path ckpt_path = workdir / "base.ckpt";
    save_checkpoint(Checkpoint{base.params, base.optimizer,
                               nlohmann::json::array({{{"stage", "train"},
                                                       {"strategy", "independent"},
                                                       {"seed", base_cfg.trainer.seed},
                                                       {"epochs", base_cfg.trainer.epochs}}})},
                    ckpt_path);

    TrainConfig ft_train = cfg.trainer;
    ft_train.seed = cfg.finetune_seed;
    FinetuneConfig ft = cfg.finetune;

    ft.strategy = CouplingStrategy::cosine_ot;
    const FinetuneResult cosine = finetune(ckpt_path, data, ft, ft_train);
    ft.strategy = CouplingStrategy::independent;
    const FinetuneResult independent = finetune(ckpt_path, data, ft, ft_train);

    const int n = static_cast<int>(reference.rows());
    auto energy = [&](const ModelParams& p) {
        return energy_distance(draw_samples(p, cfg.sampler, n).samples, reference, cfg.metrics.estimator);
    };

    FinetuneGain out;
    out.base = base.params;
    out.cosine = cosine.run.params;
    out.independent = independent.run.params;
    out.energy_base = energy(base.params);
    out.energy_cosine = energy(cosine.run.params);
    out.energy_independent = energy(independent.run.params);

    ProbeOptions probe = cfg.probe;
    probe.strategy = CouplingStrategy::cosine_ot;
    out.noise_cosine = gradient_noise_probe(base.params, data, probe);
    probe.strategy = CouplingStrategy::independent;
    out.noise_independent = gradient_noise_probe(base.params, data, probe);
    return out;
}

}  // namespace cosflow
