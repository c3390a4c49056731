// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/config.hpp"

#include <fstream>

namespace cosflow {

namespace {

using nlohmann::json;

bool type_compatible(const json& def, const json& val) {
    if (def.is_null()) return val.is_null() || val.is_number();
    if (def.is_number_integer()) return val.is_number_integer();
    if (def.is_number()) return val.is_number();
    return def.type() == val.type();
}

void merge_checked(json& target, const json& user, const std::string& prefix) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!target.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
        json& slot = target[it.key()];
        if (slot.is_object()) {
            if (!it->is_object()) throw ConfigError("config key '" + key + "' must be an object");
            merge_checked(slot, *it, key);
            continue;
        }
        if (!type_compatible(slot, *it)) {
            throw ConfigError("config key '" + key + "' has the wrong type (expected " + std::string(slot.type_name()) + ")");
        }
        if (slot.is_array() && !slot.empty()) {
            for (const auto& element : *it) {
                if (!type_compatible(slot.front(), element)) {
                    throw ConfigError("config key '" + key + "' has an element of the wrong type");
                }
            }
        }
        // Keep the default's null marker only when the user also gave null.
        slot = *it;
    }
}

template <class T>
T get(const json& doc, const char* section, const char* key) {
    try {
        return doc.at(section).at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + section + "." + key + "': " + e.what());
    }
}

template <class Parse>
auto parse_enum(const json& doc, const char* section, const char* key, Parse parse) {
    return parse(get<std::string>(doc, section, key));
}

SamplerKind parse_sampler_kind(const std::string& s) {
    if (s == "ode") return SamplerKind::ode;
    if (s == "sde") return SamplerKind::sde;
    throw ConfigError("unknown sampler kind '" + s + "' (expected ode|sde)");
}

ScheduleKind parse_schedule_kind(const std::string& s) {
    if (s == "uniform") return ScheduleKind::uniform;
    if (s == "snr_shift") return ScheduleKind::snr_shift;
    if (s == "adaptive") return ScheduleKind::adaptive;
    throw ConfigError("unknown schedule '" + s + "' (expected uniform|snr_shift|adaptive)");
}

EnergyEstimator parse_estimator(const std::string& s) {
    if (s == "v_statistic") return EnergyEstimator::v_statistic;
    if (s == "u_statistic") return EnergyEstimator::u_statistic;
    throw ConfigError("unknown energy estimator '" + s + "' (expected v_statistic|u_statistic)");
}

}  // namespace

const char* to_string(SamplerKind kind) noexcept { return kind == SamplerKind::ode ? "ode" : "sde"; }

const char* to_string(ScheduleKind kind) noexcept {
    switch (kind) {
        case ScheduleKind::uniform: return "uniform";
        case ScheduleKind::snr_shift: return "snr_shift";
        case ScheduleKind::adaptive: return "adaptive";
    }
    return "?";
}

nlohmann::json default_config() {
    return json{
        {"dataset",
         {{"kind", "gauss_mixture_2d"},
          {"n", 12800},
          {"d", 2},
          {"seed", 0},
          {"modes", 8},
          {"radius", 4.0},
          {"component_std", 0.3},
          {"cells", 4},
          {"decay", 0.7},
          {"rotation_seed", 0}}},
        {"model", {{"hidden", {128, 128, 128}}, {"time_features", kDefaultTimeFeatures}, {"seed", 0}}},
        {"trainer",
         {{"epochs", 50},
          {"batch_size", 128},
          {"lr", 1e-3},
          {"beta1", 0.9},
          {"beta2", 0.95},
          {"eps", 1e-8},
          {"weight_decay", 1e-4},
          {"strategy", "independent"},
          {"seed", 0},
          {"record_wall_time", false}}},
        {"finetune",
         {{"extra_epochs", 1}, {"strategy", "cosine_ot"}, {"reset_moments", true}, {"lr", nullptr}, {"seed", 1}}},
        {"sampler",
         {{"kind", "ode"},
          {"schedule", "uniform"},
          {"steps", 50},
          {"ratio", 4.0},
          {"n_samples", 2000},
          {"seed", 0},
          {"t_eps", kDefaultTimeClip},
          {"diffusion_scale", 1.0},
          {"score_sign", "derived"},
          {"adaptive",
           {{"dt_min", nullptr}, {"dt_max", nullptr}, {"gain", 10.0}, {"invert_gate", false}, {"mode", "batch_mean"}}}}},
        {"metrics",
         {{"n_proj", 64}, {"seed", 0}, {"reference_n", 2000}, {"reference_seed", 1000003}, {"energy_estimator", "v_statistic"}}},
        {"probe", {{"n_batches", 32}, {"batch_size", 128}, {"strategy", "independent"}, {"seed", 0}}},
        {"bench", {{"sizes", {8, 16, 32, 64, 128}}, {"repeats", 3}, {"cost_kind", "neg_cosine"}, {"seed", 0}}},
        {"repro", {{"budgets", {5, 10, 20, 50}}}},
        {"inputs", {{"checkpoint", ""}, {"samples", ""}, {"reference", ""}}},
        {"seeds", {0}},
        {"output_dir", ""},
    };
}

nlohmann::json resolve_config(const nlohmann::json& user) {
    if (!user.is_object()) throw ConfigError("config root must be a JSON object");
    json resolved = default_config();
    merge_checked(resolved, user, "");
    // Materialise adaptive bounds so the persisted copy needs no further defaults.
    json& adaptive = resolved["sampler"]["adaptive"];
    const int steps = resolved["sampler"]["steps"].get<int>();
    if (steps >= 1) {
        const AdaptiveConfig budget = AdaptiveConfig::for_budget(steps);
        if (adaptive["dt_min"].is_null()) adaptive["dt_min"] = budget.dt_min;
        if (adaptive["dt_max"].is_null()) adaptive["dt_max"] = budget.dt_max;
    }
    if (resolved["finetune"]["lr"].is_null()) resolved["finetune"]["lr"] = resolved["trainer"]["lr"];
    parse_config(resolved);
    return resolved;
}

ExperimentConfig parse_config(const nlohmann::json& doc) {
    ExperimentConfig c;

    c.dataset.kind = parse_enum(doc, "dataset", "kind", parse_dataset_kind);
    c.dataset.n = get<int>(doc, "dataset", "n");
    c.dataset.d = get<int>(doc, "dataset", "d");
    c.dataset.seed = get<std::uint64_t>(doc, "dataset", "seed");
    c.dataset.modes = get<int>(doc, "dataset", "modes");
    c.dataset.radius = get<double>(doc, "dataset", "radius");
    c.dataset.component_std = get<double>(doc, "dataset", "component_std");
    c.dataset.cells = get<int>(doc, "dataset", "cells");
    c.dataset.decay = get<double>(doc, "dataset", "decay");
    c.dataset.rotation_seed = get<std::uint64_t>(doc, "dataset", "rotation_seed");
    c.dataset.validate();

    c.model.hidden = get<std::vector<int>>(doc, "model", "hidden");
    c.model.time_features = get<int>(doc, "model", "time_features");
    c.model.seed = get<std::uint64_t>(doc, "model", "seed");
    if (c.model.hidden.empty()) throw ConfigError("model.hidden must not be empty");
    for (int w : c.model.hidden) {
        if (w < 1) throw ConfigError("model.hidden widths must be positive");
    }
    if (c.model.time_features < 0) throw ConfigError("model.time_features must be >= 0");

    c.trainer.epochs = get<int>(doc, "trainer", "epochs");
    c.trainer.batch_size = get<int>(doc, "trainer", "batch_size");
    c.trainer.optim = OptimConfig{get<double>(doc, "trainer", "lr"), get<double>(doc, "trainer", "beta1"),
                                  get<double>(doc, "trainer", "beta2"), get<double>(doc, "trainer", "eps"),
                                  get<double>(doc, "trainer", "weight_decay")};
    c.trainer.strategy = parse_enum(doc, "trainer", "strategy", parse_strategy);
    c.trainer.seed = get<std::uint64_t>(doc, "trainer", "seed");
    c.trainer.record_wall_time = get<bool>(doc, "trainer", "record_wall_time");
    c.trainer.validate(c.dataset.n);

    c.finetune.extra_epochs = get<int>(doc, "finetune", "extra_epochs");
    c.finetune.strategy = parse_enum(doc, "finetune", "strategy", parse_strategy);
    c.finetune.reset_moments = get<bool>(doc, "finetune", "reset_moments");
    if (!doc.at("finetune").at("lr").is_null()) c.finetune.lr = get<double>(doc, "finetune", "lr");
    c.finetune_seed = get<std::uint64_t>(doc, "finetune", "seed");
    if (c.finetune.extra_epochs < 0) throw ConfigError("finetune.extra_epochs must be >= 0");
    if (c.finetune.lr && !(*c.finetune.lr > 0.0)) throw ConfigError("finetune.lr must be > 0");

    c.sampler.kind = parse_enum(doc, "sampler", "kind", parse_sampler_kind);
    c.sampler.schedule = parse_enum(doc, "sampler", "schedule", parse_schedule_kind);
    c.sampler.steps = get<int>(doc, "sampler", "steps");
    c.sampler.ratio = get<double>(doc, "sampler", "ratio");
    c.sampler.n_samples = get<int>(doc, "sampler", "n_samples");
    c.sampler.seed = get<std::uint64_t>(doc, "sampler", "seed");
    c.sampler.sde.t_eps = get<double>(doc, "sampler", "t_eps");
    c.sampler.sde.diffusion_scale = get<double>(doc, "sampler", "diffusion_scale");
    c.sampler.sde.score_sign = parse_enum(doc, "sampler", "score_sign", parse_score_sign);
    if (c.sampler.steps < 1) throw ConfigError("sampler.steps must be >= 1");
    if (!(c.sampler.ratio > 0.0)) throw ConfigError("sampler.ratio must be > 0");
    if (c.sampler.n_samples < 1) throw ConfigError("sampler.n_samples must be >= 1");
    if (!(c.sampler.sde.t_eps > 0.0 && c.sampler.sde.t_eps < 1.0)) throw ConfigError("sampler.t_eps must be in (0, 1)");
    if (!(c.sampler.sde.diffusion_scale >= 0.0)) throw ConfigError("sampler.diffusion_scale must be >= 0");
    if (c.sampler.kind == SamplerKind::sde && c.sampler.schedule == ScheduleKind::adaptive) {
        throw ConfigError("adaptive schedules are defined for the ODE sampler only");
    }
    {
        const json& a = doc.at("sampler").at("adaptive");
        AdaptiveConfig adaptive = AdaptiveConfig::for_budget(c.sampler.steps);
        if (!a.at("dt_min").is_null()) adaptive.dt_min = a.at("dt_min").get<double>();
        if (!a.at("dt_max").is_null()) adaptive.dt_max = a.at("dt_max").get<double>();
        adaptive.gain = a.at("gain").get<double>();
        adaptive.invert_gate = a.at("invert_gate").get<bool>();
        adaptive.mode = parse_adaptive_mode(a.at("mode").get<std::string>());
        adaptive.validate();
        c.sampler.adaptive = adaptive;
    }

    c.metrics.n_proj = get<int>(doc, "metrics", "n_proj");
    c.metrics.seed = get<std::uint64_t>(doc, "metrics", "seed");
    c.metrics.reference_n = get<int>(doc, "metrics", "reference_n");
    c.metrics.reference_seed = get<std::uint64_t>(doc, "metrics", "reference_seed");
    c.metrics.estimator = parse_enum(doc, "metrics", "energy_estimator", parse_estimator);
    if (c.metrics.n_proj < 1) throw ConfigError("metrics.n_proj must be >= 1");
    if (c.metrics.reference_n < 1) throw ConfigError("metrics.reference_n must be >= 1");

    c.probe.n_batches = get<int>(doc, "probe", "n_batches");
    c.probe.batch_size = get<int>(doc, "probe", "batch_size");
    c.probe.strategy = parse_enum(doc, "probe", "strategy", parse_strategy);
    c.probe.seed = get<std::uint64_t>(doc, "probe", "seed");
    if (c.probe.n_batches < 2) throw ConfigError("probe.n_batches must be >= 2");
    if (c.probe.batch_size < 1 || c.probe.batch_size > c.dataset.n) {
        throw ConfigError("probe.batch_size must be in [1, dataset.n]");
    }

    c.bench.sizes = get<std::vector<int>>(doc, "bench", "sizes");
    c.bench.repeats = get<int>(doc, "bench", "repeats");
    c.bench.cost_kind = parse_enum(doc, "bench", "cost_kind", parse_cost_kind);
    c.bench.seed = get<std::uint64_t>(doc, "bench", "seed");
    for (int n : c.bench.sizes) {
        if (n < 1) throw ConfigError("bench.sizes must be positive");
    }
    if (c.bench.repeats < 1) throw ConfigError("bench.repeats must be >= 1");

    c.repro.budgets = get<std::vector<int>>(doc, "repro", "budgets");
    for (int b : c.repro.budgets) {
        if (b < 1) throw ConfigError("repro.budgets must be positive");
    }

    c.inputs.checkpoint = get<std::string>(doc, "inputs", "checkpoint");
    c.inputs.samples = get<std::string>(doc, "inputs", "samples");
    c.inputs.reference = get<std::string>(doc, "inputs", "reference");

    try {
        c.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
        c.output_dir = doc.at("output_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
    return c;
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        json doc = json::parse(in);
        if (!doc.is_object()) throw ConfigError("config file " + path.string() + " must hold a JSON object");
        return doc;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like key.path=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
        if (dot == std::string::npos) {
            (*node)[key] = std::move(value);
            return;
        }
        node = &(*node)[key];
        if (!node->is_null() && !node->is_object()) {
            throw ConfigError("override '" + assignment + "' descends into a non-object");
        }
        start = dot + 1;
    }
}

ExperimentConfig for_replicate(const ExperimentConfig& cfg, std::uint64_t replicate) {
    // Each component gets its own stream tag so equal base seeds do not share draws.
    auto seed = [replicate](std::uint64_t base, std::uint64_t tag) { return derive_seed(derive_seed(base, replicate), tag); };
    ExperimentConfig out = cfg;
    out.dataset.seed = seed(cfg.dataset.seed, 1);
    out.model.seed = seed(cfg.model.seed, 2);
    out.trainer.seed = seed(cfg.trainer.seed, 3);
    out.finetune_seed = seed(cfg.finetune_seed, 4);
    out.sampler.seed = seed(cfg.sampler.seed, 5);
    out.metrics.seed = seed(cfg.metrics.seed, 6);
    out.metrics.reference_seed = seed(cfg.metrics.reference_seed, 7);
    out.probe.seed = seed(cfg.probe.seed, 8);
    out.seeds = {replicate};
    return out;
}

Batch training_data(const ExperimentConfig& cfg) { return generate(cfg.dataset); }

Batch reference_data(const ExperimentConfig& cfg) {
    DatasetSpec spec = cfg.dataset;
    spec.n = cfg.metrics.reference_n;
    spec.seed = cfg.metrics.reference_seed;
    return generate(spec);
}

TimeSchedule fixed_schedule(const SamplerConfig& cfg) {
    switch (cfg.schedule) {
        case ScheduleKind::uniform: return uniform_schedule(cfg.steps);
        case ScheduleKind::snr_shift: return snr_shift_schedule(cfg.steps, cfg.ratio);
        case ScheduleKind::adaptive: break;
    }
    throw ConfigError("adaptive schedule has no fixed time grid");
}

}  // namespace cosflow
