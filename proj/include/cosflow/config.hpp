// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration. A config file is a JSON object whose keys must all
// exist in default_config(); omitted keys take their defaults. The resolved
// document (every default materialised) is what runs persist and replay.

#pragma once

#include "cosflow/datasets.hpp"
#include "cosflow/interpolant.hpp"
#include "cosflow/metrics.hpp"
#include "cosflow/sampler.hpp"
#include "cosflow/trainer.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace cosflow {

struct ModelSpec {
    std::vector<int> hidden{128, 128, 128};
    int time_features = kDefaultTimeFeatures;
    std::uint64_t seed = 0;
};

enum class SamplerKind { ode, sde };
enum class ScheduleKind { uniform, snr_shift, adaptive };

const char* to_string(SamplerKind kind) noexcept;
const char* to_string(ScheduleKind kind) noexcept;

struct SamplerConfig {
    SamplerKind kind = SamplerKind::ode;
    ScheduleKind schedule = ScheduleKind::uniform;
    int steps = 50;
    double ratio = 4.0;
    int n_samples = 2000;
    std::uint64_t seed = 0;
    SdeOptions sde;
    AdaptiveConfig adaptive;  ///< null bounds in the file resolve to for_budget(steps)
};

struct MetricsConfig {
    int n_proj = 64;
    std::uint64_t seed = 0;
    int reference_n = 2000;
    std::uint64_t reference_seed = 1000003;
    EnergyEstimator estimator = EnergyEstimator::v_statistic;
};

struct BenchConfig {
    std::vector<int> sizes{8, 16, 32, 64, 128};
    int repeats = 3;
    CostKind cost_kind = CostKind::neg_cosine;
    std::uint64_t seed = 0;
};

struct ReproConfig {
    std::vector<int> budgets{5, 10, 20, 50};
};

struct InputsConfig {
    std::string checkpoint;
    std::string samples;
    std::string reference;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    ModelSpec model;
    TrainConfig trainer;
    FinetuneConfig finetune;
    std::uint64_t finetune_seed = 1;
    SamplerConfig sampler;
    MetricsConfig metrics;
    ProbeOptions probe;
    BenchConfig bench;
    ReproConfig repro;
    InputsConfig inputs;
    std::vector<std::uint64_t> seeds{0};
    std::string output_dir;
};

/// Every recognised key with its default value.
nlohmann::json default_config();

/// Merges `user` over the defaults. Throws ConfigError on unknown keys or values
/// whose JSON type differs from the default's.
nlohmann::json resolve_config(const nlohmann::json& user);

/// Typed view of a resolved document; performs semantic validation.
ExperimentConfig parse_config(const nlohmann::json& resolved);

/// Throws ConfigError when the file is missing or is not a JSON object.
nlohmann::json load_config_file(const std::filesystem::path& path);

/// Applies "a.b.c=value"; value is parsed as JSON, falling back to a plain string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// The same document with every seed shifted into replicate `replicate`:
/// component seed -> derive_seed(derive_seed(component seed, replicate), component tag).
ExperimentConfig for_replicate(const ExperimentConfig& cfg, std::uint64_t replicate);

/// Train-time dataset and the held-out reference set used by metrics.
Batch training_data(const ExperimentConfig& cfg);
Batch reference_data(const ExperimentConfig& cfg);

/// Schedule selected by the sampler section (fixed schedules only).
TimeSchedule fixed_schedule(const SamplerConfig& cfg);

}  // namespace cosflow
