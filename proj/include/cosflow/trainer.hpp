// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Flow-matching training with pluggable minibatch coupling, fine-tuning from a
// checkpoint and a gradient-noise probe.

#pragma once

#include "cosflow/checkpoint.hpp"
#include "cosflow/coupling.hpp"
#include "cosflow/optimizer.hpp"
#include "cosflow/velocity_model.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cosflow {

enum class CouplingStrategy { independent, cosine_ot, euclidean_ot };

const char* to_string(CouplingStrategy s) noexcept;
CouplingStrategy parse_strategy(const std::string& name);

/// Reorders `noise` rows so that data row i is paired with the noise row chosen by
/// the strategy. `independent` keeps draw order.
Batch couple_noise(const Batch& data, const Batch& noise, CouplingStrategy strategy);

/// Draws one standard-normal noise row per data row and one t ~ U(0, 1) per row,
/// then re-pairs the noise by the strategy. Coupling consumes no randomness, so
/// runs that differ only in strategy see identical noise and time draws.
PathBatch make_training_batch(const Batch& data, std::mt19937_64& rng, CouplingStrategy strategy);

struct RunRecord {
    int epoch = 0;
    std::int64_t step = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double wall_time_s = 0.0;
    CouplingStrategy strategy = CouplingStrategy::independent;
    std::uint64_t seed = 0;
};

struct TrainConfig {
    int epochs = 1;
    int batch_size = 128;
    OptimConfig optim;
    CouplingStrategy strategy = CouplingStrategy::independent;
    std::uint64_t seed = 0;
    bool record_wall_time = false;  ///< when false wall_time_s is written as 0 so CSVs are reproducible

    void validate(Eigen::Index dataset_size) const;
};

struct TrainResult {
    ModelParams params;
    std::vector<RunRecord> records;
    OptimState optimizer;
};

/// Runs `epochs` passes of floor(N / batch_size) steps over a seeded shuffle of `data`.
/// When `resume` is set the optimizer continues from it, otherwise moments start at zero.
TrainResult train(const Batch& data, ModelParams params, const TrainConfig& config,
                  std::optional<OptimState> resume = std::nullopt);

struct FinetuneConfig {
    int extra_epochs = 1;
    CouplingStrategy strategy = CouplingStrategy::cosine_ot;
    bool reset_moments = true;   ///< false requires a checkpoint carrying optimizer state
    std::optional<double> lr;    ///< defaults to the training lr
};

struct FinetuneResult {
    TrainResult run;
    bool moments_reset = true;
};

/// Resumes from `checkpoint` and trains `extra_epochs` more with `finetune.strategy`.
/// Throws IoError when the checkpoint is missing or its dimension mismatches `data`.
FinetuneResult finetune(const std::filesystem::path& checkpoint, const Batch& data,
                        const FinetuneConfig& finetune, TrainConfig base);
FinetuneResult finetune(const Checkpoint& checkpoint, const Batch& data, const FinetuneConfig& finetune,
                        TrainConfig base);

struct ProbeOptions {
    int n_batches = 32;
    int batch_size = 128;
    CouplingStrategy strategy = CouplingStrategy::independent;
    std::uint64_t seed = 0;
    std::optional<double> fixed_t;       ///< use this time for every pair instead of U(0, 1)
    std::optional<Vector> fixed_noise;   ///< use this noise row for every pair instead of N(0, I)
};

struct GradientNoiseStats {
    int n_batches = 0;
    double grad_cov_trace = 0.0;  ///< sum over parameters of the unbiased across-batch variance
    double loss_variance = 0.0;
    double mean_loss = 0.0;
    double mean_grad_norm = 0.0;
};

/// Frozen-parameter probe: per-minibatch gradients over `n_batches` independent
/// batches drawn without replacement within each batch.
GradientNoiseStats gradient_noise_probe(const ModelParams& params, const Batch& data, const ProbeOptions& options);

inline constexpr const char* kRunRecordHeader = "epoch,step,loss,grad_norm,wall_time_s,strategy,seed";

void write_records_csv(std::ostream& out, std::span<const RunRecord> records);

}  // namespace cosflow
