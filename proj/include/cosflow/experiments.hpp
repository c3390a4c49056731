// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Benchmark recipes shared by the `repro` subcommands and the acceptance suite.

#pragma once

#include "cosflow/config.hpp"

#include <filesystem>
#include <functional>
#include <future>
#include <thread>
#include <vector>

namespace cosflow {

/// 2-D eight-mode mixture, 50 epochs x 100 steps = 5000 training steps.
nlohmann::json mixture_benchmark();

/// 16-D anisotropic Gaussian; 2 base epochs, then one fine-tuning epoch, scored with the
/// 50-step probability-flow ODE. The SDE's velocity-derived score assumes independent
/// pairing, so it is biased for models trained under an OT coupling.
nlohmann::json aniso_benchmark();
/// The unresolved settings that distinguish the anisotropic benchmark from the defaults.
nlohmann::json aniso_patch();

struct TrainedModel {
    ModelParams params;
    std::vector<RunRecord> records;
    OptimState optimizer;
};

TrainedModel train_model(const ExperimentConfig& cfg, const Batch& data);

/// Samples from `params` with the sampler section of the config.
SampleResult draw_samples(const ModelParams& params, const SamplerConfig& sampler, int n, bool record_states = false);

struct CosineTrend {
    std::vector<CosinePoint> profile;
    double late_cos;   ///< mean cosine at the grid point nearest t = 0.9
    double early_cos;  ///< mean cosine at the grid point nearest t = 0.1
};

/// 50-step uniform Euler trajectory from the model; batch-mean cos(x, v) per step.
CosineTrend cosine_trend(const ModelParams& params, int n, std::uint64_t seed);

struct BudgetComparison {
    int budget = 0;
    double uniform = 0.0;
    double snr_shift = 0.0;
    double adaptive = 0.0;           ///< gate as written
    double adaptive_inverted = 0.0;  ///< gate inverted
    std::size_t adaptive_steps = 0;
    std::size_t inverted_steps = 0;

    [[nodiscard]] double best_adaptive() const { return std::min(adaptive, adaptive_inverted); }
    [[nodiscard]] const char* winning_gate() const { return adaptive <= adaptive_inverted ? "verbatim" : "inverted"; }
};

/// Sliced W2 to `reference` of ODE samples under every schedule at a matched budget.
/// All schedules start from the same initial noise.
BudgetComparison compare_schedules(const ModelParams& params, const ExperimentConfig& cfg, int budget,
                                   const Batch& reference);

struct FinetuneGain {
    double energy_base = 0.0;         ///< checkpoint before fine-tuning
    double energy_cosine = 0.0;       ///< +extra epochs with cosine_ot
    double energy_independent = 0.0;  ///< +extra epochs with independent coupling
    GradientNoiseStats noise_cosine;
    GradientNoiseStats noise_independent;
    ModelParams base;
    ModelParams cosine;
    ModelParams independent;
};

/// Trains `trainer.epochs` with independent coupling, checkpoints to `workdir`, then
/// fine-tunes from that file with cosine_ot and with independent coupling using the
/// same seed; probes gradient noise at the checkpoint under both couplings.
FinetuneGain finetune_gain(const ExperimentConfig& cfg, const std::filesystem::path& workdir);

/// Runs fn(seed) for every seed on up to hardware_concurrency workers; results keep seed order.
template <class Fn>
auto map_seeds(const std::vector<std::uint64_t>& seeds, Fn fn) -> std::vector<decltype(fn(std::uint64_t{}))> {
    using Result = decltype(fn(std::uint64_t{}));
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<Result> results;
    results.reserve(seeds.size());
    for (std::size_t start = 0; start < seeds.size(); start += workers) {
        std::vector<std::future<Result>> batch;
        for (std::size_t k = start; k < std::min(seeds.size(), start + workers); ++k) {
            if (workers == 1) {
                std::promise<Result> p;
                p.set_value(fn(seeds[k]));
                batch.push_back(p.get_future());
            } else {
                batch.push_back(std::async(std::launch::async, fn, seeds[k]));
            }
        }
        for (auto& f : batch) results.push_back(f.get());
    }
    return results;
}

}  // namespace cosflow
