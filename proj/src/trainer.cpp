// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/trainer.hpp"

#include "cosflow/io.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace cosflow {

namespace {

Batch standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Batch out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
    }
    return out;
}

Vector uniform_times(Eigen::Index n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Vector t(n);
    for (Eigen::Index i = 0; i < n; ++i) t(i) = uniform(rng);
    return t;
}

Batch gather_rows(const Batch& data, std::span<const std::size_t> idx) {
    Batch out(static_cast<Eigen::Index>(idx.size()), data.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = data.row(static_cast<Eigen::Index>(idx[k]));
    return out;
}

}  // namespace

const char* to_string(CouplingStrategy s) noexcept {
    switch (s) {
        case CouplingStrategy::independent: return "independent";
        case CouplingStrategy::cosine_ot: return "cosine_ot";
        case CouplingStrategy::euclidean_ot: return "euclidean_ot";
    }
    return "?";
}

CouplingStrategy parse_strategy(const std::string& name) {
    if (name == "independent") return CouplingStrategy::independent;
    if (name == "cosine_ot") return CouplingStrategy::cosine_ot;
    if (name == "euclidean_ot") return CouplingStrategy::euclidean_ot;
    throw ConfigError("unknown coupling strategy '" + name + "' (expected independent|cosine_ot|euclidean_ot)");
}

Batch couple_noise(const Batch& data, const Batch& noise, CouplingStrategy strategy) {
    if (data.rows() != noise.rows() || data.cols() != noise.cols()) {
        throw ShapeError("couple_noise: data and noise batches must have equal shape");
    }
    if (strategy == CouplingStrategy::independent) return noise;
    const CostKind kind = strategy == CouplingStrategy::cosine_ot ? CostKind::neg_cosine : CostKind::sq_euclidean;
    const AssignmentPlan plan = solve_assignment(build_cost_matrix(data, noise, kind));
    Batch paired(noise.rows(), noise.cols());
    for (Eigen::Index i = 0; i < noise.rows(); ++i) paired.row(i) = noise.row(plan.perm[static_cast<std::size_t>(i)]);
    return paired;
}

PathBatch make_training_batch(const Batch& data, std::mt19937_64& rng, CouplingStrategy strategy) {
    if (data.rows() == 0) throw DomainError("make_training_batch: empty batch");
    const Batch noise = standard_normal(data.rows(), data.cols(), rng);
    const Vector t = uniform_times(data.rows(), rng);
    return forward_batch(data, couple_noise(data, noise, strategy), t);
}

void TrainConfig::validate(Eigen::Index dataset_size) const {
    if (epochs < 0) throw ConfigError("trainer: epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("trainer: batch_size must be >= 1");
    if (dataset_size < 1) throw ConfigError("trainer: dataset is empty");
    if (batch_size > dataset_size) {
        throw ConfigError("trainer: batch_size " + std::to_string(batch_size) + " exceeds dataset size " +
                          std::to_string(dataset_size));
    }
    optim.validate();
}

TrainResult train(const Batch& data, ModelParams params, const TrainConfig& config,
                  std::optional<OptimState> resume) {
    config.validate(data.rows());
    if (data.cols() != params.dim) {
        throw ShapeError("train: dataset dimension " + std::to_string(data.cols()) +
                         " does not match model dimension " + std::to_string(params.dim));
    }
    TrainResult result{std::move(params), {}, {}};
    result.optimizer = resume ? std::move(*resume) : make_optim_state(result.params, config.optim);
    if (resume) result.optimizer.config = config.optim;

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(static_cast<std::size_t>(data.rows()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto steps_per_epoch = static_cast<std::size_t>(data.rows() / config.batch_size);
    const auto bs = static_cast<std::size_t>(config.batch_size);
    const auto start = std::chrono::steady_clock::now();

    result.records.reserve(steps_per_epoch * static_cast<std::size_t>(config.epochs));
    for (int e = 0; e < config.epochs; ++e) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t s = 0; s < steps_per_epoch; ++s) {
            const Batch x = gather_rows(data, std::span(order).subspan(s * bs, bs));
            const PathBatch batch = make_training_batch(x, rng, config.strategy);
            LossAndGrad lg = loss_and_grad(result.params, batch);
            optimizer_step(result.params, lg.grad, result.optimizer);

            RunRecord rec;
            rec.epoch = result.params.epoch + 1;
            rec.step = result.params.steps;
            rec.loss = lg.loss;
            rec.grad_norm = lg.grad.norm();
            if (config.record_wall_time) {
                rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
            rec.strategy = config.strategy;
            rec.seed = config.seed;
            result.records.push_back(rec);
        }
        ++result.params.epoch;
    }
    return result;
}

FinetuneResult finetune(const Checkpoint& checkpoint, const Batch& data, const FinetuneConfig& ft,
                        TrainConfig base) {
    if (ft.extra_epochs < 0) throw ConfigError("finetune: extra_epochs must be >= 0");
    if (data.cols() != checkpoint.params.dim) {
        throw IoError("finetune: checkpoint dimension " + std::to_string(checkpoint.params.dim) +
                      " does not match dataset dimension " + std::to_string(data.cols()));
    }
    base.epochs = ft.extra_epochs;
    base.strategy = ft.strategy;
    if (ft.lr) base.optim.lr = *ft.lr;

    std::optional<OptimState> resume;
    if (!ft.reset_moments) {
        if (!checkpoint.optimizer) throw IoError("finetune: reset_moments=false but checkpoint has no optimizer state");
        resume = checkpoint.optimizer;
    }
    return {train(data, checkpoint.params, base, std::move(resume)), ft.reset_moments};
}

FinetuneResult finetune(const std::filesystem::path& checkpoint, const Batch& data, const FinetuneConfig& ft,
                        TrainConfig base) {
    return finetune(load_checkpoint(checkpoint, static_cast<int>(data.cols())), data, ft, std::move(base));
}

GradientNoiseStats gradient_noise_probe(const ModelParams& params, const Batch& data, const ProbeOptions& options) {
    if (options.n_batches < 2) throw ConfigError("gradient_noise_probe: n_batches must be >= 2");
    if (options.batch_size < 1 || options.batch_size > data.rows()) {
        throw ConfigError("gradient_noise_probe: batch_size must be in [1, dataset size]");
    }
    if (options.fixed_noise && options.fixed_noise->size() != data.cols()) {
        throw ShapeError("gradient_noise_probe: fixed_noise dimension mismatch");
    }
    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> order(static_cast<std::size_t>(data.rows()));
    const auto bs = static_cast<Eigen::Index>(options.batch_size);

    std::vector<Eigen::VectorXd> grads;
    std::vector<double> losses;
    for (int b = 0; b < options.n_batches; ++b) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        const Batch x = gather_rows(data, std::span(order).first(static_cast<std::size_t>(bs)));
        Batch noise = options.fixed_noise ? Batch(options.fixed_noise->transpose().replicate(bs, 1))
                                          : standard_normal(bs, data.cols(), rng);
        const Vector t = options.fixed_t ? Vector::Constant(bs, *options.fixed_t) : uniform_times(bs, rng);
        const PathBatch batch = forward_batch(x, couple_noise(x, noise, options.strategy), t);
        LossAndGrad lg = loss_and_grad(params, batch);
        grads.push_back(lg.grad.flatten());
        losses.push_back(lg.loss);
    }

    const auto nb = static_cast<double>(options.n_batches);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(grads.front().size());
    for (const auto& g : grads) mean += g;
    mean /= nb;
    double trace = 0.0, grad_norm = 0.0;
    for (const auto& g : grads) {
        trace += (g - mean).squaredNorm();
        grad_norm += g.norm();
    }
    const double mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / nb;
    double loss_var = 0.0;
    for (double l : losses) loss_var += (l - mean_loss) * (l - mean_loss);

    GradientNoiseStats stats;
    stats.n_batches = options.n_batches;
    stats.grad_cov_trace = trace / (nb - 1.0);
    stats.loss_variance = loss_var / (nb - 1.0);
    stats.mean_loss = mean_loss;
    stats.mean_grad_norm = grad_norm / nb;
    return stats;
}

void write_records_csv(std::ostream& out, std::span<const RunRecord> records) {
    out << kRunRecordHeader << '\n';
    for (const RunRecord& r : records) {
        out << r.epoch << ',' << r.step << ',' << format_double(r.loss) << ',' << format_double(r.grad_norm) << ','
            << format_double(r.wall_time_s) << ',' << to_string(r.strategy) << ',' << r.seed << '\n';
    }
}

}  // namespace cosflow
