// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/checkpoint.hpp"
#include "cosflow/datasets.hpp"
#include "cosflow/optimizer.hpp"
#include "cosflow/trainer.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace cosflow;

namespace {

Batch mixture(int n, std::uint64_t seed) {
    DatasetSpec spec;
    spec.n = n;
    spec.seed = seed;
    return generate(spec);
}

std::vector<std::vector<double>> sorted_rows(const Batch& b) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < b.rows(); ++i) rows.emplace_back(b.row(i).data(), b.row(i).data() + b.cols());
    std::sort(rows.begin(), rows.end());
    return rows;
}

}  // namespace

TEST_CASE("AdamW: zero gradients and no decay leave params unchanged") {
    ModelParams p = init_params(0, {4}, 2);
    const ModelParams before = p;
    OptimConfig cfg;
    cfg.weight_decay = 0.0;
    OptimState st = make_optim_state(p, cfg);
    GradientSet zero{p.layers};
    for (auto& l : zero.layers) {
        l.weight.setZero();
        l.bias.setZero();
    }
    optimizer_step(p, zero, st);
    CHECK(bitwise_equal(p, before));
    CHECK(st.step == 1);
    CHECK(p.steps == 1);
}

TEST_CASE("AdamW: first step moves each parameter by lr * g / (|g| + eps)") {
    ModelParams p = init_params(1, {3}, 1);
    OptimConfig cfg;
    cfg.weight_decay = 0.0;
    cfg.lr = 0.01;
    OptimState st = make_optim_state(p, cfg);
    GradientSet g{p.layers};
    g.layers[0].weight.setConstant(0.5);
    g.layers[0].bias.setConstant(-2.0);
    g.layers[1].weight.setConstant(1e-3);
    g.layers[1].bias.setConstant(0.0);
    const Eigen::VectorXd before = flatten_params(p);
    optimizer_step(p, g, st);
    const Eigen::VectorXd delta = flatten_params(p) - before;
    const Eigen::VectorXd grad = g.flatten();
    for (Eigen::Index k = 0; k < delta.size(); ++k) {
        const double expected = -cfg.lr * grad(k) / (std::abs(grad(k)) + cfg.eps);
        CHECK(delta(k) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("AdamW: decoupled weight decay and determinism") {
    ModelParams p = init_params(2, {3}, 1);
    OptimConfig cfg;
    cfg.weight_decay = 0.1;
    cfg.lr = 0.5;
    OptimState st = make_optim_state(p, cfg);
    GradientSet zero{p.layers};
    for (auto& l : zero.layers) {
        l.weight.setZero();
        l.bias.setZero();
    }
    const Eigen::VectorXd before = flatten_params(p);
    ModelParams q = p;
    OptimState sq = st;
    optimizer_step(p, zero, st);
    optimizer_step(q, zero, sq);
    CHECK(bitwise_equal(p, q));
    CHECK((flatten_params(p) - before * (1 - 0.05)).norm() < 1e-14);
}

TEST_CASE("AdamW: shape mismatch and bad config") {
    ModelParams p = init_params(0, {4}, 2);
    OptimState st = make_optim_state(p, {});
    GradientSet g{init_params(0, {5}, 2).layers};
    CHECK_THROWS_AS(optimizer_step(p, g, st), ShapeError);
    OptimConfig bad;
    bad.beta1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("couple_noise: cosine OT pairs by direction") {
    Batch data(2, 2), noise(2, 2);
    data << 1, 0, 0, 1;
    noise << 0, 3, 2, 0;
    const Batch paired = couple_noise(data, noise, CouplingStrategy::cosine_ot);
    CHECK(paired(0, 0) == 2.0);
    CHECK(paired(1, 1) == 3.0);
    CHECK(couple_noise(data, noise, CouplingStrategy::independent) == noise);
}

TEST_CASE("make_training_batch preserves the drawn noise multiset") {
    const Batch data = mixture(64, 1);
    for (CouplingStrategy s : {CouplingStrategy::independent, CouplingStrategy::cosine_ot, CouplingStrategy::euclidean_ot}) {
        std::mt19937_64 a(42), b(42);
        const PathBatch batch = make_training_batch(data, a, s);
        std::normal_distribution<double> normal;
        Batch drawn(64, 2);
        for (int i = 0; i < 64; ++i) {
            for (int j = 0; j < 2; ++j) drawn(i, j) = normal(b);
        }
        CHECK(sorted_rows(batch.noise) == sorted_rows(drawn));
        CHECK(batch.data == data);
        if (s == CouplingStrategy::independent) CHECK(batch.noise == drawn);
    }
}

TEST_CASE("train: zero epochs returns the initial params") {
    const Batch data = mixture(256, 0);
    const ModelParams init = init_params(0, {8}, 2);
    TrainConfig cfg;
    cfg.epochs = 0;
    const TrainResult r = train(data, init, cfg);
    CHECK(bitwise_equal(r.params, init));
    CHECK(r.records.empty());
}

TEST_CASE("train: invalid config is rejected before any work") {
    const Batch data = mixture(100, 0);
    TrainConfig cfg;
    cfg.batch_size = 128;
    CHECK_THROWS_AS(train(data, init_params(0, {8}, 2), cfg), ConfigError);
    cfg.batch_size = 10;
    cfg.optim.lr = -1.0;
    CHECK_THROWS_AS(train(data, init_params(0, {8}, 2), cfg), ConfigError);
}

TEST_CASE("train: fixed seed reproduces params and records") {
    const Batch data = mixture(512, 3);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 64;
    cfg.strategy = CouplingStrategy::cosine_ot;
    cfg.seed = 9;
    const TrainResult a = train(data, init_params(0, {16}, 2), cfg);
    const TrainResult b = train(data, init_params(0, {16}, 2), cfg);
    CHECK(bitwise_equal(a.params, b.params));
    REQUIRE(a.records.size() == 16);
    std::ostringstream ca, cb;
    write_records_csv(ca, a.records);
    write_records_csv(cb, b.records);
    CHECK(ca.str() == cb.str());
    CHECK(ca.str().rfind(kRunRecordHeader, 0) == 0);
    CHECK(a.records.back().epoch == 2);
    CHECK(a.records.back().step == 16);
    CHECK(a.params.epoch == 2);
}

TEST_CASE("train: 5k steps on the 2-D mixture halve the loss") {
    DatasetSpec spec;
    spec.n = 12800;
    const Batch data = generate(spec);
    TrainConfig cfg;
    cfg.epochs = 50;
    const TrainResult r = train(data, init_params(0, {128, 128, 128}, 2), cfg);
    REQUIRE(r.records.size() == 5000);
    const double initial = r.records.front().loss;
    std::vector<double> windows;
    for (std::size_t w = 0; w < 10; ++w) {
        double s = 0.0;
        for (std::size_t k = 0; k < 500; ++k) s += r.records[w * 500 + k].loss;
        windows.push_back(s / 500.0);
    }
    MESSAGE("initial loss " << initial << ", final window " << windows.back());
    CHECK(windows.back() <= 0.5 * initial);
    // Smoothed loss never rises by more than 2% between consecutive windows.
    for (std::size_t w = 1; w < windows.size(); ++w) CHECK(windows[w] <= 1.02 * windows[w - 1]);
}

TEST_CASE("finetune: zero extra epochs leaves params unchanged; lineage counters continue") {
    const Batch data = mixture(512, 0);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 64;
    const TrainResult base = train(data, init_params(0, {8}, 2), cfg);
    const Checkpoint ckpt{base.params, base.optimizer, nlohmann::json::array()};

    FinetuneConfig ft;
    ft.extra_epochs = 0;
    CHECK(bitwise_equal(finetune(ckpt, data, ft, cfg).run.params, base.params));

    ft.extra_epochs = 1;
    const FinetuneResult r = finetune(ckpt, data, ft, cfg);
    CHECK(r.moments_reset);
    CHECK(r.run.params.epoch == 2);
    CHECK(r.run.records.front().step == 9);
    CHECK(r.run.records.front().strategy == CouplingStrategy::cosine_ot);

    ft.reset_moments = false;
    CHECK_FALSE(finetune(ckpt, data, ft, cfg).moments_reset);
    const Checkpoint bare{base.params, std::nullopt, nlohmann::json::array()};
    CHECK_THROWS_AS(finetune(bare, data, ft, cfg), IoError);
}

TEST_CASE("finetune: rejects a checkpoint of the wrong dimension") {
    const auto path = std::filesystem::temp_directory_path() / "cosflow_tests" / "dim3.ckpt";
    std::filesystem::create_directories(path.parent_path());
    save_checkpoint({init_params(0, {4}, 3), std::nullopt, nlohmann::json::array()}, path);
    TrainConfig cfg;
    cfg.batch_size = 8;
    CHECK_THROWS_AS(finetune(path, mixture(64, 0), FinetuneConfig{}, cfg), IoError);
}

TEST_CASE("finetune with independent coupling equals continued training with fresh moments") {
    const Batch data = mixture(512, 0);
    TrainConfig cfg;
    cfg.batch_size = 64;
    cfg.seed = 4;
    const TrainResult base = train(data, init_params(0, {8}, 2), cfg);
    FinetuneConfig ft;
    ft.strategy = CouplingStrategy::independent;
    const FinetuneResult r = finetune({base.params, base.optimizer, nlohmann::json::array()}, data, ft, cfg);
    const TrainResult cont = train(data, base.params, cfg);
    CHECK(bitwise_equal(r.run.params, cont.params));
}

TEST_CASE("gradient noise probe: degenerate data gives zero variance") {
    Batch data(32, 2);
    data.rowwise() = Eigen::RowVector2d(1.5, -0.5);
    ProbeOptions opt;
    opt.batch_size = 8;
    opt.n_batches = 5;
    opt.fixed_t = 0.3;
    opt.fixed_noise = Vector::Constant(2, 0.7);
    const GradientNoiseStats st = gradient_noise_probe(init_params(0, {8}, 2), data, opt);
    CHECK(st.grad_cov_trace < 1e-25);
    CHECK(st.loss_variance < 1e-25);
}

TEST_CASE("gradient noise probe: deterministic and validated") {
    const Batch data = mixture(512, 0);
    ProbeOptions opt;
    opt.batch_size = 32;
    opt.n_batches = 4;
    opt.seed = 3;
    const ModelParams p = init_params(0, {8}, 2);
    const GradientNoiseStats a = gradient_noise_probe(p, data, opt);
    const GradientNoiseStats b = gradient_noise_probe(p, data, opt);
    CHECK(a.grad_cov_trace == b.grad_cov_trace);
    CHECK(a.loss_variance == b.loss_variance);
    CHECK(a.grad_cov_trace > 0.0);
    opt.n_batches = 1;
    CHECK_THROWS_AS(gradient_noise_probe(p, data, opt), ConfigError);
}
