// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/checkpoint.hpp"
#include "cosflow/velocity_model.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace cosflow;

namespace {

PathBatch random_batch(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;
    Batch data(n, d), noise(n, d);
    Vector t(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            data(i, j) = 2.0 * normal(rng);
            noise(i, j) = normal(rng);
        }
        t(i) = unit(rng);
    }
    return forward_batch(data, noise, t);
}

std::filesystem::path temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "cosflow_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("init_params is deterministic and seed dependent") {
    const ModelParams a = init_params(0, {16, 8}, 2);
    const ModelParams b = init_params(0, {16, 8}, 2);
    const ModelParams c = init_params(1, {16, 8}, 2);
    CHECK(bitwise_equal(a, b));
    CHECK_FALSE(bitwise_equal(a, c));
}

TEST_CASE("layer shapes follow the widths") {
    const ModelParams p = init_params(0, {16}, 2);
    REQUIRE(p.layers.size() == 2);
    CHECK(p.layers[0].weight.rows() == 2 + 2 * kDefaultTimeFeatures);
    CHECK(p.layers[0].weight.cols() == 16);
    CHECK(p.layers[1].weight.rows() == 16);
    CHECK(p.layers[1].weight.cols() == 2);
    CHECK(p.input_width() == 10);
    CHECK(p.parameter_count() == static_cast<std::size_t>(10 * 16 + 16 + 16 * 2 + 2));
    CHECK(flatten_params(p).allFinite());
}

TEST_CASE("init_params rejects bad widths") {
    CHECK_THROWS_AS(init_params(0, {0}, 2), ConfigError);
    CHECK_THROWS_AS(init_params(0, {8}, 0), ConfigError);
}

TEST_CASE("time embedding uses dyadic frequencies") {
    Vector t(1);
    t << 0.25;
    const Batch e = time_embedding(t, 2);
    CHECK(e.cols() == 4);
    CHECK(e(0, 0) == doctest::Approx(std::sin(M_PI * 0.25)));
    CHECK(e(0, 1) == doctest::Approx(std::cos(M_PI * 0.25)));
    CHECK(e(0, 2) == doctest::Approx(std::sin(2 * M_PI * 0.25)));
    CHECK(e(0, 3) == doctest::Approx(std::cos(2 * M_PI * 0.25)));
}

TEST_CASE("zero final layer gives zero output") {
    ModelParams p = init_params(3, {8, 8}, 3);
    p.layers.back().weight.setZero();
    p.layers.back().bias.setZero();
    Vector x(3);
    x << 1, -2, 3;
    CHECK(forward(p, x, 0.7).norm() == 0.0);

    const PathBatch b = random_batch(10, 3, 4);
    CHECK(loss_value(p, b) == doctest::Approx(b.v_target.rowwise().squaredNorm().mean()).epsilon(1e-14));
}

TEST_CASE("batched forward equals single forwards") {
    const ModelParams p = init_params(2, {12, 12}, 2);
    const PathBatch b = random_batch(7, 2, 9);
    const Batch y = forward(p, b.x_t, b.t);
    for (int i = 0; i < 7; ++i) {
        const Vector yi = forward(p, Vector(b.x_t.row(i).transpose()), b.t(i));
        CHECK((Vector(y.row(i).transpose()) - yi).norm() < 1e-13);
    }
}

TEST_CASE("forward rejects non-finite inputs and bad times") {
    const ModelParams p = init_params(0, {4}, 2);
    Vector x(2);
    x << std::nan(""), 0;
    CHECK_THROWS_AS(forward(p, x, 0.5), DomainError);
    x << 0, 0;
    CHECK_THROWS_AS(forward(p, x, 1.5), DomainError);
    CHECK_THROWS_AS(forward(p, Vector::Zero(3), 0.5), ShapeError);
}

TEST_CASE("golden forward snapshot for seed-0 default model") {
    const ModelParams p = init_params(0, {128, 128, 128}, 2);
    Vector x(2);
    x << 1, 0;
    const Vector y = forward(p, x, 0.5);
    CHECK(y(0) == doctest::Approx(0.028994501235976106).epsilon(1e-12));
    CHECK(y(1) == doctest::Approx(0.22217591830041422).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
    constexpr double h = 1e-5;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ModelParams p = init_params(seed, {8, 6}, 2);
        const PathBatch b = random_batch(5, 2, 100 + seed);
        const Eigen::VectorXd analytic = loss_and_grad(p, b).grad.flatten();
        const Eigen::VectorXd theta = flatten_params(p);
        for (Eigen::Index k = 0; k < theta.size(); ++k) {
            Eigen::VectorXd shifted = theta;
            shifted(k) += h;
            assign_flat_params(p, shifted);
            const double up = loss_value(p, b);
            shifted(k) -= 2 * h;
            assign_flat_params(p, shifted);
            const double down = loss_value(p, b);
            const double numeric = (up - down) / (2 * h);
            const double denom = std::max({std::abs(analytic(k)), std::abs(numeric), 1e-4});
            worst = std::max(worst, std::abs(analytic(k) - numeric) / denom);
        }
        assign_flat_params(p, theta);
    }
    MESSAGE("max relative gradient error " << worst);
    CHECK(worst < 1e-5);
}

TEST_CASE("duplicated batch leaves loss and gradients unchanged") {
    const ModelParams p = init_params(5, {10}, 2);
    const PathBatch b = random_batch(6, 2, 1);
    PathBatch twice;
    twice.data.resize(12, 2);
    twice.noise.resize(12, 2);
    twice.t.resize(12);
    twice.data << b.data, b.data;
    twice.noise << b.noise, b.noise;
    twice.t << b.t, b.t;
    twice = forward_batch(twice.data, twice.noise, twice.t);
    const LossAndGrad a = loss_and_grad(p, b);
    const LossAndGrad c = loss_and_grad(p, twice);
    CHECK(a.loss == doctest::Approx(c.loss).epsilon(1e-14));
    CHECK((a.grad.flatten() - c.grad.flatten()).norm() <= 1e-13 * (1 + a.grad.norm()));
}

TEST_CASE("flat parameter round trip") {
    ModelParams p = init_params(4, {5, 5}, 3);
    const Eigen::VectorXd flat = flatten_params(p);
    ModelParams q = init_params(9, {5, 5}, 3);
    assign_flat_params(q, flat);
    CHECK(flatten_params(q) == flat);
    CHECK_THROWS_AS(assign_flat_params(q, Eigen::VectorXd::Zero(3)), ShapeError);
}

TEST_CASE("checkpoint round trip is bitwise") {
    ModelParams p = init_params(7, {16, 16}, 4);
    p.epoch = 3;
    p.steps = 300;
    OptimState st = make_optim_state(p, OptimConfig{});
    st.first_moment[0].weight.setConstant(0.25);
    st.step = 300;
    const auto path = temp_path("roundtrip.ckpt");
    save_checkpoint({p, st, nlohmann::json::array({{{"stage", "train"}}})}, path);
    const Checkpoint back = load_checkpoint(path, 4);
    CHECK(bitwise_equal(p, back.params));
    CHECK(back.params.epoch == 3);
    CHECK(back.params.steps == 300);
    REQUIRE(back.optimizer.has_value());
    CHECK(back.optimizer->step == 300);
    CHECK(back.optimizer->first_moment[0].weight(0, 0) == 0.25);
    CHECK(back.lineage[0]["stage"] == "train");
}

TEST_CASE("checkpoint load failures") {
    const auto path = temp_path("bad.ckpt");
    save_checkpoint({init_params(0, {4}, 2), std::nullopt, nlohmann::json::array()}, path);
    CHECK_THROWS_AS(load_checkpoint(path, 3), IoError);
    CHECK_FALSE(load_checkpoint(path).optimizer.has_value());

    CHECK_THROWS_AS(load_checkpoint(temp_path("does_not_exist.ckpt")), IoError);

    const std::string bytes = [&] {
        std::ifstream in(path, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    }();
    const auto truncated = temp_path("truncated.ckpt");
    std::ofstream(truncated, std::ios::binary) << bytes.substr(0, bytes.size() - 5);
    CHECK_THROWS_AS(load_checkpoint(truncated), IoError);

    const auto magic = temp_path("magic.ckpt");
    std::string wrong = bytes;
    wrong[0] = 'X';
    std::ofstream(magic, std::ios::binary) << wrong;
    CHECK_THROWS_AS(load_checkpoint(magic), IoError);

    const auto trailing = temp_path("trailing.ckpt");
    std::ofstream(trailing, std::ios::binary) << bytes << "junk";
    CHECK_THROWS_AS(load_checkpoint(trailing), IoError);
}
