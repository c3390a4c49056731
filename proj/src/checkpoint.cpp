// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace cosflow {

namespace {

constexpr std::array<char, 8> kMagic{'C', 'O', 'S', 'F', 'L', 'O', 'W', '\0'};

template <class T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_integral_v<T>);
    std::array<unsigned char, sizeof(T)> bytes{};
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <class T>
T read_le(std::istream& in, const std::filesystem::path& path) {
    std::array<unsigned char, sizeof(T)> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
        throw IoError("checkpoint " + path.string() + ": truncated file");
    }
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
    return value;
}

void write_doubles(std::ostream& out, const Eigen::VectorXd& values) {
    for (Eigen::Index i = 0; i < values.size(); ++i) write_le(out, std::bit_cast<std::uint64_t>(values(i)));
}

Eigen::VectorXd read_doubles(std::istream& in, std::size_t count, const std::filesystem::path& path) {
    Eigen::VectorXd values(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
        values(static_cast<Eigen::Index>(i)) = std::bit_cast<double>(read_le<std::uint64_t>(in, path));
    }
    return values;
}

Eigen::VectorXd flatten_moment(const std::vector<DenseLayer>& layers, const ModelParams& shape) {
    ModelParams tmp = shape;
    tmp.layers = layers;
    return flatten_params(tmp);
}

std::vector<DenseLayer> unflatten_moment(const Eigen::VectorXd& flat, const ModelParams& shape) {
    ModelParams tmp = shape;
    assign_flat_params(tmp, flat);
    return tmp.layers;
}

template <class T>
T header_field(const nlohmann::json& header, const char* key, const std::filesystem::path& path) {
    try {
        return header.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw IoError("checkpoint " + path.string() + ": header field '" + key + "' missing or malformed");
    }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const ModelParams& p = ckpt.params;
    nlohmann::json header{
        {"format", "cosflow-checkpoint"},
        {"dim", p.dim},
        {"time_features", p.time_features},
        {"hidden", p.hidden},
        {"init_seed", p.init_seed},
        {"epoch", p.epoch},
        {"steps", p.steps},
        {"lineage", ckpt.lineage},
        {"parameter_count", p.parameter_count()},
    };
    if (ckpt.optimizer) {
        const OptimState& o = *ckpt.optimizer;
        header["optimizer"] = {{"kind", "adamw"},
                               {"step", o.step},
                               {"lr", o.config.lr},
                               {"beta1", o.config.beta1},
                               {"beta2", o.config.beta2},
                               {"eps", o.config.eps},
                               {"weight_decay", o.config.weight_decay}};
    }
    const std::string text = header.dump();

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint32_t>(out, kCheckpointVersion);
    write_le<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    write_doubles(out, flatten_params(p));
    if (ckpt.optimizer) {
        write_doubles(out, flatten_moment(ckpt.optimizer->first_moment, p));
        write_doubles(out, flatten_moment(ckpt.optimizer->second_moment, p));
    }
    if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<int> expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());

    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw IoError("checkpoint " + path.string() + ": bad magic, not a cosflow checkpoint");
    }
    const auto version = read_le<std::uint32_t>(in, path);
    if (version != kCheckpointVersion) {
        throw IoError("checkpoint " + path.string() + ": unsupported version " + std::to_string(version));
    }
    const auto header_len = read_le<std::uint64_t>(in, path);
    if (header_len > (1u << 24)) throw IoError("checkpoint " + path.string() + ": implausible header length");
    std::string text(header_len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) {
        throw IoError("checkpoint " + path.string() + ": truncated header");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint " + path.string() + ": corrupt header (" + e.what() + ")");
    }

    const int dim = header_field<int>(header, "dim", path);
    if (expected_dim && *expected_dim != dim) {
        throw IoError("checkpoint " + path.string() + ": dimension " + std::to_string(dim) +
                      " does not match expected " + std::to_string(*expected_dim));
    }
    Checkpoint ckpt;
    try {
        ckpt.params = init_params(0, header_field<std::vector<int>>(header, "hidden", path), dim,
                                  header_field<int>(header, "time_features", path));
    } catch (const ConfigError& e) {
        throw IoError("checkpoint " + path.string() + ": invalid architecture (" + e.what() + ")");
    }
    ModelParams& p = ckpt.params;
    p.init_seed = header_field<std::uint64_t>(header, "init_seed", path);
    p.epoch = header_field<int>(header, "epoch", path);
    p.steps = header_field<std::int64_t>(header, "steps", path);
    ckpt.lineage = header.value("lineage", nlohmann::json::array());

    const auto count = header_field<std::size_t>(header, "parameter_count", path);
    if (count != p.parameter_count()) {
        throw IoError("checkpoint " + path.string() + ": parameter_count disagrees with architecture");
    }
    assign_flat_params(p, read_doubles(in, count, path));
    if (!flatten_params(p).allFinite()) {
        throw IoError("checkpoint " + path.string() + ": non-finite parameters");
    }

    if (header.contains("optimizer")) {
        const nlohmann::json& o = header["optimizer"];
        OptimConfig cfg{header_field<double>(o, "lr", path), header_field<double>(o, "beta1", path),
                        header_field<double>(o, "beta2", path), header_field<double>(o, "eps", path),
                        header_field<double>(o, "weight_decay", path)};
        OptimState state{cfg, {}, {}, header_field<std::int64_t>(o, "step", path)};
        state.first_moment = unflatten_moment(read_doubles(in, count, path), p);
        state.second_moment = unflatten_moment(read_doubles(in, count, path), p);
        ckpt.optimizer = std::move(state);
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw IoError("checkpoint " + path.string() + ": trailing bytes after payload");
    }
    return ckpt;
}

}  // namespace cosflow
