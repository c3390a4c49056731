// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <memory>
#include <sstream>

namespace cosflow {

std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) throw std::logic_error("format_double: to_chars failed");
    return std::string(buf.data(), end);
}

void write_batch_csv(const std::filesystem::path& path, const Batch& batch) {
    std::ostringstream out;
    for (Eigen::Index j = 0; j < batch.cols(); ++j) out << (j ? "," : "") << 'x' << j;
    out << '\n';
    for (Eigen::Index i = 0; i < batch.rows(); ++i) {
        for (Eigen::Index j = 0; j < batch.cols(); ++j) out << (j ? "," : "") << format_double(batch(i, j));
        out << '\n';
    }
    write_file(path, out.str());
}

Batch read_batch_csv(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty CSV");
    const auto cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);
    std::vector<double> values;
    Eigen::Index rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Eigen::Index seen = 0;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p <= end) {
            double v = 0.0;
            const auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{}) {
                throw IoError(path.string() + ": malformed number on data row " + std::to_string(rows + 1));
            }
            values.push_back(v);
            ++seen;
            if (next == end) break;
            if (*next != ',') throw IoError(path.string() + ": unexpected character on data row " + std::to_string(rows + 1));
            p = next + 1;
        }
        if (seen != cols) throw IoError(path.string() + ": row " + std::to_string(rows + 1) + " has wrong column count");
        ++rows;
    }
    Batch out(rows, cols);
    std::copy(values.begin(), values.end(), out.data());
    return out;
}

std::string sha256_hex(std::string_view bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

RunManifest::RunManifest(std::string command, nlohmann::json resolved_config, std::filesystem::path dir)
    : command_(std::move(command)), config_(std::move(resolved_config)), dir_(std::move(dir)) {}

void RunManifest::add_input(const std::filesystem::path& path) {
    inputs_.push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
}

void RunManifest::add_output(const std::filesystem::path& relative, bool deterministic) {
    outputs_.push_back({{"path", relative.generic_string()},
                        {"sha256", sha256_file(dir_ / relative)},
                        {"deterministic", deterministic}});
}

void RunManifest::write() const {
    const nlohmann::json manifest{{"format", "cosflow-manifest"},
                                  {"version", 1},
                                  {"command", command_},
                                  {"config", config_},
                                  {"config_sha256", sha256_hex(config_.dump())},
                                  {"inputs", inputs_},
                                  {"outputs", outputs_}};
    write_file(dir_ / kManifestName, manifest.dump(2) + "\n");
}

}  // namespace cosflow
