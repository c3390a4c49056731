// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0
//
// CSV helpers, SHA-256 digests and run manifests.

#pragma once

#include "cosflow/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cosflow {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// One row per sample, columns x0..x{d-1} with a header line.
void write_batch_csv(const std::filesystem::path& path, const Batch& batch);
Batch read_batch_csv(const std::filesystem::path& path);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Collects the files a run writes; `write` emits manifest.json with their digests.
class RunManifest {
public:
    RunManifest(std::string command, nlohmann::json resolved_config, std::filesystem::path dir);

    void add_input(const std::filesystem::path& path);
    /// `deterministic` = false marks timing outputs that replays cannot reproduce.
    void add_output(const std::filesystem::path& relative, bool deterministic = true);
    void write() const;

    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::string command_;
    nlohmann::json config_;
    std::filesystem::path dir_;
    nlohmann::json inputs_ = nlohmann::json::array();
    nlohmann::json outputs_ = nlohmann::json::array();
};

inline constexpr const char* kManifestName = "manifest.json";

}  // namespace cosflow
