// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace cosflow {

/// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Runs `command` ("train", "repro fig2a", ...) with a resolved config into `out_dir`
/// and writes the run manifest there. Used by the CLI and by `replay`.
void execute_command(const std::string& command, const nlohmann::json& resolved, const std::filesystem::path& out_dir,
                     std::ostream& log);

/// Environment variable naming the default output root (falls back to ./runs).
inline constexpr const char* kOutputRootEnv = "COSFLOW_OUTPUT_ROOT";

}  // namespace cosflow
