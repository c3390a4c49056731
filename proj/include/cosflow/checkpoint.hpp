// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint file layout (version 1):
//
//   bytes 0..7    magic "COSFLOW\0"
//   bytes 8..11   format version, uint32 little-endian
//   bytes 12..19  header length H, uint64 little-endian
//   next H bytes  UTF-8 JSON header (dim, time_features, hidden, init_seed,
//                 epoch, steps, lineage, parameter_count, optional optimizer)
//   remainder     float64 little-endian values: model parameters in
//                 flatten_params order, then first and second moments in the
//                 same order when the header carries an optimizer block.

#pragma once

#include "cosflow/optimizer.hpp"
#include "cosflow/velocity_model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>

namespace cosflow {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelParams params;
    std::optional<OptimState> optimizer;
    nlohmann::json lineage = nlohmann::json::array();  ///< one object per training stage
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

/// Throws IoError on missing, truncated or malformed files, and when `expected_dim`
/// is given and differs from the stored dimension.
Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<int> expected_dim = std::nullopt);

}  // namespace cosflow
