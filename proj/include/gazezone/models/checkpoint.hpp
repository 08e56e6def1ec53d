#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazezone/models/gaze_model.hpp"

namespace gazezone::models {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointInfo {
    BackboneSpec backbone;
    int classes = 0;
    /// Zone names in output order; empty for pretrained 1000-way files.
    std::vector<std::string> zones;
    bool variable_resolution = false;
    std::string config_fingerprint;
    nlohmann::json extra = nlohmann::json::object();
};

/// Layout: "GZZCKPT\0", u32 version, u64 header length, JSON header,
/// then every tensor as little-endian float32 in header order.
void save_checkpoint(const GazeModel& model, const std::filesystem::path& path,
                     const std::string& config_fingerprint = {},
                     const nlohmann::json& extra = nlohmann::json::object());

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

struct LoadedCheckpoint {
    GazeModel model;
    CheckpointInfo info;
};

/// Throws ModelError on a bad magic, version, missing tensor or shape mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gazezone::models
