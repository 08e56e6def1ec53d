#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazezone/core/types.hpp"

namespace gazezone::cli {

/// Bad or missing command-line input; the process exits with status 2.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Every setting a subcommand may read. Resolution order: built-in
/// defaults, then the JSON config file, then explicit flags.
struct RunConfig {
    std::vector<std::string> manifests;
    std::vector<std::string> camera_profiles;
    std::string detector;
    std::string backbone = "SqueezeNet";
    /// Pretrained locator; empty means "synthetic:<seed>".
    std::string weights;
    int width_divisor = 1;
    bool variable_resolution = false;
    /// Crop strategy; empty uses the checkpoint's, else HalfFace.
    std::string strategy;
    /// Patch side; 0 uses the backbone's native input (or the checkpoint's).
    int resolution = 0;
    double context_expand = 0.5;

    std::string split_kind = "cross_subject";
    std::vector<std::string> train_subjects;
    std::vector<std::string> test_subjects;
    std::array<double, 3> temporal_fractions = {0.70, 0.15, 0.15};
    double validation_fraction = 0.05;
    double validation_gap = 30.0;
    int balance_cap = 3500;
    int per_event_cap = 1;

    std::string split;
    /// TrainConfig fields overriding the family defaults.
    nlohmann::json train = nlohmann::json::object();
    std::string checkpoint;

    std::string mode = "confusion";
    std::string columbia_manifest;
    bool charts = false;
    std::vector<std::string> grid_backbones;
    std::vector<std::string> grid_strategies;

    std::vector<std::string> frames;
    double alpha = 0.5;
    int iterations = 100;
    int warmup = 10;
    bool end_to_end = false;

    std::string output = "run";
    std::uint64_t seed = 0;
    std::string cache_dir;
    std::string log_level = "info";
};

nlohmann::json to_json(const RunConfig& cfg);
/// Throws UsageError naming unknown keys or mistyped values.
RunConfig run_config_from_json(const nlohmann::json& j);

/// defaults <- file (if non-empty) <- overrides, applied as JSON merge patches.
RunConfig resolve_config(const std::filesystem::path& file, const nlohmann::json& overrides);

/// Writes <dir>/resolved_config.json.
void persist_config(const RunConfig& cfg, const std::filesystem::path& dir);

}  // namespace gazezone::cli
