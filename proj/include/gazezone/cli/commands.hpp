#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazezone/cli/config.hpp"
#include "gazezone/dataset/split.hpp"
#include "gazezone/evaluation/benchmark.hpp"
#include "gazezone/models/checkpoint.hpp"
#include "gazezone/preprocess/normalize.hpp"

namespace gazezone::cli {

/// Line-oriented "<time> level=<level> <message>" records on stderr.
void configure_logging(const std::string& level);

struct PrepareResult {
    std::filesystem::path split_path;
    std::filesystem::path summary_path;
    dataset::SplitArtifact artifact;
};

/// ingest -> segment -> balance -> split -> carve. Writes split.json and
/// summary.csv (per-zone train / validation / test counts).
PrepareResult cmd_prepare(const RunConfig& cfg);

struct TrainResult {
    std::filesystem::path run_dir;
    std::filesystem::path checkpoint;
    int best_epoch = 0;
};

/// Fine-tunes cfg.backbone on the split's train part. The run directory
/// holds the config snapshot, per-epoch checkpoints, the report and model.ckpt.
TrainResult cmd_train(const RunConfig& cfg);

/// mode confusion | columbia | grid | reference. Returns the report written.
nlohmann::json cmd_eval(const RunConfig& cfg);

/// One overlay per zone for every frame plus grid.png. Returns the sidecars.
nlohmann::json cmd_cam(const RunConfig& cfg);

eval::BenchmarkResult cmd_bench(const RunConfig& cfg);

/// Patch settings for a run: flags override what the checkpoint recorded.
preprocess::PatchConfig patch_config(const RunConfig& cfg, const models::CheckpointInfo* info);
std::shared_ptr<const preprocess::FaceDetector> detector_for(const RunConfig& cfg);

}  // namespace gazezone::cli
