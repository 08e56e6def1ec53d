#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazezone/dataset/split.hpp"
#include "gazezone/evaluation/metrics.hpp"
#include "gazezone/models/gaze_model.hpp"
#include "gazezone/training/trainer.hpp"

namespace gazezone::eval {

struct Prediction {
    LabeledSample sample;
    GazeZone predicted = GazeZone::Forward;
    ZoneDistribution distribution;
};

struct Evaluation {
    ConfusionMatrix confusion;
    std::vector<Prediction> predictions;
    /// Samples skipped because no face was found.
    std::size_t dropped = 0;
};

/// Batched inference over `samples`; NoFace frames are counted, not scored.
Evaluation evaluate(const models::GazeModel& model, const std::vector<LabeledSample>& samples,
                    const training::PatchSource& patches, std::size_t batch_size = 32);

void write_predictions_csv(const Evaluation& evaluation, const std::filesystem::path& path);

struct GridCell {
    models::Family family = models::Family::SqueezeNet;
    preprocess::CropKind kind = preprocess::CropKind::HalfFace;
    std::optional<double> macro;
    std::optional<double> micro;
    std::filesystem::path run_dir;
    std::string error;

    bool failed() const { return !macro.has_value(); }
};

struct AblationGrid {
    std::vector<models::Family> families;
    std::vector<preprocess::CropKind> kinds;
    /// Row-major: families x kinds.
    std::vector<GridCell> cells;

    const GridCell& at(std::size_t row, std::size_t col) const { return cells.at(row * kinds.size() + col); }
    nlohmann::json to_json() const;
    /// Fixed-width table of macro accuracies with the published value beside each cell.
    std::string to_table() const;
};

/// Builds everything one (family, strategy) cell needs.
struct AblationSetup {
    std::function<models::GazeModel(models::Family)> make_model;
    std::function<training::PatchSource(models::Family, preprocess::CropKind)> patches;
    std::function<training::TrainConfig(models::Family)> config;
    /// Each cell trains into <run_root>/<family>_<strategy>; empty writes nothing.
    std::filesystem::path run_root;
    std::function<void(const GridCell&)> on_cell;
};

/// Fine-tunes and tests every (family, strategy) pair. A failing cell keeps
/// its error message and the grid moves on.
AblationGrid ablation_grid(const std::vector<models::Family>& families,
                           const std::vector<preprocess::CropKind>& kinds, const dataset::DatasetSplit& split,
                           const AblationSetup& setup);

struct ResolutionResult {
    int resolution = 0;
    double macro = 0.0;
    double micro = 0.0;
    std::size_t dropped = 0;
    std::optional<double> published;
};

struct ResolutionSetup {
    /// Patch source producing side x side inputs.
    std::function<training::PatchSource(int side)> patches;
    /// When set, a copy of the model is fine-tuned at each side before testing.
    std::optional<training::TrainConfig> finetune;
    std::filesystem::path run_root;
};

/// Macro accuracy on split.test at each side. Throws ModelError when the
/// model cannot take inputs other than its native size.
std::vector<ResolutionResult> resolution_study(const models::GazeModel& model, const std::vector<int>& resolutions,
                                               const dataset::DatasetSplit& split, const ResolutionSetup& setup);
nlohmann::json to_json(const std::vector<ResolutionResult>& results);

}  // namespace gazezone::eval
