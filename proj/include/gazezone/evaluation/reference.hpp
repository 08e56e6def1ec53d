#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazezone/evaluation/metrics.hpp"
#include "gazezone/models/backbone.hpp"
#include "gazezone/preprocess/crop.hpp"

namespace gazezone::eval {

// Published reference numbers. They annotate reports and anchor metric
// oracles; locally trained models are never asserted against them.

using PercentMatrix = std::array<std::array<double, kNumZones>, kNumZones>;

/// Cross-subject test frames per zone, in zone order.
inline constexpr std::array<std::int64_t, kNumZones> kPublishedTestCounts = {1023, 1021, 1022, 1159, 956, 1140, 1093};

struct PublishedConfusion {
    std::string model;
    PercentMatrix percent;
    double caption_macro;
    double caption_micro;
};

/// HalfFace confusion matrices: SqueezeNet, Random Forest baseline, VGG16, AlexNet, ResNet50.
const std::vector<PublishedConfusion>& published_confusions();
const PublishedConfusion& published_confusion(const std::string& model);

/// Macro accuracy by backbone (rows) and crop strategy (columns).
std::optional<double> published_ablation(models::Family family, preprocess::CropKind kind);
/// SqueezeNet on Face-embedded FoV patches by input side.
std::optional<double> published_resolution(int side);

struct PublishedRuntime {
    models::Family family;
    int resolution;
    double milliseconds;
};
const std::vector<PublishedRuntime>& published_runtimes();
inline constexpr const char* kPublishedRuntimeHardware = "Titan X GPU, Caffe";

/// Integer counts reproducing a percentage matrix for the given row totals.
/// Diagonals are rounded half-up first; off-diagonal cells share the rest of
/// the row by largest remainder. Rows whose percentages do not sum to 100
/// therefore keep their diagonal exact.
ConfusionMatrix counts_from_percentages(const PercentMatrix& percent, const std::array<std::int64_t, kNumZones>& rows);
/// Every cell rounded independently; row sums may drift from the totals.
ConfusionMatrix counts_by_cell_rounding(const PercentMatrix& percent,
                                        const std::array<std::int64_t, kNumZones>& rows);

struct CrossCheckEntry {
    std::string model;
    double diagonal_mean = 0.0;
    double caption_macro = 0.0;
    double caption_micro = 0.0;
    std::optional<double> ablation_half_face;
    std::vector<double> row_sums;
    bool flagged = false;
    std::vector<std::string> notes;
};

/// Recomputes every published matrix's diagonal mean, compares it with its
/// caption and the ablation table, and flags the inconsistencies.
std::vector<CrossCheckEntry> cross_check_published(double tolerance = 0.01);
nlohmann::json to_json(const std::vector<CrossCheckEntry>& entries);

}  // namespace gazezone::eval
