#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazezone/core/types.hpp"
#include "gazezone/models/gaze_model.hpp"
#include "gazezone/preprocess/image.hpp"
#include "gazezone/preprocess/normalize.hpp"

namespace gazezone::eval {

inline constexpr std::array<int, 5> kHeadPoses = {-30, -5, 0, 5, 30};
inline constexpr std::array<int, 7> kHorizontalGaze = {-15, -10, -5, 0, 5, 10, 15};
inline constexpr std::array<int, 3> kVerticalGaze = {-10, 0, 10};
inline constexpr int kNumConfigurations = 105;
inline constexpr double kMajorityThreshold = 0.70;

struct PoseGaze {
    int head_pose = 0;
    int h_gaze = 0;
    int v_gaze = 0;

    /// Throws EvalError for angles outside the capture grid.
    void validate() const;
    std::string label() const;
    auto operator<=>(const PoseGaze&) const = default;
};

/// All 105 configurations ordered by head pose, then horizontal, then vertical gaze.
std::vector<PoseGaze> all_configurations();

struct ColumbiaRow {
    std::string subject_id;
    PoseGaze config;
    std::string image_path;
};

/// Header `subject_id,head_pose_deg,h_gaze_deg,v_gaze_deg,image_path`.
/// Relative image paths resolve against the manifest's directory.
/// Duplicate (subject, configuration) rows raise EvalError.
std::vector<ColumbiaRow> read_columbia_manifest(const std::filesystem::path& path);

struct ConfigurationHistogram {
    PoseGaze config;
    std::array<int, kNumZones> counts{};
    /// Fraction of scored subjects per zone; all zero when none was scored.
    std::array<double, kNumZones> fractions{};
    int scored = 0;
    /// Distinct subjects in the manifest.
    int expected = 0;
    double entropy = 0.0;
    std::optional<GazeZone> majority;
    std::vector<std::string> missing;

    double coverage() const { return expected == 0 ? 0.0 : static_cast<double>(scored) / expected; }
};

/// Histogram over the predicted zones; majority is set when one zone's
/// fraction strictly exceeds `threshold`.
ConfigurationHistogram make_histogram(const PoseGaze& config, const std::vector<GazeZone>& predictions, int expected,
                                      double threshold = kMajorityThreshold);

struct ColumbiaReport {
    std::vector<ConfigurationHistogram> configurations;
    double threshold = kMajorityThreshold;
    int subjects = 0;

    /// Configurations whose majority zone is `zone`.
    std::vector<PoseGaze> flagged(GazeZone zone) const;
    nlohmann::json to_json() const;
};

/// Maps a manifest row to a network input; throws NoFaceError or
/// Error for unreadable images, which count as missing.
using ColumbiaPatchSource = std::function<preprocess::NetworkInput(const ColumbiaRow&)>;

/// One histogram per configuration in all_configurations() order,
/// including configurations absent from the manifest (coverage 0).
ColumbiaReport cross_dataset_eval(const models::GazeModel& model, const std::vector<ColumbiaRow>& rows,
                                  const ColumbiaPatchSource& patches, double threshold = kMajorityThreshold);

/// Bar chart of one histogram: seven bars in zone order, threshold line.
preprocess::Image histogram_chart(const ConfigurationHistogram& h, int width = 280, int height = 160);

}  // namespace gazezone::eval
