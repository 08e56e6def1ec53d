#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazezone/core/types.hpp"
#include "gazezone/models/gaze_model.hpp"
#include "gazezone/preprocess/image.hpp"
#include "gazezone/preprocess/normalize.hpp"

namespace gazezone::cam {

class CamError : public Error {
public:
    using Error::Error;
};

/// The seven class maps of one forward pass at final-conv resolution.
struct CamStack {
    int height = 0;
    int width = 0;
    /// kNumZones maps, row-major height x width each.
    std::array<std::vector<float>, kNumZones> maps;
    std::array<double, kNumZones> logits{};
    GazeZone predicted = GazeZone::Forward;
    std::string source;

    std::span<const float> map(GazeZone z) const { return maps[ordinal(z)]; }
    double spatial_mean(GazeZone z) const;
};

/// Throws CamError for models without a global-average-pooled conv head.
CamStack extract_cams(const models::GazeModel& model, const preprocess::NetworkInput& input, std::string source = {});

/// Min-max scaling to [0, 1]; a constant map becomes 0.5 everywhere.
std::vector<float> normalize_map(std::span<const float> map);

/// Bilinear resize of a single-channel map.
std::vector<float> upsample(std::span<const float> map, int width, int height, int out_width, int out_height);

/// Jet colormap, v in [0, 1] -> RGB.
std::array<std::uint8_t, 3> jet(float v);

inline constexpr double kDefaultAlpha = 0.5;

/// Normalises, upsamples to the source size, colours and alpha-blends.
preprocess::Image render_overlay(std::span<const float> map, int width, int height, const preprocess::Image& source,
                                 double alpha = kDefaultAlpha);
preprocess::Image render_overlay(const CamStack& cams, GazeZone zone, const preprocess::Image& source,
                                 double alpha = kDefaultAlpha);

/// Undoes mean subtraction to recover the patch the network saw.
preprocess::Image patch_image(const preprocess::NetworkInput& input,
                              const preprocess::ChannelMeans& means = preprocess::kImageNetMeans);

/// <dir>/<stem>_<zone>.png for each zone plus <stem>.json with logits and prediction.
nlohmann::json export_overlays(const CamStack& cams, const preprocess::Image& source, const std::filesystem::path& dir,
                               const std::string& stem, double alpha = kDefaultAlpha);

/// Sheet of equally sized cells (rows x columns) separated by pad pixels.
preprocess::Image grid_sheet(const std::vector<std::vector<preprocess::Image>>& rows, int cell_size, int pad = 2);

/// IoU between the top `top_fraction` of the upsampled map and the union of
/// `mask` boxes, both on a width x height canvas.
double hotspot_iou(std::span<const float> map, int map_width, int map_height, int width, int height,
                   const std::vector<BBox>& mask, double top_fraction = 0.1);

}  // namespace gazezone::cam
