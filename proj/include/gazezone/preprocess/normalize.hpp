#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gazezone/preprocess/crop.hpp"
#include "gazezone/preprocess/face_detector.hpp"
#include "gazezone/preprocess/image.hpp"

namespace gazezone::preprocess {

/// Square resolutions used by the published backbones and the high
/// resolution FoV study. Other sizes are accepted for compact models.
inline constexpr std::array<int, 4> kStandardResolutions = {224, 227, 448, 625};

using ChannelMeans = std::array<float, 3>;

/// RGB means of the ImageNet training set on the 0-255 scale.
inline constexpr ChannelMeans kImageNetMeans = {123.68f, 116.779f, 103.939f};

/// Network-ready patch: H x W x 3 interleaved RGB floats, mean subtracted.
struct NetworkInput {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;
    BBox source;
    CropKind strategy = CropKind::HalfFace;

    float at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

/// Crop, bilinear resize to target x target, subtract per-channel means.
NetworkInput normalize(const Image& frame, const BBox& rect, int target, const ChannelMeans& means,
                       CropKind strategy = CropKind::HalfFace);

struct PatchConfig {
    CropKind kind = CropKind::HalfFace;
    double context_expand = kDefaultContextExpand;
    int target = 224;
    ChannelMeans means = kImageNetMeans;
    std::map<std::string, CameraProfile> profile_by_drive;
    /// Profile for frames whose drive is not listed (also used for inference).
    std::optional<CameraProfile> default_profile;
    /// Lossless on-disk crop cache keyed by (frame_ref, strategy, target).
    std::optional<std::filesystem::path> cache_dir;
    /// Keep normalized patches in memory after first use.
    bool memoize = false;
};

/// Frame locator -> NetworkInput, including face detection for the
/// face-based strategies. Thread-safe; detectors that are not share-safe
/// are serialized.
class PatchProvider {
public:
    PatchProvider(PatchConfig config, std::shared_ptr<const FaceDetector> detector);

    /// Throws NoFaceError when a face-based strategy finds no face.
    NetworkInput get(const std::string& frame_ref, const std::string& drive_id = {}) const;
    NetworkInput from_frame(const Frame& frame, const CameraProfile& profile) const;

    const CameraProfile& profile_for(const std::string& drive_id) const;
    const PatchConfig& config() const { return config_; }
    std::size_t cache_hits() const;

private:
    std::optional<std::filesystem::path> cache_path(const std::string& frame_ref) const;

    PatchConfig config_;
    std::shared_ptr<GuardedDetector> detector_;
    mutable std::mutex memo_mutex_;
    mutable std::unordered_map<std::string, std::shared_ptr<const NetworkInput>> memo_;
    mutable std::size_t cache_hits_ = 0;
};

/// Cache directory from GAZEZONE_CACHE_DIR, if set.
std::optional<std::filesystem::path> cache_dir_from_env();

}  // namespace gazezone::preprocess
