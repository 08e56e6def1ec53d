#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "gazezone/core/types.hpp"

namespace gazezone::preprocess {

class CropError : public Error {
public:
    using Error::Error;
};

/// Rectangle in frame-relative units: x, y, w, h all in [0, 1].
struct FracRect {
    double x = 0.0;
    double y = 0.0;
    double w = 1.0;
    double h = 1.0;

    bool valid() const;
};

/// Per-car calibration. The Face-embedded FoV rectangle and the point used
/// to pick the driver's face both depend on camera placement.
struct CameraProfile {
    std::string profile_id;
    int frame_width = 0;
    int frame_height = 0;
    FracRect fov_rect;
    std::array<double, 2> driver_side_anchor = {0.5, 0.5};

    void validate() const;
};

CameraProfile camera_profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CameraProfile& profile);
CameraProfile read_camera_profile(const std::filesystem::path& path);
void write_camera_profile(const CameraProfile& profile, const std::filesystem::path& path);

enum class CropKind { HalfFace, Face, FaceContext, FaceEmbeddedFoV };

inline constexpr std::array<CropKind, 4> kAllCropKinds = {CropKind::HalfFace, CropKind::Face, CropKind::FaceContext,
                                                          CropKind::FaceEmbeddedFoV};

std::string_view crop_kind_name(CropKind kind);
/// Throws CropError listing the valid names.
CropKind parse_crop_kind(std::string_view name);

inline constexpr double kDefaultContextExpand = 0.5;

struct CropStrategy {
    CropKind kind = CropKind::HalfFace;
    double context_expand = kDefaultContextExpand;  // FaceContext only, per side
    FracRect fov_rect;                              // FaceEmbeddedFoV only

    bool needs_face() const { return kind != CropKind::FaceEmbeddedFoV; }
    void validate() const;

    /// Strategy with the profile's FoV rectangle filled in.
    static CropStrategy for_profile(CropKind kind, const CameraProfile& profile,
                                    double context_expand = kDefaultContextExpand);
};

/// Pixel rectangle for a strategy. Face-based strategies require a face box;
/// the result always lies inside the frame. FaceContext boxes that cross a
/// border are shifted back inside (keeping their size where the frame
/// allows) rather than cut.
BBox resolve_crop(int frame_width, int frame_height, const std::optional<BBox>& face, const CropStrategy& strategy);

}  // namespace gazezone::preprocess
