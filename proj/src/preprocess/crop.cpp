#include "gazezone/preprocess/crop.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace gazezone::preprocess {

namespace {

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

BBox intersect_frame(const BBox& b, int fw, int fh) {
    const int x0 = std::max(b.x, 0);
    const int y0 = std::max(b.y, 0);
    const int x1 = std::min(b.right(), fw);
    const int y1 = std::min(b.bottom(), fh);
    return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

/// Shift [pos, pos + len) inside [0, limit); shrink only if it cannot fit.
void shift_inside(int& pos, int& len, int limit) {
    if (len >= limit) {
        pos = 0;
        len = limit;
        return;
    }
    pos = std::clamp(pos, 0, limit - len);
}

}  // namespace

bool FracRect::valid() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    return unit(x) && unit(y) && w > 0.0 && h > 0.0 && x + w <= 1.0 + 1e-9 && y + h <= 1.0 + 1e-9;
}

void CameraProfile::validate() const {
    if (profile_id.empty()) throw CropError("camera profile needs a profile_id");
    if (frame_width <= 0 || frame_height <= 0) throw CropError("camera profile " + profile_id + ": bad frame size");
    if (!fov_rect.valid()) throw CropError("camera profile " + profile_id + ": fov_rect must lie in the unit square");
    for (double a : driver_side_anchor) {
        if (a < 0.0 || a > 1.0) throw CropError("camera profile " + profile_id + ": anchor outside the unit square");
    }
}

CameraProfile camera_profile_from_json(const nlohmann::json& j) {
    CameraProfile p;
    p.profile_id = j.at("profile_id").get<std::string>();
    p.frame_width = j.at("frame_width").get<int>();
    p.frame_height = j.at("frame_height").get<int>();
    const auto r = j.at("fov_rect").get<std::array<double, 4>>();
    p.fov_rect = {r[0], r[1], r[2], r[3]};
    p.driver_side_anchor = j.at("driver_side_anchor").get<std::array<double, 2>>();
    p.validate();
    return p;
}

nlohmann::json to_json(const CameraProfile& p) {
    return {{"profile_id", p.profile_id},
            {"frame_width", p.frame_width},
            {"frame_height", p.frame_height},
            {"fov_rect", {p.fov_rect.x, p.fov_rect.y, p.fov_rect.w, p.fov_rect.h}},
            {"driver_side_anchor", p.driver_side_anchor}};
}

CameraProfile read_camera_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CropError("cannot open camera profile " + path.string());
    return camera_profile_from_json(nlohmann::json::parse(in));
}

void write_camera_profile(const CameraProfile& profile, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw CropError("cannot write camera profile " + path.string());
    out << to_json(profile).dump(2) << '\n';
}

std::string_view crop_kind_name(CropKind kind) {
    switch (kind) {
        case CropKind::HalfFace: return "HalfFace";
        case CropKind::Face: return "Face";
        case CropKind::FaceContext: return "FaceContext";
        case CropKind::FaceEmbeddedFoV: return "FaceEmbeddedFoV";
    }
    return "?";
}

CropKind parse_crop_kind(std::string_view name) {
    for (auto k : kAllCropKinds) {
        if (crop_kind_name(k) == name) return k;
    }
    throw CropError("unknown crop strategy '" + std::string(name) +
                    "' (valid: HalfFace, Face, FaceContext, FaceEmbeddedFoV)");
}

void CropStrategy::validate() const {
    if (!(context_expand >= 0.0)) throw CropError("context_expand must be nonnegative");
    if (kind == CropKind::FaceEmbeddedFoV && !fov_rect.valid()) {
        throw CropError("fov_rect must lie in the unit square with positive area");
    }
}

CropStrategy CropStrategy::for_profile(CropKind kind, const CameraProfile& profile, double context_expand) {
    CropStrategy s;
    s.kind = kind;
    s.context_expand = context_expand;
    s.fov_rect = profile.fov_rect;
    s.validate();
    return s;
}

BBox resolve_crop(int frame_width, int frame_height, const std::optional<BBox>& face, const CropStrategy& strategy) {
    if (frame_width <= 0 || frame_height <= 0) throw CropError("frame size must be positive");
    strategy.validate();

    if (strategy.kind == CropKind::FaceEmbeddedFoV) {
        const auto& r = strategy.fov_rect;
        const int x0 = round_half_up(r.x * frame_width);
        const int y0 = round_half_up(r.y * frame_height);
        const int x1 = round_half_up((r.x + r.w) * frame_width);
        const int y1 = round_half_up((r.y + r.h) * frame_height);
        const BBox box = intersect_frame({x0, y0, x1 - x0, y1 - y0}, frame_width, frame_height);
        if (box.empty()) throw CropError("FoV rectangle collapses to an empty crop");
        return box;
    }

    if (!face) {
        throw CropError(std::string("crop strategy ") + std::string(crop_kind_name(strategy.kind)) +
                        " requires a face box");
    }
    const BBox f = intersect_frame(*face, frame_width, frame_height);
    if (f.empty()) throw CropError("face box lies outside the frame");

    switch (strategy.kind) {
        case CropKind::Face: return f;
        case CropKind::HalfFace: return {f.x, f.y, f.w, std::max(1, f.h / 2)};
        case CropKind::FaceContext: {
            const int ex = round_half_up(strategy.context_expand * f.w);
            const int ey = round_half_up(strategy.context_expand * f.h);
            BBox b{f.x - ex, f.y - ey, f.w + 2 * ex, f.h + 2 * ey};
            shift_inside(b.x, b.w, frame_width);
            shift_inside(b.y, b.h, frame_height);
            return b;
        }
        case CropKind::FaceEmbeddedFoV: break;
    }
    throw CropError("unhandled crop strategy");
}

}  // namespace gazezone::preprocess
