#include "gazezone/preprocess/normalize.hpp"

#include <cstdlib>
#include <fstream>

#include "gazezone/core/hash.hpp"

namespace gazezone::preprocess {

namespace {

NetworkInput finish(const Image& patch, const BBox& source, int target, const ChannelMeans& means, CropKind kind) {
    std::vector<float> raw(patch.rgb.begin(), patch.rgb.end());
    NetworkInput out;
    out.height = target;
    out.width = target;
    out.source = source;
    out.strategy = kind;
    out.pixels = resize_bilinear(raw, patch.width, patch.height, 3, target, target);
    for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
        out.pixels[i] -= means[0];
        out.pixels[i + 1] -= means[1];
        out.pixels[i + 2] -= means[2];
    }
    return out;
}

}  // namespace

NetworkInput normalize(const Image& frame, const BBox& rect, int target, const ChannelMeans& means,
                       CropKind strategy) {
    if (target <= 0) throw CropError("target resolution must be positive");
    if (rect.empty()) throw CropError("degenerate crop rectangle (zero area)");
    if (!rect.inside(frame.width, frame.height)) throw CropError("crop rectangle lies outside the frame");
    return finish(crop(frame, rect), rect, target, means, strategy);
}

std::optional<std::filesystem::path> cache_dir_from_env() {
    if (const char* v = std::getenv("GAZEZONE_CACHE_DIR"); v && *v) return std::filesystem::path(v);
    return std::nullopt;
}

PatchProvider::PatchProvider(PatchConfig config, std::shared_ptr<const FaceDetector> detector)
    : config_(std::move(config)) {
    if (config_.target <= 0) throw CropError("target resolution must be positive");
    if (detector) detector_ = std::make_shared<GuardedDetector>(std::move(detector));
}

const CameraProfile& PatchProvider::profile_for(const std::string& drive_id) const {
    if (const auto it = config_.profile_by_drive.find(drive_id); it != config_.profile_by_drive.end()) {
        return it->second;
    }
    if (config_.default_profile) return *config_.default_profile;
    throw CropError("no camera profile for drive '" + drive_id + "'");
}

std::size_t PatchProvider::cache_hits() const {
    std::lock_guard lock(memo_mutex_);
    return cache_hits_;
}

std::optional<std::filesystem::path> PatchProvider::cache_path(const std::string& frame_ref) const {
    if (!config_.cache_dir) return std::nullopt;
    const std::string key = frame_ref + "|" + std::string(crop_kind_name(config_.kind)) + "|" +
                            std::to_string(config_.context_expand) + "|" + std::to_string(config_.target);
    const std::string h = sha256_hex(key);
    return *config_.cache_dir / h.substr(0, 2) / (h + ".png");
}

NetworkInput PatchProvider::from_frame(const Frame& frame, const CameraProfile& profile) const {
    const auto strategy = CropStrategy::for_profile(config_.kind, profile, config_.context_expand);
    std::optional<BBox> face;
    if (strategy.needs_face()) {
        if (!detector_) throw NoFaceError("strategy " + std::string(crop_kind_name(config_.kind)) +
                                          " needs a face detector");
        face = detect_driver_face(frame, profile, *detector_);
    }
    const BBox rect = resolve_crop(frame.image.width, frame.image.height, face, strategy);
    return normalize(frame.image, rect, config_.target, config_.means, config_.kind);
}

NetworkInput PatchProvider::get(const std::string& frame_ref, const std::string& drive_id) const {
    if (config_.memoize) {
        std::lock_guard lock(memo_mutex_);
        if (const auto it = memo_.find(frame_ref); it != memo_.end()) {
            ++cache_hits_;
            return *it->second;
        }
    }

    NetworkInput out;
    const auto cached = cache_path(frame_ref);
    if (cached && std::filesystem::exists(*cached)) {
        // Sidecar holds the source rectangle; the PNG is the lossless crop.
        std::ifstream side(cached->string() + ".rect");
        BBox rect;
        if (side >> rect.x >> rect.y >> rect.w >> rect.h) {
            const Image patch = load_image(*cached);
            out = finish(patch, rect, config_.target, config_.means, config_.kind);
            std::lock_guard lock(memo_mutex_);
            ++cache_hits_;
        }
    }
    if (out.pixels.empty()) {
        const Frame frame = load_frame(frame_ref);
        out = from_frame(frame, profile_for(drive_id));
        if (cached) {
            save_image(crop(frame.image, out.source), *cached);
            std::ofstream side(cached->string() + ".rect");
            side << out.source.x << ' ' << out.source.y << ' ' << out.source.w << ' ' << out.source.h << '\n';
        }
    }

    if (config_.memoize) {
        std::lock_guard lock(memo_mutex_);
        memo_.emplace(frame_ref, std::make_shared<const NetworkInput>(out));
    }
    return out;
}

}  // namespace gazezone::preprocess
