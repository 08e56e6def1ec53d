#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "gazezone/preprocess/crop.hpp"
#include "gazezone/preprocess/image.hpp"

namespace gazezone::preprocess {

/// Raised when no face is found. Training skips such frames; inference
/// surfaces it to the caller.
class NoFaceError : public Error {
public:
    using Error::Error;
};

struct Detection {
    BBox box;
    double score = 1.0;
};

/// Injected face detector. Implementations report whether detect() may be
/// called concurrently; callers serialize the ones that cannot.
class FaceDetector {
public:
    virtual ~FaceDetector() = default;
    virtual std::vector<Detection> detect(const Frame& frame) const = 0;
    virtual bool share_safe() const { return true; }
};

/// Adapts any callable.
class CallableDetector final : public FaceDetector {
public:
    using Fn = std::function<std::vector<Detection>(const Frame&)>;
    explicit CallableDetector(Fn fn, bool share_safe = true) : fn_(std::move(fn)), share_safe_(share_safe) {}
    std::vector<Detection> detect(const Frame& frame) const override { return fn_(frame); }
    bool share_safe() const override { return share_safe_; }

private:
    Fn fn_;
    bool share_safe_;
};

/// Detections precomputed by an external detector, read from a CSV with rows
/// `frame_path,x,y,w,h,score` (paths relative to the CSV's directory).
class BoxFileDetector final : public FaceDetector {
public:
    explicit BoxFileDetector(const std::filesystem::path& csv);
    std::vector<Detection> detect(const Frame& frame) const override;
    std::size_t frame_count() const { return boxes_.size(); }

private:
    std::unordered_map<std::string, std::vector<Detection>> boxes_;
};

/// OpenCV Haar/LBP cascade loaded from a user-supplied model file.
class CascadeFaceDetector final : public FaceDetector {
public:
    explicit CascadeFaceDetector(const std::filesystem::path& model, int min_face = 24);
    ~CascadeFaceDetector() override;
    std::vector<Detection> detect(const Frame& frame) const override;
    bool share_safe() const override { return false; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Serializes detect() calls on detectors that are not share-safe.
class GuardedDetector {
public:
    explicit GuardedDetector(std::shared_ptr<const FaceDetector> detector) : detector_(std::move(detector)) {}
    std::vector<Detection> detect(const Frame& frame) const;
    const FaceDetector& inner() const { return *detector_; }

private:
    std::shared_ptr<const FaceDetector> detector_;
    mutable std::mutex mutex_;
};

/// Picks the detection whose centre lies nearest the profile's
/// driver_side_anchor. Throws NoFaceError when nothing is detected.
BBox detect_driver_face(const Frame& frame, const CameraProfile& profile, const FaceDetector& detector);
BBox detect_driver_face(const Frame& frame, const CameraProfile& profile, const GuardedDetector& detector);

/// Nearest-to-anchor choice on an explicit detection list.
BBox pick_driver_face(const std::vector<Detection>& detections, int frame_width, int frame_height,
                      const std::array<double, 2>& anchor);

/// Builds a detector from a spec string: `boxes:<csv>` or `cascade:<model>`.
std::shared_ptr<const FaceDetector> make_detector(const std::string& spec);

}  // namespace gazezone::preprocess
