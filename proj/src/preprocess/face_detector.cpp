#include "gazezone/preprocess/face_detector.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <opencv2/imgproc.hpp>
#include <opencv2/objdetect.hpp>

namespace gazezone::preprocess {

BoxFileDetector::BoxFileDetector(const std::filesystem::path& csv) {
    std::ifstream in(csv);
    if (!in) throw Error("cannot open face box file " + csv.string());
    const auto base = csv.parent_path();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#' || line.rfind("frame_path,", 0) == 0) continue;
        std::istringstream fields(line);
        std::string path, tok;
        std::getline(fields, path, ',');
        double v[5] = {0, 0, 0, 0, 1.0};
        int n = 0;
        while (n < 5 && std::getline(fields, tok, ',')) {
            try {
                v[n++] = std::stod(tok);
            } catch (const std::exception&) {
                throw Error(csv.string() + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
            }
        }
        if (n < 4) throw Error(csv.string() + ":" + std::to_string(lineno) + ": expected frame_path,x,y,w,h[,score]");
        std::filesystem::path p = path;
        if (p.is_relative()) p = base / p;
        Detection d{{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), static_cast<int>(v[3])},
                    v[4]};
        boxes_[std::filesystem::absolute(p).lexically_normal().string()].push_back(d);
    }
}

std::vector<Detection> BoxFileDetector::detect(const Frame& frame) const {
    const auto key = std::filesystem::absolute(frame.ref).lexically_normal().string();
    const auto it = boxes_.find(key);
    return it == boxes_.end() ? std::vector<Detection>{} : it->second;
}

struct CascadeFaceDetector::Impl {
    cv::CascadeClassifier cascade;
    int min_face = 24;
};

CascadeFaceDetector::CascadeFaceDetector(const std::filesystem::path& model, int min_face)
    : impl_(std::make_unique<Impl>()) {
    impl_->min_face = min_face;
    if (!std::filesystem::exists(model) || !impl_->cascade.load(model.string())) {
        throw Error("cannot load cascade model " + model.string());
    }
}

CascadeFaceDetector::~CascadeFaceDetector() = default;

std::vector<Detection> CascadeFaceDetector::detect(const Frame& frame) const {
    const auto& img = frame.image;
    cv::Mat rgb(img.height, img.width, CV_8UC3, const_cast<std::uint8_t*>(img.rgb.data()));
    cv::Mat gray;
    cv::cvtColor(rgb, gray, cv::COLOR_RGB2GRAY);
    cv::equalizeHist(gray, gray);
    std::vector<cv::Rect> rects;
    std::vector<int> levels;
    std::vector<double> weights;
    impl_->cascade.detectMultiScale(gray, rects, levels, weights, 1.1, 3, 0,
                                    cv::Size(impl_->min_face, impl_->min_face), cv::Size(), true);
    std::vector<Detection> out;
    for (std::size_t i = 0; i < rects.size(); ++i) {
        out.push_back({{rects[i].x, rects[i].y, rects[i].width, rects[i].height},
                       i < weights.size() ? weights[i] : 1.0});
    }
    return out;
}

std::vector<Detection> GuardedDetector::detect(const Frame& frame) const {
    if (detector_->share_safe()) return detector_->detect(frame);
    std::lock_guard lock(mutex_);
    return detector_->detect(frame);
}

BBox pick_driver_face(const std::vector<Detection>& detections, int frame_width, int frame_height,
                      const std::array<double, 2>& anchor) {
    if (detections.empty()) throw NoFaceError("no face detected");
    const double ax = anchor[0] * frame_width;
    const double ay = anchor[1] * frame_height;
    const Detection* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& d : detections) {
        const double cx = d.box.x + d.box.w / 2.0;
        const double cy = d.box.y + d.box.h / 2.0;
        const double dist = std::hypot(cx - ax, cy - ay);
        if (dist < best_d) {
            best_d = dist;
            best = &d;
        }
    }
    return best->box;
}

BBox detect_driver_face(const Frame& frame, const CameraProfile& profile, const FaceDetector& detector) {
    auto dets = detector.detect(frame);
    if (dets.empty()) throw NoFaceError("no face detected in " + frame.ref);
    return pick_driver_face(dets, frame.image.width, frame.image.height, profile.driver_side_anchor);
}

BBox detect_driver_face(const Frame& frame, const CameraProfile& profile, const GuardedDetector& detector) {
    auto dets = detector.detect(frame);
    if (dets.empty()) throw NoFaceError("no face detected in " + frame.ref);
    return pick_driver_face(dets, frame.image.width, frame.image.height, profile.driver_side_anchor);
}

std::shared_ptr<const FaceDetector> make_detector(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
    if (kind == "boxes" && !arg.empty()) return std::make_shared<BoxFileDetector>(arg);
    if (kind == "cascade" && !arg.empty()) return std::make_shared<CascadeFaceDetector>(arg);
    throw Error("unknown detector spec '" + spec + "' (expected boxes:<csv> or cascade:<model>)");
}

}  // namespace gazezone::preprocess
