#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gazezone/core/types.hpp"
#include "gazezone/preprocess/crop.hpp"
#include "gazezone/preprocess/image.hpp"

namespace gazezone::synth {

/// Generator settings for a toy in-cabin dataset. Every subject gets its
/// own face geometry, skin tone and background; the zone is encoded only
/// by where the pupils sit inside the eyes (lids drawn shut for EyesClosed).
struct SynthOptions {
    int subjects = 10;
    int frames_per_zone = 40;  // per subject
    int width = 160;
    int height = 120;
    double fps = 10.0;
    int min_event = 3;
    int max_event = 8;
    /// Pixel noise on the reported face boxes.
    int box_jitter = 2;
    std::uint64_t seed = 1;
};

struct SynthFrame {
    LabeledSample sample;
    BBox face;
    std::array<BBox, 2> eyes;
};

/// Files under root: frames/<subject>/*.png, manifests/<drive>.csv,
/// boxes.csv (face detections), eyes.csv (eye boxes), profile.json.
struct SynthDataset {
    std::filesystem::path root;
    std::vector<std::string> subjects;
    std::vector<SynthFrame> frames;
    std::vector<std::filesystem::path> manifests;
    std::filesystem::path boxes_csv;
    std::filesystem::path eyes_csv;
    std::filesystem::path profile_json;
    preprocess::CameraProfile profile;
};

SynthDataset generate(const SynthOptions& options, const std::filesystem::path& root);

/// Renders one frame without touching the disk.
preprocess::Image render(const SynthOptions& options, int subject, GazeZone zone, std::uint64_t frame_seed,
                         BBox* face = nullptr, std::array<BBox, 2>* eyes = nullptr);

/// eyes.csv rows keyed by absolute, normalised frame path.
std::map<std::string, std::array<BBox, 2>> read_eye_boxes(const std::filesystem::path& csv);

}  // namespace gazezone::synth
