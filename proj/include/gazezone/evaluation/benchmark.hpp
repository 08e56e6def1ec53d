#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazezone/evaluation/reference.hpp"
#include "gazezone/models/gaze_model.hpp"
#include "gazezone/preprocess/image.hpp"
#include "gazezone/preprocess/normalize.hpp"

namespace gazezone::eval {

inline constexpr int kMinBenchmarkIterations = 30;

/// Nearest-rank percentile, q in (0, 100]. Throws on an empty sample.
double percentile(std::span<const double> samples, double q);

struct BenchmarkResult {
    std::string family;
    int resolution = 0;
    int iterations = 0;
    int warmup = 0;
    bool end_to_end = false;
    std::vector<double> samples_ms;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    /// Annotation only; measured on different hardware.
    std::optional<PublishedRuntime> published;

    nlohmann::json to_json() const;
    std::string summary() const;
};

/// Times single-image forward passes on random side x side inputs after
/// `warmup` untimed passes. Throws EvalError when iterations < 30.
BenchmarkResult benchmark_inference(const models::GazeModel& model, int side, int iterations = 100, int warmup = 10,
                                    std::uint64_t seed = 0);

/// Times face detection, cropping, normalisation and the forward pass,
/// cycling through `frames`.
BenchmarkResult benchmark_end_to_end(const models::GazeModel& model, const std::vector<preprocess::Frame>& frames,
                                     const preprocess::PatchProvider& provider,
                                     const preprocess::CameraProfile& profile, int iterations = 100,
                                     int warmup = 10);

}  // namespace gazezone::eval
