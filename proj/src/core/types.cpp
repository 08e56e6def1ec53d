#include "gazezone/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gazezone {

namespace {

constexpr std::array<std::string_view, kNumZones> kZoneNames = {
    "Forward", "Right", "Left", "CenterStack", "RearviewMirror", "Speedometer", "EyesClosed",
};

}  // namespace

GazeZone zone_from_ordinal(int ordinal) {
    if (ordinal < 0 || ordinal >= kNumZones) {
        throw Error("gaze zone ordinal out of range: " + std::to_string(ordinal));
    }
    return static_cast<GazeZone>(ordinal);
}

std::string_view zone_name(GazeZone z) { return kZoneNames[ordinal(z)]; }

std::optional<GazeZone> parse_zone(std::string_view name) {
    for (int i = 0; i < kNumZones; ++i) {
        if (kZoneNames[i] == name) return static_cast<GazeZone>(i);
    }
    return std::nullopt;
}

ZoneDistribution::ZoneDistribution() { probs_.fill(1.0 / kNumZones); }

ZoneDistribution::ZoneDistribution(const std::array<double, kNumZones>& probs) : probs_(probs) {
    double sum = 0.0;
    for (double p : probs_) {
        if (!std::isfinite(p) || p < 0.0) throw Error("zone distribution has a negative or non-finite entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw Error("zone distribution sums to " + std::to_string(sum) + ", expected 1");
    }
}

ZoneDistribution ZoneDistribution::from_weights(const std::array<double, kNumZones>& weights) {
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw Error("zone weights must be finite and nonnegative");
        sum += w;
    }
    if (sum <= 0.0) throw Error("zone weights sum to zero");
    std::array<double, kNumZones> p{};
    for (int i = 0; i < kNumZones; ++i) p[i] = weights[i] / sum;
    return ZoneDistribution(p);
}

ZoneDistribution ZoneDistribution::softmax(const std::array<double, kNumZones>& logits) {
    const double hi = *std::max_element(logits.begin(), logits.end());
    if (!std::isfinite(hi)) throw Error("softmax over non-finite logits");
    std::array<double, kNumZones> e{};
    double sum = 0.0;
    for (int i = 0; i < kNumZones; ++i) {
        e[i] = std::exp(logits[i] - hi);
        sum += e[i];
    }
    for (double& v : e) v /= sum;
    return ZoneDistribution(e);
}

GazeZone argmax_zone(const ZoneDistribution& dist) {
    int best = 0;
    for (int i = 1; i < kNumZones; ++i) {
        if (dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(best)]) best = i;
    }
    return static_cast<GazeZone>(best);
}

void LabeledSample::validate() const {
    if (subject_id.empty()) throw Error("sample " + frame_ref + " has an empty subject_id");
    if (drive_id.empty()) throw Error("sample " + frame_ref + " has an empty drive_id");
    if (!(timestamp >= 0.0) || !std::isfinite(timestamp)) {
        throw Error("sample " + frame_ref + " has a negative or non-finite timestamp");
    }
}

}  // namespace gazezone
