#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gazezone {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The seven in-cabin gaze zones. Ordinals follow the row order of the
/// confusion matrices produced by the evaluation module and must not change.
enum class GazeZone : int {
    Forward = 0,
    Right = 1,
    Left = 2,
    CenterStack = 3,
    RearviewMirror = 4,
    Speedometer = 5,
    EyesClosed = 6,
};

inline constexpr int kNumZones = 7;

inline constexpr std::array<GazeZone, kNumZones> kAllZones = {
    GazeZone::Forward,     GazeZone::Right,          GazeZone::Left,
    GazeZone::CenterStack, GazeZone::RearviewMirror, GazeZone::Speedometer,
    GazeZone::EyesClosed,
};

constexpr int ordinal(GazeZone z) { return static_cast<int>(z); }

/// Throws Error for ordinals outside [0, 6].
GazeZone zone_from_ordinal(int ordinal);

std::string_view zone_name(GazeZone z);

/// Exact, case-sensitive match against the names used in reports.
std::optional<GazeZone> parse_zone(std::string_view name);

/// Seven nonnegative probabilities summing to one (within 1e-6).
class ZoneDistribution {
public:
    /// Uniform distribution.
    ZoneDistribution();

    /// Validates nonnegativity, finiteness and unit sum.
    explicit ZoneDistribution(const std::array<double, kNumZones>& probs);

    /// Normalizes nonnegative weights that sum to a positive value.
    static ZoneDistribution from_weights(const std::array<double, kNumZones>& weights);

    /// Numerically stable softmax.
    static ZoneDistribution softmax(const std::array<double, kNumZones>& logits);

    double operator[](GazeZone z) const { return probs_[ordinal(z)]; }
    double operator[](std::size_t i) const { return probs_[i]; }
    const std::array<double, kNumZones>& probs() const { return probs_; }

private:
    std::array<double, kNumZones> probs_;
};

/// Zone of maximal probability, ties resolved towards the lowest ordinal.
GazeZone argmax_zone(const ZoneDistribution& dist);

struct LabeledSample {
    std::string frame_ref;
    std::string subject_id;
    std::string drive_id;
    double timestamp = 0.0;
    GazeZone zone = GazeZone::Forward;

    /// Throws Error when timestamp < 0 or an id is empty.
    void validate() const;

    bool operator==(const LabeledSample&) const = default;
};

/// Axis-aligned pixel rectangle; (x, y) is the top-left corner.
struct BBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int right() const { return x + w; }
    int bottom() const { return y + h; }
    long long area() const { return static_cast<long long>(w) * h; }
    bool empty() const { return w <= 0 || h <= 0; }
    bool inside(int frame_w, int frame_h) const {
        return x >= 0 && y >= 0 && w > 0 && h > 0 && right() <= frame_w && bottom() <= frame_h;
    }
    bool contains(const BBox& o) const {
        return o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom();
    }
    bool operator==(const BBox&) const = default;
};

/// A maximal run of samples fixating a single zone within one drive.
struct Event {
    std::string drive_id;
    GazeZone zone = GazeZone::Forward;
    std::vector<LabeledSample> samples;

    double start() const { return samples.empty() ? 0.0 : samples.front().timestamp; }
    double end() const { return samples.empty() ? 0.0 : samples.back().timestamp; }
};

}  // namespace gazezone
