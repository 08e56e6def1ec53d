#pragma once

#include <cstdint>
#include <vector>

#include "gazezone/core/types.hpp"

namespace gazezone::dataset {

inline constexpr double kDefaultGapThreshold = 0.5;  // seconds

/// Splits samples into maximal same-zone runs whose consecutive gaps are at
/// most gap_threshold. A drive change also closes an event, so samples must
/// be grouped by drive and time-sorted within each drive; concatenating the
/// returned events reproduces the input exactly.
std::vector<Event> segment_events(const std::vector<LabeledSample>& samples,
                                  double gap_threshold = kDefaultGapThreshold);

struct BalanceOptions {
    int cap_per_zone = 3500;
    int per_event_cap = 1;
    std::uint64_t seed = 0;
    double gap_threshold = kDefaultGapThreshold;
};

/// Sub-samples zones above cap_per_zone. Frames are drawn round-robin over
/// the zone's events (shuffled with the seed), taking at most per_event_cap
/// frames from each event per pass, so the retained frames cover as many
/// distinct events as possible. Zones at or below the cap are kept whole.
/// Output preserves input order.
std::vector<LabeledSample> balance(const std::vector<Event>& events, const BalanceOptions& options);

/// Convenience overload that segments with options.gap_threshold first.
std::vector<LabeledSample> balance(const std::vector<LabeledSample>& samples, const BalanceOptions& options);

}  // namespace gazezone::dataset
