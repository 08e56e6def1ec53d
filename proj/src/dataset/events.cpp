#include "gazezone/dataset/events.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <random>

#include "gazezone/dataset/manifest.hpp"

namespace gazezone::dataset {

std::vector<Event> segment_events(const std::vector<LabeledSample>& samples, double gap_threshold) {
    if (gap_threshold < 0.0) throw DatasetError("gap_threshold must be nonnegative");
    std::vector<Event> events;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        bool start_new = events.empty();
        if (!start_new) {
            const auto& prev = events.back().samples.back();
            if (prev.drive_id != s.drive_id) {
                start_new = true;
            } else {
                if (s.timestamp < prev.timestamp) {
                    throw DatasetError("drive " + s.drive_id + ": samples are not time-sorted at " + s.frame_ref);
                }
                start_new = prev.zone != s.zone || s.timestamp - prev.timestamp > gap_threshold;
            }
        }
        if (start_new) events.push_back(Event{s.drive_id, s.zone, {}});
        events.back().samples.push_back(s);
    }
    return events;
}

std::vector<LabeledSample> balance(const std::vector<Event>& events, const BalanceOptions& options) {
    if (options.cap_per_zone < 0) throw DatasetError("cap_per_zone must be nonnegative");
    if (options.per_event_cap < 1) throw DatasetError("per_event_cap must be at least 1");

    std::vector<std::vector<bool>> keep(events.size());
    std::array<std::vector<std::size_t>, kNumZones> by_zone;
    std::array<std::size_t, kNumZones> totals{};
    for (std::size_t e = 0; e < events.size(); ++e) {
        keep[e].assign(events[e].samples.size(), true);
        by_zone[ordinal(events[e].zone)].push_back(e);
        totals[ordinal(events[e].zone)] += events[e].samples.size();
    }

    const auto cap = static_cast<std::size_t>(options.cap_per_zone);
    for (int z = 0; z < kNumZones; ++z) {
        if (totals[z] <= cap) continue;

        // Independent stream per zone so zones do not perturb each other.
        std::mt19937_64 rng(options.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(z) + 1);
        auto order = by_zone[z];
        std::shuffle(order.begin(), order.end(), rng);

        std::vector<std::vector<std::size_t>> picks(order.size());
        for (std::size_t k = 0; k < order.size(); ++k) {
            const std::size_t e = order[k];
            keep[e].assign(events[e].samples.size(), false);
            picks[k].resize(events[e].samples.size());
            std::iota(picks[k].begin(), picks[k].end(), 0);
            std::shuffle(picks[k].begin(), picks[k].end(), rng);
        }

        std::vector<std::size_t> cursor(order.size(), 0);
        std::size_t selected = 0;
        bool progress = true;
        while (selected < cap && progress) {
            progress = false;
            for (std::size_t k = 0; k < order.size() && selected < cap; ++k) {
                const std::size_t e = order[k];
                const std::size_t avail = picks[k].size() - cursor[k];
                const std::size_t take =
                    std::min({static_cast<std::size_t>(options.per_event_cap), avail, cap - selected});
                for (std::size_t t = 0; t < take; ++t) keep[e][picks[k][cursor[k]++]] = true;
                selected += take;
                progress = progress || take > 0;
            }
        }
    }

    std::vector<LabeledSample> out;
    for (std::size_t e = 0; e < events.size(); ++e) {
        for (std::size_t i = 0; i < events[e].samples.size(); ++i) {
            if (keep[e][i]) out.push_back(events[e].samples[i]);
        }
    }
    return out;
}

std::vector<LabeledSample> balance(const std::vector<LabeledSample>& samples, const BalanceOptions& options) {
    return balance(segment_events(samples, options.gap_threshold), options);
}

}  // namespace gazezone::dataset
