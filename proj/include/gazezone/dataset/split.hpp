#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazezone/core/types.hpp"

namespace gazezone::dataset {

enum class SplitKind { CrossSubject, Temporal };

std::string_view split_kind_name(SplitKind kind);
SplitKind parse_split_kind(std::string_view name);

struct DatasetSplit {
    SplitKind kind = SplitKind::CrossSubject;
    std::vector<LabeledSample> train;
    std::vector<LabeledSample> validation;
    std::vector<LabeledSample> test;
    /// Training frames discarded to keep validation separated in time.
    std::size_t gap_dropped = 0;
    std::vector<std::string> warnings;
};

inline constexpr double kDefaultValidationFraction = 0.05;
inline constexpr double kDefaultValidationGap = 30.0;  // seconds

struct CarveOptions {
    double fraction = kDefaultValidationFraction;
    double time_gap = kDefaultValidationGap;
};

struct CarveResult {
    std::vector<LabeledSample> train;
    std::vector<LabeledSample> validation;
    std::size_t dropped = 0;
};

/// Moves the time-ordered tail of every drive into validation. Validation
/// frames are allotted to drives in proportion to their size (largest
/// remainder), ties in timestamp never straddle the cut, and training frames
/// closer than time_gap to the drive's first validation frame are dropped.
/// Throws DatasetError naming the drive when no training frame survives.
CarveResult carve_validation(const std::vector<LabeledSample>& train, const CarveOptions& options = {});

/// Train/validation come from train_subjects, test from test_subjects; the
/// validation part is carved from the training subjects' frames.
DatasetSplit split_cross_subject(const std::vector<LabeledSample>& samples,
                                 const std::set<std::string>& train_subjects,
                                 const std::set<std::string>& test_subjects,
                                 const CarveOptions& carve = {});

/// Chronological per-drive partition (first 70% / next 15% / last 15% by
/// default). Boundaries move forward past equal timestamps.
DatasetSplit split_temporal(const std::vector<LabeledSample>& samples,
                            const std::array<double, 3>& fractions = {0.70, 0.15, 0.15});

/// Throws DatasetError if any DatasetSplit invariant is violated.
void check_split_invariants(const DatasetSplit& split);

/// Per-zone frame counts, indexed by zone ordinal.
std::array<std::size_t, kNumZones> zone_counts(const std::vector<LabeledSample>& samples);

/// Split plus everything needed to reproduce it.
struct SplitArtifact {
    DatasetSplit split;
    std::uint64_t seed = 0;
    nlohmann::json parameters = nlohmann::json::object();
    std::map<std::string, std::string> camera_profiles;  // drive_id -> camera_profile_id
};

nlohmann::json to_json(const SplitArtifact& artifact);
SplitArtifact split_artifact_from_json(const nlohmann::json& j);
void write_split_artifact(const SplitArtifact& artifact, const std::filesystem::path& path);
SplitArtifact read_split_artifact(const std::filesystem::path& path);

nlohmann::json sample_to_json(const LabeledSample& s);
LabeledSample sample_from_json(const nlohmann::json& j);

}  // namespace gazezone::dataset
