#include "gazezone/dataset/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "gazezone/dataset/manifest.hpp"

namespace gazezone::dataset {

namespace {

long long round_half_up(double v) { return static_cast<long long>(std::floor(v + 0.5)); }

/// Groups sample indices by drive in first-appearance order, each group
/// stably sorted by timestamp.
std::vector<std::pair<std::string, std::vector<std::size_t>>> group_by_drive(
    const std::vector<LabeledSample>& samples) {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto [it, inserted] = slot.try_emplace(samples[i].drive_id, groups.size());
        if (inserted) groups.emplace_back(samples[i].drive_id, std::vector<std::size_t>{});
        groups[it->second].second.push_back(i);
    }
    for (auto& [drive, idx] : groups) {
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return samples[a].timestamp < samples[b].timestamp; });
    }
    return groups;
}

/// Advances cut past any samples tied with the sample just before it.
std::size_t untie(const std::vector<LabeledSample>& samples, const std::vector<std::size_t>& idx, std::size_t cut) {
    while (cut > 0 && cut < idx.size() && samples[idx[cut]].timestamp <= samples[idx[cut - 1]].timestamp) ++cut;
    return cut;
}

}  // namespace

std::string_view split_kind_name(SplitKind kind) {
    return kind == SplitKind::CrossSubject ? "cross_subject" : "temporal";
}

SplitKind parse_split_kind(std::string_view name) {
    if (name == "cross_subject") return SplitKind::CrossSubject;
    if (name == "temporal") return SplitKind::Temporal;
    throw DatasetError("unknown split kind '" + std::string(name) + "'");
}

CarveResult carve_validation(const std::vector<LabeledSample>& train, const CarveOptions& options) {
    if (!(options.fraction >= 0.0 && options.fraction < 1.0)) {
        throw DatasetError("validation fraction must lie in [0, 1)");
    }
    if (options.time_gap < 0.0) throw DatasetError("validation time gap must be nonnegative");

    CarveResult result;
    if (options.fraction == 0.0 || train.empty()) {
        result.train = train;
        return result;
    }

    const auto groups = group_by_drive(train);
    const auto total = static_cast<long long>(train.size());
    const long long wanted = round_half_up(options.fraction * static_cast<double>(total));

    // Largest-remainder allotment of the validation budget across drives.
    std::vector<long long> quota(groups.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    long long assigned = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double exact = static_cast<double>(wanted) * static_cast<double>(groups[g].second.size()) /
                             static_cast<double>(total);
        quota[g] = static_cast<long long>(std::floor(exact));
        assigned += quota[g];
        remainders.emplace_back(exact - std::floor(exact), g);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < wanted && k < remainders.size(); ++k, ++assigned) {
        ++quota[remainders[k].second];
    }

    std::vector<char> role(train.size(), 't');  // t = train, v = validation, d = dropped
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& [drive, idx] = groups[g];
        if (quota[g] == 0) continue;
        const auto n = idx.size();
        // Walk the cut backwards until it no longer splits tied timestamps.
        std::size_t cut = n - static_cast<std::size_t>(std::min<long long>(quota[g], static_cast<long long>(n)));
        while (cut > 0 && cut < n && train[idx[cut]].timestamp <= train[idx[cut - 1]].timestamp) --cut;
        const double first_val = train[idx[cut]].timestamp;
        std::size_t kept = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k >= cut) {
                role[idx[k]] = 'v';
            } else if (first_val - train[idx[k]].timestamp >= options.time_gap) {
                ++kept;
            } else {
                role[idx[k]] = 'd';
            }
        }
        if (kept == 0) {
            throw DatasetError("drive " + drive + ": cannot carve a validation tail separated by " +
                               std::to_string(options.time_gap) + " s; no training frames would remain");
        }
    }

    for (std::size_t i = 0; i < train.size(); ++i) {
        if (role[i] == 't') result.train.push_back(train[i]);
        else if (role[i] == 'v') result.validation.push_back(train[i]);
        else ++result.dropped;
    }
    return result;
}

DatasetSplit split_cross_subject(const std::vector<LabeledSample>& samples,
                                 const std::set<std::string>& train_subjects,
                                 const std::set<std::string>& test_subjects, const CarveOptions& carve) {
    std::vector<std::string> overlap;
    std::set_intersection(train_subjects.begin(), train_subjects.end(), test_subjects.begin(), test_subjects.end(),
                          std::back_inserter(overlap));
    if (!overlap.empty()) {
        std::string msg = "train and test subject sets overlap:";
        for (const auto& s : overlap) msg += " " + s;
        throw DatasetError(msg);
    }

    DatasetSplit split;
    split.kind = SplitKind::CrossSubject;
    std::vector<LabeledSample> train_pool;
    for (const auto& s : samples) {
        if (train_subjects.count(s.subject_id)) {
            train_pool.push_back(s);
        } else if (test_subjects.count(s.subject_id)) {
            split.test.push_back(s);
        } else {
            throw DatasetError("subject " + s.subject_id + " is in neither the train nor the test set");
        }
    }
    if (train_pool.empty()) split.warnings.push_back("training partition is empty");
    if (split.test.empty()) split.warnings.push_back("test partition is empty");

    auto carved = carve_validation(train_pool, carve);
    split.train = std::move(carved.train);
    split.validation = std::move(carved.validation);
    split.gap_dropped = carved.dropped;
    return split;
}

DatasetSplit split_temporal(const std::vector<LabeledSample>& samples, const std::array<double, 3>& fractions) {
    for (double f : fractions) {
        if (!(f > 0.0)) throw DatasetError("temporal split fractions must be positive");
    }
    const double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(sum - 1.0) > 1e-9) {
        throw DatasetError("temporal split fractions sum to " + std::to_string(sum) + ", expected 1");
    }

    DatasetSplit split;
    split.kind = SplitKind::Temporal;
    for (const auto& [drive, idx] : group_by_drive(samples)) {
        const auto n = static_cast<double>(idx.size());
        auto c1 = static_cast<std::size_t>(std::min<long long>(round_half_up(fractions[0] * n), idx.size()));
        auto c2 = static_cast<std::size_t>(
            std::min<long long>(round_half_up((fractions[0] + fractions[1]) * n), idx.size()));
        c1 = untie(samples, idx, c1);
        c2 = untie(samples, idx, std::max(c1, c2));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            auto& dst = k < c1 ? split.train : (k < c2 ? split.validation : split.test);
            dst.push_back(samples[idx[k]]);
        }
    }
    return split;
}

void check_split_invariants(const DatasetSplit& split) {
    std::unordered_map<std::string, int> owner;
    const std::array<const std::vector<LabeledSample>*, 3> parts = {&split.train, &split.validation, &split.test};
    for (int p = 0; p < 3; ++p) {
        for (const auto& s : *parts[p]) {
            auto [it, inserted] = owner.emplace(s.frame_ref, p);
            if (!inserted && it->second != p) {
                throw DatasetError("frame " + s.frame_ref + " appears in more than one partition");
            }
        }
    }

    if (split.kind == SplitKind::CrossSubject) {
        std::unordered_set<std::string> fit;
        for (const auto* part : {&split.train, &split.validation}) {
            for (const auto& s : *part) fit.insert(s.subject_id);
        }
        for (const auto& s : split.test) {
            if (fit.count(s.subject_id)) throw DatasetError("subject " + s.subject_id + " leaks into the test set");
        }
        return;
    }

    struct Range {
        double lo = INFINITY;
        double hi = -INFINITY;
    };
    std::unordered_map<std::string, std::array<Range, 3>> ranges;
    for (int p = 0; p < 3; ++p) {
        for (const auto& s : *parts[p]) {
            auto& r = ranges[s.drive_id][p];
            r.lo = std::min(r.lo, s.timestamp);
            r.hi = std::max(r.hi, s.timestamp);
        }
    }
    for (const auto& [drive, r] : ranges) {
        if (r[0].hi >= r[1].lo || r[0].hi >= r[2].lo || r[1].hi >= r[2].lo) {
            throw DatasetError("drive " + drive + ": temporal partitions are not chronologically ordered");
        }
    }
}

std::array<std::size_t, kNumZones> zone_counts(const std::vector<LabeledSample>& samples) {
    std::array<std::size_t, kNumZones> c{};
    for (const auto& s : samples) ++c[ordinal(s.zone)];
    return c;
}

nlohmann::json sample_to_json(const LabeledSample& s) {
    return {{"frame_ref", s.frame_ref},
            {"subject_id", s.subject_id},
            {"drive_id", s.drive_id},
            {"timestamp", s.timestamp},
            {"zone", zone_name(s.zone)}};
}

LabeledSample sample_from_json(const nlohmann::json& j) {
    LabeledSample s;
    s.frame_ref = j.at("frame_ref").get<std::string>();
    s.subject_id = j.at("subject_id").get<std::string>();
    s.drive_id = j.at("drive_id").get<std::string>();
    s.timestamp = j.at("timestamp").get<double>();
    const auto label = j.at("zone").get<std::string>();
    const auto zone = parse_zone(label);
    if (!zone) throw DatasetError("split artifact has unknown zone '" + label + "'");
    s.zone = *zone;
    return s;
}

nlohmann::json to_json(const SplitArtifact& a) {
    auto part = [](const std::vector<LabeledSample>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& s : v) arr.push_back(sample_to_json(s));
        return arr;
    };
    auto counts = [](const std::vector<LabeledSample>& v) {
        nlohmann::json c = nlohmann::json::object();
        const auto zc = zone_counts(v);
        for (auto z : kAllZones) c[std::string(zone_name(z))] = zc[ordinal(z)];
        return c;
    };
    nlohmann::json j;
    j["format"] = "gazezone-split";
    j["version"] = 1;
    j["split_kind"] = split_kind_name(a.split.kind);
    j["seed"] = a.seed;
    j["parameters"] = a.parameters;
    j["camera_profiles"] = a.camera_profiles;
    j["gap_dropped"] = a.split.gap_dropped;
    j["warnings"] = a.split.warnings;
    j["summary"] = {{"train", counts(a.split.train)},
                    {"validation", counts(a.split.validation)},
                    {"test", counts(a.split.test)}};
    j["partitions"] = {{"train", part(a.split.train)},
                       {"validation", part(a.split.validation)},
                       {"test", part(a.split.test)}};
    return j;
}

SplitArtifact split_artifact_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "gazezone-split") throw DatasetError("not a gazezone split artifact");
    if (j.value("version", 0) != 1) throw DatasetError("unsupported split artifact version");
    SplitArtifact a;
    a.split.kind = parse_split_kind(j.at("split_kind").get<std::string>());
    a.seed = j.value("seed", std::uint64_t{0});
    a.parameters = j.value("parameters", nlohmann::json::object());
    a.camera_profiles = j.value("camera_profiles", std::map<std::string, std::string>{});
    a.split.gap_dropped = j.value("gap_dropped", std::size_t{0});
    a.split.warnings = j.value("warnings", std::vector<std::string>{});
    const auto& parts = j.at("partitions");
    for (const auto& s : parts.at("train")) a.split.train.push_back(sample_from_json(s));
    for (const auto& s : parts.at("validation")) a.split.validation.push_back(sample_from_json(s));
    for (const auto& s : parts.at("test")) a.split.test.push_back(sample_from_json(s));
    return a;
}

void write_split_artifact(const SplitArtifact& artifact, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DatasetError("cannot write split artifact " + path.string());
    out << to_json(artifact).dump(2) << '\n';
}

SplitArtifact read_split_artifact(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open split artifact " + path.string());
    return split_artifact_from_json(nlohmann::json::parse(in));
}

}  // namespace gazezone::dataset
