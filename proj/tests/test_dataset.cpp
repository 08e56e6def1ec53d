#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "gazezone/dataset/events.hpp"
#include "gazezone/dataset/manifest.hpp"
#include "gazezone/dataset/split.hpp"
#include "support.hpp"

using namespace gazezone;
using namespace gazezone::dataset;

namespace {

LabeledSample sample(const std::string& drive, double t, GazeZone z, const std::string& subject = "s01") {
    return {drive + "/" + std::to_string(t) + ".png", subject, drive, t, z};
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("manifest round trip and ingest") {
    testing::TempDir dir("manifest");
    write_text(dir / "m.csv",
               "# drive_id: d01\n# subject_id: s01\n# camera_profile_id: car_a\n"
               "frame_path,timestamp_s,zone_name\n"
               "f/1.png,0.000,Forward\nf/2.png,0.033,Forward\nf/3.png,0.066,Left\n");
    const auto m = read_manifest(dir / "m.csv");
    CHECK(m.drive_id == "d01");
    CHECK(m.subject_id == "s01");
    CHECK(m.camera_profile_id == "car_a");
    REQUIRE(m.rows.size() == 3);
    const auto r = ingest(m, {.check_frames = false});
    REQUIRE(r.samples.size() == 3);
    CHECK(r.samples[2].zone == GazeZone::Left);
    CHECK(r.samples[0].frame_ref == (dir.path() / "f/1.png").lexically_normal().string());

    write_manifest(m, dir / "copy.csv");
    const auto again = read_manifest(dir / "copy.csv");
    CHECK(ingest(again, {.check_frames = false}).samples == r.samples);
}

TEST_CASE("ingest rejects unknown labels with the row index") {
    testing::TempDir dir("manifest_bad");
    write_text(dir / "m.csv",
               "# drive_id: d01\n# subject_id: s01\n# camera_profile_id: car_a\n"
               "frame_path,timestamp_s,zone_name\n"
               "a.png,0.0,Forward\nb.png,0.1,Cellphone\n");
    const auto m = read_manifest(dir / "m.csv");
    try {
        ingest(m, {.check_frames = false});
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
    const auto r = ingest(m, {.check_frames = false, .skip_bad_rows = true});
    CHECK(r.samples.size() == 1);
    REQUIRE(r.rejected.size() == 1);
    CHECK(r.rejected[0].row == 2);
}

TEST_CASE("ingest rejects decreasing timestamps and unreadable frames") {
    testing::TempDir dir("manifest_order");
    write_text(dir / "m.csv",
               "# drive_id: d01\n# subject_id: s01\n# camera_profile_id: car_a\n"
               "frame_path,timestamp_s,zone_name\n"
               "a.png,1.0,Forward\nb.png,0.5,Forward\n");
    const auto m = read_manifest(dir / "m.csv");
    CHECK_THROWS_AS(ingest(m, {.check_frames = false, .skip_bad_rows = true}), DatasetError);
    write_text(dir / "n.csv",
               "# drive_id: d01\n# subject_id: s01\n# camera_profile_id: car_a\n"
               "frame_path,timestamp_s,zone_name\nmissing.png,0.0,Forward\n");
    CHECK_THROWS_AS(ingest(read_manifest(dir / "n.csv")), DatasetError);
}

TEST_CASE("segment_events examples") {
    CHECK(segment_events({sample("d", 0, GazeZone::Forward), sample("d", 0.03, GazeZone::Forward),
                          sample("d", 0.06, GazeZone::Forward)})
              .size() == 1);
    CHECK(segment_events({sample("d", 0, GazeZone::Forward), sample("d", 0.1, GazeZone::Forward),
                          sample("d", 0.2, GazeZone::Left), sample("d", 0.3, GazeZone::Left)})
              .size() == 2);
    CHECK(segment_events({sample("d", 0, GazeZone::Forward), sample("d", 5.0, GazeZone::Forward)}, 0.5).size() == 2);
    CHECK(segment_events({sample("a", 0, GazeZone::Forward), sample("b", 0.1, GazeZone::Forward)}).size() == 2);
    CHECK(segment_events({}).empty());
}

TEST_CASE("segment_events partitions its input (property)") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        auto drive = testing::random_drive(rng, "s", "d" + std::to_string(trial % 3), testing::uniform_int(rng, 1, 200));
        const auto events = segment_events(drive);
        std::vector<LabeledSample> flat;
        for (const auto& e : events) {
            REQUIRE_FALSE(e.samples.empty());
            for (std::size_t i = 0; i < e.samples.size(); ++i) {
                CHECK(e.samples[i].zone == e.zone);
                if (i > 0) CHECK(e.samples[i].timestamp - e.samples[i - 1].timestamp <= kDefaultGapThreshold);
            }
            flat.insert(flat.end(), e.samples.begin(), e.samples.end());
        }
        CHECK(flat == drive);
        for (std::size_t i = 1; i < events.size(); ++i) {
            const bool split_by_gap =
                events[i].samples.front().timestamp - events[i - 1].samples.back().timestamp > kDefaultGapThreshold;
            CHECK((events[i].zone != events[i - 1].zone || split_by_gap));
        }
    }
}

TEST_CASE("balance keeps small zones whole and caps large ones across events") {
    std::vector<LabeledSample> all;
    double t = 0.0;
    for (GazeZone z : {GazeZone::Forward, GazeZone::Left}) {
        for (int e = 0; e < 10; ++e) {
            for (int f = 0; f < 10; ++f) all.push_back(sample("d", t += 0.1, z));
            t += 5.0;
        }
    }
    BalanceOptions o;
    o.cap_per_zone = 10;
    o.seed = 3;
    const auto out = balance(all, o);
    for (GazeZone z : {GazeZone::Forward, GazeZone::Left}) {
        std::set<int> events;
        int count = 0;
        for (const auto& s : out) {
            if (s.zone != z) continue;
            ++count;
            for (int e = 0; e < 10; ++e) {
                const auto ev = segment_events(all)[e + (z == GazeZone::Left ? 10 : 0)];
                if (std::find(ev.samples.begin(), ev.samples.end(), s) != ev.samples.end()) events.insert(e);
            }
        }
        CHECK(count == 10);
        CHECK(events.size() == 10);
    }

    o.cap_per_zone = 1000;
    CHECK(balance(all, o) == all);
}

TEST_CASE("balance is idempotent and order preserving (property)") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<LabeledSample> all;
        for (int d = 0; d < 3; ++d) {
            auto drive = testing::random_drive(rng, "s" + std::to_string(d), "d" + std::to_string(d),
                                               testing::uniform_int(rng, 10, 300));
            all.insert(all.end(), drive.begin(), drive.end());
        }
        BalanceOptions o;
        o.cap_per_zone = testing::uniform_int(rng, 1, 80);
        o.per_event_cap = testing::uniform_int(rng, 1, 3);
        o.seed = rng();
        const auto once = balance(all, o);
        CHECK(balance(once, o) == once);
        const auto counts = zone_counts(once);
        for (auto c : counts) CHECK(c <= static_cast<std::size_t>(o.cap_per_zone));
        std::size_t j = 0;
        for (const auto& s : all) {
            if (j < once.size() && once[j] == s) ++j;
        }
        CHECK(j == once.size());
    }
}

TEST_CASE("cross-subject split examples") {
    std::vector<LabeledSample> all;
    std::mt19937_64 rng(2);
    for (int s = 1; s <= 10; ++s) {
        const std::string id = "s" + std::to_string(s);
        auto d = testing::random_drive(rng, id, "d" + std::to_string(s), 400);
        all.insert(all.end(), d.begin(), d.end());
    }
    std::set<std::string> train, test;
    for (int s = 1; s <= 7; ++s) train.insert("s" + std::to_string(s));
    for (int s = 8; s <= 10; ++s) test.insert("s" + std::to_string(s));
    const auto split = split_cross_subject(all, train, test, {0.05, 2.0});
    CHECK(split.kind == SplitKind::CrossSubject);
    for (const auto& s : split.test) CHECK(test.count(s.subject_id) == 1);
    CHECK(split.test.size() == 1200);
    CHECK_NOTHROW(check_split_invariants(split));

    CHECK_THROWS_AS(split_cross_subject(all, {"s1", "s2"}, {"s2", "s3"}), DatasetError);

    const std::vector<LabeledSample> one(all.begin(), all.begin() + 400);
    const auto degenerate = split_cross_subject(one, {}, {"s1"});
    CHECK(degenerate.train.empty());
    CHECK(degenerate.test.size() == 400);
    CHECK_FALSE(degenerate.warnings.empty());
}

TEST_CASE("temporal split examples") {
    std::vector<LabeledSample> drive;
    for (int i = 0; i < 100; ++i) drive.push_back(sample("d1", i * 0.1, GazeZone::Forward));
    const auto split = split_temporal(drive);
    CHECK(split.train.size() == 70);
    CHECK(split.validation.size() == 15);
    CHECK(split.test.size() == 15);
    CHECK_THROWS_AS(split_temporal(drive, {0.5, 0.5, 0.1}), DatasetError);
    CHECK_THROWS_AS(split_temporal(drive, {0.0, 0.5, 0.5}), DatasetError);

    std::vector<LabeledSample> two = drive;
    for (int i = 0; i < 40; ++i) two.push_back(sample("d2", 100 + i * 0.1, GazeZone::Left, "s02"));
    const auto s2 = split_temporal(two);
    CHECK(s2.train.size() == 70 + 28);
    CHECK(s2.validation.size() == 15 + 6);
    CHECK(s2.test.size() == 15 + 6);
}

TEST_CASE("carve_validation examples") {
    std::vector<LabeledSample> train;
    for (int i = 0; i < 1000; ++i) train.push_back(sample("d1", i * 0.5, zone_from_ordinal((i / 50) % 7)));
    const auto r = carve_validation(train, {0.05, 10.0});
    CHECK(r.validation.size() == 50);
    const double first_val = r.validation.front().timestamp;
    for (const auto& s : r.train) CHECK(first_val - s.timestamp >= 10.0);
    // First validation frame at t = 475; frames with 465 < t < 475 are dropped.
    CHECK(r.dropped == 19);

    const auto none = carve_validation(train, {0.0, 10.0});
    CHECK(none.validation.empty());
    CHECK(none.train == train);

    // Three events: frames 0.03 s apart must land on one side of the cut.
    std::vector<LabeledSample> toy;
    double t = 0.0;
    for (int e = 0; e < 3; ++e) {
        for (int f = 0; f < 10; ++f) toy.push_back(sample("toy", t += 0.03, zone_from_ordinal(e)));
        t += 20.0;
    }
    for (int k = 1; k <= 9; ++k) {
        try {
            const auto c = carve_validation(toy, {k / 30.0, 10.0});
            for (const auto& v : c.validation) {
                for (const auto& s : c.train) CHECK(v.timestamp - s.timestamp >= 10.0);
            }
        } catch (const DatasetError& e) {
            CHECK(std::string(e.what()).find("toy") != std::string::npos);
        }
    }
}

TEST_CASE("carving fails loudly, naming the drive, when the gap leaves no training frames") {
    std::vector<LabeledSample> tiny;
    for (int i = 0; i < 20; ++i) tiny.push_back(sample("short_drive", i * 0.1, GazeZone::Forward));
    try {
        carve_validation(tiny, {0.1, 30.0});
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        CHECK(std::string(e.what()).find("short_drive") != std::string::npos);
    }
}

TEST_CASE("split artifact JSON round trip") {
    std::vector<LabeledSample> all;
    for (int i = 0; i < 100; ++i) all.push_back(sample("d1", i * 0.1, GazeZone::Right));
    SplitArtifact a;
    a.split = split_temporal(all);
    a.seed = 42;
    a.parameters = {{"k", 1}};
    a.camera_profiles["d1"] = "car_a";
    testing::TempDir dir("artifact");
    write_split_artifact(a, dir / "split.json");
    const auto b = read_split_artifact(dir / "split.json");
    CHECK(b.split.train == a.split.train);
    CHECK(b.split.validation == a.split.validation);
    CHECK(b.split.test == a.split.test);
    CHECK(b.seed == 42);
    CHECK(b.camera_profiles.at("d1") == "car_a");
    CHECK(parse_split_kind(split_kind_name(SplitKind::Temporal)) == SplitKind::Temporal);
}

TEST_CASE("split guarantees over random datasets (property)") {
    std::mt19937_64 rng(31);
    int carved = 0, refused = 0;
    for (int trial = 0; trial < 150; ++trial) {
        std::vector<LabeledSample> all;
        const int subjects = testing::uniform_int(rng, 2, 6);
        std::vector<std::string> ids;
        for (int s = 0; s < subjects; ++s) {
            const std::string sid = "s" + std::to_string(s);
            ids.push_back(sid);
            const int drives = testing::uniform_int(rng, 1, 2);
            for (int d = 0; d < drives; ++d) {
                auto drive = testing::random_drive(rng, sid, sid + "_d" + std::to_string(d), testing::uniform_int(rng, 10, 300));
                all.insert(all.end(), drive.begin(), drive.end());
            }
        }
        std::shuffle(ids.begin(), ids.end(), rng);
        const int cut = testing::uniform_int(rng, 1, subjects - 1);
        const std::set<std::string> train(ids.begin(), ids.begin() + cut), test(ids.begin() + cut, ids.end());
        const CarveOptions carve{testing::uniform_real(rng, 0.01, 0.3), testing::uniform_real(rng, 0.0, 40.0)};
        try {
            const auto split = split_cross_subject(all, train, test, carve);
            ++carved;
            CHECK_NOTHROW(check_split_invariants(split));
            for (const auto& s : split.test) CHECK(test.count(s.subject_id) == 1);
            for (const auto& s : split.train) CHECK(train.count(s.subject_id) == 1);
            CHECK(split.train.size() + split.validation.size() + split.gap_dropped + split.test.size() == all.size());
            std::map<std::string, double> first_val;
            for (const auto& v : split.validation) {
                auto [it, inserted] = first_val.emplace(v.drive_id, v.timestamp);
                if (!inserted) it->second = std::min(it->second, v.timestamp);
            }
            for (const auto& s : split.train) {
                const auto it = first_val.find(s.drive_id);
                if (it != first_val.end()) CHECK(it->second - s.timestamp >= carve.time_gap);
            }
        } catch (const DatasetError& e) {
            ++refused;
            const std::string what = e.what();
            CHECK(std::any_of(all.begin(), all.end(), [&](const auto& s) { return what.find(s.drive_id) != std::string::npos; }));
        }

        const auto temporal = split_temporal(all);
        CHECK_NOTHROW(check_split_invariants(temporal));
        CHECK(temporal.train.size() + temporal.validation.size() + temporal.test.size() == all.size());
    }
    CHECK(carved > 0);
    CHECK(refused > 0);
}
