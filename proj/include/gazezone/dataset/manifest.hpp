#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gazezone/core/types.hpp"

namespace gazezone::dataset {

class DatasetError : public Error {
public:
    using Error::Error;
};

struct ManifestRow {
    std::string frame_path;  // as written in the file
    double timestamp = 0.0;
    std::string zone_label;
    int line = 0;            // 1-based line in the source file, 0 if built in memory
};

/// One drive: a single subject recorded by one camera profile.
///
/// On disk:
///
///     # drive_id: d01
///     # subject_id: s01
///     # camera_profile_id: car_a
///     frame_path,timestamp_s,zone_name
///     frames/000001.png,0.000,Forward
///
/// Relative frame paths resolve against the manifest's directory.
struct DriveManifest {
    std::string drive_id;
    std::string subject_id;
    std::string camera_profile_id;
    std::filesystem::path base_dir;
    std::vector<ManifestRow> rows;
};

/// Parses the file structure only; zone labels are checked by ingest().
DriveManifest read_manifest(const std::filesystem::path& path);

void write_manifest(const DriveManifest& manifest, const std::filesystem::path& path);

struct RejectedRow {
    int row = 0;  // 1-based data row
    int line = 0;
    std::string reason;
};

struct IngestOptions {
    bool check_frames = true;     // require every frame file to be readable
    bool skip_bad_rows = false;   // otherwise any rejected row raises DatasetError
};

struct IngestResult {
    std::vector<LabeledSample> samples;
    std::vector<RejectedRow> rejected;
};

/// One sample per valid row, order preserved. Decreasing timestamps always
/// raise; unknown labels and unreadable frames are rejected rows.
IngestResult ingest(const DriveManifest& manifest, const IngestOptions& options = {});

}  // namespace gazezone::dataset
