#include "gazezone/dataset/manifest.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gazezone::dataset {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

DriveManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open manifest " + path.string());

    DriveManifest m;
    m.base_dir = path.parent_path();
    bool header_row_seen = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '#') {
            const auto colon = t.find(':');
            if (colon == std::string::npos) continue;
            const std::string key = trim(std::string_view(t).substr(1, colon - 1));
            const std::string value = trim(std::string_view(t).substr(colon + 1));
            if (key == "drive_id") m.drive_id = value;
            else if (key == "subject_id") m.subject_id = value;
            else if (key == "camera_profile_id") m.camera_profile_id = value;
            continue;
        }
        if (!header_row_seen) {
            if (t != "frame_path,timestamp_s,zone_name") {
                throw DatasetError(path.string() + ":" + std::to_string(lineno) +
                                   ": expected column header 'frame_path,timestamp_s,zone_name'");
            }
            header_row_seen = true;
            continue;
        }
        const auto fields = split_csv(t);
        if (fields.size() != 3) {
            throw DatasetError(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields, got " +
                               std::to_string(fields.size()));
        }
        ManifestRow row;
        row.frame_path = fields[0];
        if (!parse_double(fields[1], row.timestamp)) {
            throw DatasetError(path.string() + ":" + std::to_string(lineno) + ": bad timestamp '" + fields[1] + "'");
        }
        row.zone_label = fields[2];
        row.line = lineno;
        m.rows.push_back(std::move(row));
    }
    if (m.drive_id.empty() || m.subject_id.empty()) {
        throw DatasetError(path.string() + ": header must define drive_id and subject_id");
    }
    return m;
}

void write_manifest(const DriveManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DatasetError("cannot write manifest " + path.string());
    out << "# drive_id: " << manifest.drive_id << "\n";
    out << "# subject_id: " << manifest.subject_id << "\n";
    out << "# camera_profile_id: " << manifest.camera_profile_id << "\n";
    out << "frame_path,timestamp_s,zone_name\n";
    char ts[64];
    for (const auto& r : manifest.rows) {
        std::snprintf(ts, sizeof ts, "%.6f", r.timestamp);
        out << r.frame_path << ',' << ts << ',' << r.zone_label << '\n';
    }
}

IngestResult ingest(const DriveManifest& manifest, const IngestOptions& options) {
    if (manifest.drive_id.empty() || manifest.subject_id.empty()) {
        throw DatasetError("manifest is missing drive_id or subject_id");
    }
    IngestResult result;
    result.samples.reserve(manifest.rows.size());

    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        const auto& r = manifest.rows[i];
        const int rowno = static_cast<int>(i) + 1;
        if (i > 0 && r.timestamp < manifest.rows[i - 1].timestamp) {
            throw DatasetError("drive " + manifest.drive_id + ": timestamps decrease at row " + std::to_string(rowno) +
                               (r.line ? " (line " + std::to_string(r.line) + ")" : std::string()));
        }
        if (r.timestamp < 0.0) {
            result.rejected.push_back({rowno, r.line, "negative timestamp"});
            continue;
        }
        const auto zone = parse_zone(r.zone_label);
        if (!zone) {
            result.rejected.push_back({rowno, r.line, "unknown zone label '" + r.zone_label + "'"});
            continue;
        }
        std::filesystem::path frame = r.frame_path;
        if (frame.is_relative()) frame = manifest.base_dir / frame;
        frame = frame.lexically_normal();
        if (options.check_frames) {
            std::ifstream probe(frame, std::ios::binary);
            if (!probe) {
                result.rejected.push_back({rowno, r.line, "unreadable frame " + frame.string()});
                continue;
            }
        }
        LabeledSample s{frame.string(), manifest.subject_id, manifest.drive_id, r.timestamp, *zone};
        result.samples.push_back(std::move(s));
    }

    if (!result.rejected.empty() && !options.skip_bad_rows) {
        std::string msg = "drive " + manifest.drive_id + ": " + std::to_string(result.rejected.size()) +
                          " rejected row(s):";
        for (const auto& rej : result.rejected) {
            msg += " [row " + std::to_string(rej.row);
            if (rej.line) msg += ", line " + std::to_string(rej.line);
            msg += ": " + rej.reason + "]";
        }
        throw DatasetError(msg);
    }
    return result;
}

}  // namespace gazezone::dataset
