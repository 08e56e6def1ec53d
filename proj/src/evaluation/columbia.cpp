#include "gazezone/evaluation/columbia.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/fmt/fmt.h>

#include "gazezone/evaluation/metrics.hpp"
#include "gazezone/preprocess/face_detector.hpp"

namespace gazezone::eval {

namespace {

template <std::size_t N>
bool member(const std::array<int, N>& values, int v) {
    return std::find(values.begin(), values.end(), v) != values.end();
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

int parse_angle(const std::string& s, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw EvalError(where + ": angle '" + s + "' is not a number");
    }
    if (used != s.size() || v != std::round(v)) throw EvalError(where + ": angle '" + s + "' is not a whole degree");
    return static_cast<int>(v);
}

constexpr std::array<std::array<std::uint8_t, 3>, kNumZones> kBarColours = {{
    {31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}, {148, 103, 189}, {140, 86, 75}, {127, 127, 127},
}};

}  // namespace

void PoseGaze::validate() const {
    if (!member(kHeadPoses, head_pose) || !member(kHorizontalGaze, h_gaze) || !member(kVerticalGaze, v_gaze)) {
        throw EvalError("configuration " + label() + " is outside the capture grid");
    }
}

std::string PoseGaze::label() const { return fmt::format("P{:+d}_H{:+d}_V{:+d}", head_pose, h_gaze, v_gaze); }

std::vector<PoseGaze> all_configurations() {
    std::vector<PoseGaze> out;
    out.reserve(kNumConfigurations);
    for (int p : kHeadPoses) {
        for (int h : kHorizontalGaze) {
            for (int v : kVerticalGaze) out.push_back({p, h, v});
        }
    }
    return out;
}

std::vector<ColumbiaRow> read_columbia_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw EvalError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw EvalError(path.string() + ": empty manifest");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "subject_id,head_pose_deg,h_gaze_deg,v_gaze_deg,image_path") {
        throw EvalError(path.string() + ": unexpected header '" + line + "'");
    }
    const auto base = path.parent_path();
    std::vector<ColumbiaRow> rows;
    std::set<std::pair<std::string, PoseGaze>> seen;
    for (int n = 2; std::getline(in, line); ++n) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(n);
        const auto cells = split_csv(line);
        if (cells.size() != 5) throw EvalError(where + ": expected 5 fields, got " + std::to_string(cells.size()));
        ColumbiaRow r;
        r.subject_id = cells[0];
        if (r.subject_id.empty()) throw EvalError(where + ": empty subject_id");
        r.config = {parse_angle(cells[1], where), parse_angle(cells[2], where), parse_angle(cells[3], where)};
        r.config.validate();
        std::filesystem::path img(cells[4]);
        if (img.empty()) throw EvalError(where + ": empty image_path");
        r.image_path = (img.is_absolute() ? img : base / img).lexically_normal().string();
        if (!seen.insert({r.subject_id, r.config}).second) {
            throw EvalError(where + ": duplicate image for subject " + r.subject_id + " at " + r.config.label());
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

ConfigurationHistogram make_histogram(const PoseGaze& config, const std::vector<GazeZone>& predictions, int expected,
                                      double threshold) {
    ConfigurationHistogram h;
    h.config = config;
    h.expected = expected;
    h.scored = static_cast<int>(predictions.size());
    for (GazeZone z : predictions) ++h.counts[ordinal(z)];
    if (h.scored == 0) return h;
    for (int k = 0; k < kNumZones; ++k) h.fractions[k] = static_cast<double>(h.counts[k]) / h.scored;
    h.entropy = normalized_entropy(h.fractions, kNumZones);
    for (int k = 0; k < kNumZones; ++k) {
        if (h.fractions[k] > threshold) h.majority = zone_from_ordinal(k);
    }
    return h;
}

std::vector<PoseGaze> ColumbiaReport::flagged(GazeZone zone) const {
    std::vector<PoseGaze> out;
    for (const auto& h : configurations) {
        if (h.majority == zone) out.push_back(h.config);
    }
    return out;
}

nlohmann::json ColumbiaReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& h : configurations) {
        nlohmann::json hist = nlohmann::json::object();
        nlohmann::json counts = nlohmann::json::object();
        for (GazeZone z : kAllZones) {
            hist[std::string(zone_name(z))] = h.fractions[ordinal(z)];
            counts[std::string(zone_name(z))] = h.counts[ordinal(z)];
        }
        nlohmann::json j = {{"configuration", h.config.label()},
                            {"head_pose_deg", h.config.head_pose},
                            {"h_gaze_deg", h.config.h_gaze},
                            {"v_gaze_deg", h.config.v_gaze},
                            {"fractions", hist},
                            {"counts", counts},
                            {"scored_subjects", h.scored},
                            {"expected_subjects", h.expected},
                            {"coverage", h.coverage()},
                            {"normalized_entropy", h.entropy},
                            {"missing", h.missing}};
        j["majority_zone"] = h.majority ? nlohmann::json(zone_name(*h.majority)) : nlohmann::json();
        arr.push_back(std::move(j));
    }
    return {{"majority_threshold", threshold}, {"subjects", subjects}, {"configurations", arr}};
}

ColumbiaReport cross_dataset_eval(const models::GazeModel& model, const std::vector<ColumbiaRow>& rows,
                                  const ColumbiaPatchSource& patches, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw EvalError("majority threshold must lie in (0, 1)");
    std::set<std::string> subjects;
    std::map<PoseGaze, std::vector<const ColumbiaRow*>> by_config;
    for (const auto& r : rows) {
        subjects.insert(r.subject_id);
        by_config[r.config].push_back(&r);
    }
    ColumbiaReport report;
    report.threshold = threshold;
    report.subjects = static_cast<int>(subjects.size());
    for (const auto& cfg : all_configurations()) {
        std::vector<GazeZone> preds;
        std::set<std::string> present;
        std::vector<std::string> failed;
        for (const ColumbiaRow* r : by_config[cfg]) {
            present.insert(r->subject_id);
            try {
                preds.push_back(argmax_zone(model.forward(patches(*r)).distribution));
            } catch (const Error&) {
                failed.push_back(r->subject_id);
            }
        }
        auto h = make_histogram(cfg, preds, report.subjects, threshold);
        for (const auto& s : subjects) {
            if (!present.count(s)) h.missing.push_back(s);
        }
        h.missing.insert(h.missing.end(), failed.begin(), failed.end());
        std::sort(h.missing.begin(), h.missing.end());
        report.configurations.push_back(std::move(h));
    }
    return report;
}

preprocess::Image histogram_chart(const ConfigurationHistogram& h, int width, int height) {
    if (width < 3 * kNumZones || height < 10) throw EvalError("chart too small");
    preprocess::Image img(width, height, 255);
    const int pad = 4;
    const int plot_h = height - 2 * pad;
    const int slot = (width - 2 * pad) / kNumZones;
    for (int k = 0; k < kNumZones; ++k) {
        const int bar_h = static_cast<int>(std::lround(h.fractions[k] * plot_h));
        const int x0 = pad + k * slot + slot / 6;
        const int x1 = pad + (k + 1) * slot - slot / 6;
        for (int y = height - pad - bar_h; y < height - pad; ++y) {
            for (int x = x0; x < x1; ++x) std::copy(kBarColours[k].begin(), kBarColours[k].end(), img.at(x, y));
        }
    }
    const int ty = height - pad - static_cast<int>(std::lround(kMajorityThreshold * plot_h));
    for (int x = pad; x < width - pad; x += 2) {
        auto* p = img.at(x, ty);
        p[0] = p[1] = p[2] = 0;
    }
    for (int x = pad; x < width - pad; ++x) {
        auto* p = img.at(x, height - pad);
        p[0] = p[1] = p[2] = 0;
    }
    return img;
}

}  // namespace gazezone::eval
