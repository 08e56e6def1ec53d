#include "gazezone/synth/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <opencv2/imgproc.hpp>

#include "gazezone/dataset/manifest.hpp"

namespace gazezone::synth {

namespace {

struct Look {
    cv::Scalar skin, hair, background, iris;
    double cx, cy, a, b, eye_spacing, eye_w, eye_h;
};

Look subject_look(const SynthOptions& o, int subject) {
    std::mt19937_64 rng(o.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(subject) * 7919u + 17u);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Look l;
    const double tone = 90 + 140 * u(rng);
    l.skin = cv::Scalar(tone, tone * (0.72 + 0.1 * u(rng)), tone * (0.55 + 0.15 * u(rng)));
    l.hair = cv::Scalar(20 + 90 * u(rng), 15 + 60 * u(rng), 10 + 40 * u(rng));
    l.background = cv::Scalar(40 + 120 * u(rng), 40 + 120 * u(rng), 40 + 120 * u(rng));
    l.iris = cv::Scalar(10 + 40 * u(rng), 10 + 50 * u(rng), 10 + 40 * u(rng));
    const double s = o.height / 120.0;
    l.a = (24 + 6 * u(rng)) * s;
    l.b = (30 + 6 * u(rng)) * s;
    l.cx = o.width / 2.0 + (u(rng) - 0.5) * 24 * s;
    l.cy = o.height / 2.0 + (u(rng) - 0.5) * 12 * s;
    l.eye_spacing = l.a * (0.38 + 0.08 * u(rng));
    l.eye_w = l.a * (0.28 + 0.05 * u(rng));
    l.eye_h = l.b * (0.14 + 0.03 * u(rng));
    return l;
}

/// Pupil displacement as a fraction of the eye's half extents.
std::array<double, 2> pupil_offset(GazeZone z) {
    switch (z) {
        case GazeZone::Forward: return {0.0, 0.0};
        case GazeZone::Right: return {-0.6, 0.0};
        case GazeZone::Left: return {0.6, 0.0};
        case GazeZone::CenterStack: return {0.45, 0.45};
        case GazeZone::RearviewMirror: return {0.45, -0.45};
        case GazeZone::Speedometer: return {0.0, 0.5};
        case GazeZone::EyesClosed: return {0.0, 0.0};
    }
    return {0.0, 0.0};
}

cv::Point pt(double x, double y) { return {static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y))}; }

std::string frame_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06d.png", i);
    return buf;
}

}  // namespace

preprocess::Image render(const SynthOptions& o, int subject, GazeZone zone, std::uint64_t frame_seed, BBox* face,
                         std::array<BBox, 2>* eyes) {
    const Look l = subject_look(o, subject);
    std::mt19937_64 rng(frame_seed);
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    cv::Mat img(o.height, o.width, CV_8UC3);
    for (int y = 0; y < o.height; ++y) {
        const double shade = 0.7 + 0.6 * y / o.height;
        img.row(y).setTo(l.background * shade);
    }
    const double cx = l.cx + 1.5 * jitter(rng), cy = l.cy + 1.5 * jitter(rng);
    cv::ellipse(img, pt(cx, cy - l.b * 0.25), cv::Size(static_cast<int>(l.a * 1.1), static_cast<int>(l.b * 0.9)), 0,
                180, 360, l.hair, cv::FILLED, cv::LINE_AA);
    cv::ellipse(img, pt(cx, cy), cv::Size(static_cast<int>(l.a), static_cast<int>(l.b)), 0, 0, 360, l.skin, cv::FILLED,
                cv::LINE_AA);
    // Mouth and nose in the lower half.
    cv::line(img, pt(cx - l.a * 0.3, cy + l.b * 0.55), pt(cx + l.a * 0.3, cy + l.b * 0.55), l.skin * 0.55, 2,
             cv::LINE_AA);
    cv::line(img, pt(cx, cy + l.b * 0.05), pt(cx, cy + l.b * 0.3), l.skin * 0.75, 1, cv::LINE_AA);

    const auto off = pupil_offset(zone);
    const double ey = cy - l.b * 0.3;
    std::array<BBox, 2> eye_boxes;
    for (int side = 0; side < 2; ++side) {
        const double ex = cx + (side == 0 ? -l.eye_spacing : l.eye_spacing);
        const cv::Size axes(static_cast<int>(std::lround(l.eye_w)), static_cast<int>(std::lround(l.eye_h)));
        eye_boxes[side] = {static_cast<int>(std::lround(ex - l.eye_w)) - 1, static_cast<int>(std::lround(ey - l.eye_h)) - 1,
                           2 * axes.width + 3, 2 * axes.height + 3};
        cv::line(img, pt(ex - l.eye_w, ey - l.eye_h * 2.2), pt(ex + l.eye_w, ey - l.eye_h * 2.4), l.hair, 2, cv::LINE_AA);
        if (zone == GazeZone::EyesClosed) {
            cv::ellipse(img, pt(ex, ey), axes, 0, 0, 180, l.skin * 0.5, 2, cv::LINE_AA);
            continue;
        }
        cv::ellipse(img, pt(ex, ey), axes, 0, 0, 360, cv::Scalar(235, 235, 230), cv::FILLED, cv::LINE_AA);
        const double r = std::max(2.0, l.eye_h * 0.85);
        const double px = ex + off[0] * (l.eye_w - r * 0.6) + 0.3 * jitter(rng);
        const double py = ey + off[1] * (l.eye_h + r * 0.2) + 0.2 * jitter(rng);
        cv::circle(img, pt(px, py), static_cast<int>(std::lround(r)), l.iris, cv::FILLED, cv::LINE_AA);
        cv::ellipse(img, pt(ex, ey), axes, 0, 0, 360, l.skin * 0.6, 1, cv::LINE_AA);
    }

    std::normal_distribution<double> pixel_noise(0.0, 5.0);
    const double gain = 0.85 + 0.3 * u(rng);
    for (uchar* p = img.data; p != img.data + img.total() * 3; ++p) {
        *p = cv::saturate_cast<uchar>((*p + pixel_noise(rng)) * gain);
    }

    if (face) {
        *face = {static_cast<int>(std::lround(cx - l.a)), static_cast<int>(std::lround(cy - l.b)),
                 static_cast<int>(std::lround(2 * l.a)), static_cast<int>(std::lround(2 * l.b))};
    }
    if (eyes) *eyes = eye_boxes;

    preprocess::Image image;
    image.width = o.width;
    image.height = o.height;
    image.rgb.assign(img.data, img.data + img.total() * 3);
    return image;
}

SynthDataset generate(const SynthOptions& o, const std::filesystem::path& root) {
    if (o.subjects < 1 || o.frames_per_zone < 1 || o.min_event < 1 || o.max_event < o.min_event) {
        throw Error("invalid synthetic dataset options");
    }
    SynthDataset ds;
    ds.root = std::filesystem::absolute(root).lexically_normal();
    std::filesystem::create_directories(ds.root / "manifests");
    ds.profile = {"synthetic", o.width, o.height, {0.1, 0.0, 0.8, 1.0}, {0.5, 0.5}};
    ds.profile_json = ds.root / "profile.json";
    preprocess::write_camera_profile(ds.profile, ds.profile_json);

    ds.boxes_csv = ds.root / "boxes.csv";
    ds.eyes_csv = ds.root / "eyes.csv";
    std::ofstream boxes(ds.boxes_csv), eyes(ds.eyes_csv);
    boxes << "frame_path,x,y,w,h,score\n";
    eyes << "frame_path,lx,ly,lw,lh,rx,ry,rw,rh\n";

    std::mt19937_64 rng(o.seed);
    for (int s = 0; s < o.subjects; ++s) {
        char sid[16];
        std::snprintf(sid, sizeof sid, "s%02d", s + 1);
        ds.subjects.emplace_back(sid);
        const std::string drive = std::string("d") + (sid + 1);
        std::filesystem::create_directories(ds.root / "frames" / sid);

        // Events of random length until every zone has its quota.
        std::vector<std::pair<GazeZone, int>> events;
        for (GazeZone z : kAllZones) {
            int left = o.frames_per_zone;
            while (left > 0) {
                const int len = std::min(left, std::uniform_int_distribution<int>(o.min_event, o.max_event)(rng));
                events.emplace_back(z, len);
                left -= len;
            }
        }
        std::shuffle(events.begin(), events.end(), rng);

        dataset::DriveManifest manifest{drive, sid, ds.profile.profile_id, ds.root / "manifests", {}};
        double t = 0.0;
        int index = 0;
        for (const auto& [zone, len] : events) {
            for (int k = 0; k < len; ++k, ++index, t += 1.0 / o.fps) {
                const std::string rel = std::string("frames/") + sid + "/" + frame_name(index);
                SynthFrame f;
                const preprocess::Image img = render(o, s, zone, rng(), &f.face, &f.eyes);
                preprocess::save_image(img, ds.root / rel);
                f.sample = {(ds.root / rel).string(), sid, drive, t, zone};
                char ts[32];
                std::snprintf(ts, sizeof ts, "%.3f", t);
                manifest.rows.push_back({"../" + rel, std::stod(ts), std::string(zone_name(zone)), 0});
                f.sample.timestamp = std::stod(ts);

                std::uniform_int_distribution<int> j(-o.box_jitter, o.box_jitter);
                const BBox det{f.face.x + j(rng), f.face.y + j(rng), f.face.w + j(rng), f.face.h + j(rng)};
                boxes << rel << ',' << det.x << ',' << det.y << ',' << det.w << ',' << det.h << ",0.99\n";
                eyes << rel;
                for (const auto& e : f.eyes) eyes << ',' << e.x << ',' << e.y << ',' << e.w << ',' << e.h;
                eyes << '\n';
                ds.frames.push_back(std::move(f));
            }
            t += 1.0;  // pause between events keeps them separate
        }
        const auto path = ds.root / "manifests" / (drive + ".csv");
        dataset::write_manifest(manifest, path);
        ds.manifests.push_back(path);
    }
    return ds;
}

std::map<std::string, std::array<BBox, 2>> read_eye_boxes(const std::filesystem::path& csv) {
    std::ifstream in(csv);
    if (!in) throw Error("cannot open eye box file " + csv.string());
    std::map<std::string, std::array<BBox, 2>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.rfind("frame_path,", 0) == 0) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        std::string path;
        std::array<BBox, 2> e;
        if (!(fields >> path >> e[0].x >> e[0].y >> e[0].w >> e[0].h >> e[1].x >> e[1].y >> e[1].w >> e[1].h)) {
            throw Error(csv.string() + ": malformed row '" + line + "'");
        }
        std::filesystem::path p = path;
        if (p.is_relative()) p = csv.parent_path() / p;
        out[std::filesystem::absolute(p).lexically_normal().string()] = e;
    }
    return out;
}

}  // namespace gazezone::synth
