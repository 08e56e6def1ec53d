// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "gazezone/cam/cam.hpp"
#include "gazezone/cli/commands.hpp"
#include "gazezone/dataset/manifest.hpp"
#include "gazezone/dataset/split.hpp"
#include "gazezone/evaluation/metrics.hpp"
#include "gazezone/evaluation/protocols.hpp"
#include "gazezone/evaluation/reference.hpp"
#include "gazezone/models/checkpoint.hpp"
#include "gazezone/models/gaze_model.hpp"
#include "gazezone/preprocess/crop.hpp"
#include "gazezone/synth/synthetic.hpp"
#include "gazezone/training/trainer.hpp"
#include "support.hpp"

using namespace gazezone;
using models::Family;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += "FAILED " + what;
        }
    }
    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

struct Criterion {
    int id;
    std::string title;
    double limit_seconds;  // 0 = no runtime bound
    std::function<Outcome()> run;
};

preprocess::NetworkInput random_input(std::mt19937_64& rng, int side) {
    preprocess::NetworkInput in;
    in.height = in.width = side;
    in.pixels.resize(static_cast<std::size_t>(side) * side * 3);
    std::uniform_real_distribution<float> u(-120.f, 130.f);
    for (auto& v : in.pixels) v = u(rng);
    return in;
}

double sum_probs(const ZoneDistribution& d) { return std::accumulate(d.probs().begin(), d.probs().end(), 0.0); }

// 1 -------------------------------------------------------------------------
Outcome metric_oracle() {
    Outcome o;
    const auto& sq = eval::published_confusion("SqueezeNet");
    const auto cm = eval::counts_from_percentages(sq.percent, eval::kPublishedTestCounts);
    const double macro = eval::macro_accuracy(cm), micro = eval::micro_accuracy(cm);
    for (int i = 0; i < kNumZones; ++i) o.require(cm.row_sum(i) == eval::kPublishedTestCounts[i], "row total");
    o.require(std::abs(macro - 95.18) <= 0.01, fmt::format("macro {:.4f} vs 95.18 +/- 0.01", macro));
    o.require(std::abs(micro - 94.96) <= 0.05, fmt::format("micro {:.4f} vs 94.96 +/- 0.05", micro));
    o.note(fmt::format("macro {:.3f} micro {:.3f}", macro, micro));
    return o;
}

// 2 -------------------------------------------------------------------------
Outcome cross_check() {
    Outcome o;
    const auto entries = eval::cross_check_published();
    const std::vector<std::pair<std::string, double>> expected = {{"VGG16", 93.36}, {"AlexNet", 88.91}, {"ResNet50", 91.66}};
    for (const auto& [model, value] : expected) {
        const auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.model == model; });
        if (it == entries.end()) {
            o.require(false, model + " missing");
            continue;
        }
        o.require(std::abs(it->diagonal_mean - value) <= 0.01,
                  fmt::format("{} diagonal mean {:.4f} vs {:.2f}", model, it->diagonal_mean, value));
        o.require(it->flagged, model + " caption discrepancy not flagged");
        o.note(fmt::format("{} {:.2f}{}", model, it->diagonal_mean, it->flagged ? " flagged" : ""));
    }
    return o;
}

// 3 -------------------------------------------------------------------------
Outcome entropy_suite() {
    Outcome o;
    const std::vector<double> uniform(7, 1.0 / 7), point = {0, 0, 0, 1, 0, 0, 0}, half = {0.5, 0.5, 0, 0, 0, 0, 0};
    const double hu = eval::normalized_entropy(uniform, 7);
    o.require(std::abs(hu - 1.0) <= 1e-12, fmt::format("uniform {:.17g}", hu));
    o.require(eval::normalized_entropy(point, 7) == 0.0, "point mass not 0");
    const double hh = eval::normalized_entropy(half, 7);
    o.require(std::abs(hh - 0.3562) <= 1e-4, fmt::format("half/half {:.6f}", hh));
    std::mt19937_64 rng(1);
    int bad = 0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> p(7);
        for (auto& v : p) v = testing::uniform_int(rng, 0, 3) == 0 ? 0.0 : testing::uniform_real(rng, 0, 1);
        if (std::accumulate(p.begin(), p.end(), 0.0) == 0.0) p[2] = 1.0;
        const double s = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& v : p) v /= s;
        auto q = p;
        std::shuffle(q.begin(), q.end(), rng);
        if (std::abs(eval::normalized_entropy(p, 7) - eval::normalized_entropy(q, 7)) > 1e-12) ++bad;
    }
    o.require(bad == 0, fmt::format("{} permutation cases differ", bad));
    o.note(fmt::format("uniform {:.6f} point 0 half {:.6f}; 1000 permutations", hu, hh));
    return o;
}

// 4 -------------------------------------------------------------------------
Outcome crop_algebra() {
    Outcome o;
    std::mt19937_64 rng(4);
    int half_bad = 0, bounds_bad = 0, context_bad = 0, unclamped = 0;
    for (int t = 0; t < 500; ++t) {
        const int W = testing::uniform_int(rng, 64, 1920), H = testing::uniform_int(rng, 48, 1080);
        const int w = testing::uniform_int(rng, 2, W), h = testing::uniform_int(rng, 2, H);
        const BBox face{testing::uniform_int(rng, 0, W - w), testing::uniform_int(rng, 0, H - h), w, h};
        const double expand = testing::uniform_real(rng, 0.05, 1.0);
        preprocess::CropStrategy s;
        s.kind = preprocess::CropKind::Face;
        const BBox full = preprocess::resolve_crop(W, H, face, s);
        s.kind = preprocess::CropKind::HalfFace;
        const BBox half = preprocess::resolve_crop(W, H, face, s);
        s.kind = preprocess::CropKind::FaceContext;
        s.context_expand = expand;
        const BBox ctx = preprocess::resolve_crop(W, H, face, s);
        s.kind = preprocess::CropKind::FaceEmbeddedFoV;
        const double fx = testing::uniform_real(rng, 0, 0.8), fy = testing::uniform_real(rng, 0, 0.8);
        s.fov_rect = {fx, fy, testing::uniform_real(rng, 0.1, 1 - fx), testing::uniform_real(rng, 0.1, 1 - fy)};
        const BBox fov = preprocess::resolve_crop(W, H, std::nullopt, s);

        // One row of the face box is w pixels.
        if (std::abs(static_cast<double>(half.area()) - full.area() / 2.0) > full.w) ++half_bad;
        for (const BBox& b : {full, half, ctx, fov}) bounds_bad += !b.inside(W, H);
        const int ex = static_cast<int>(std::floor(expand * w + 0.5)), ey = static_cast<int>(std::floor(expand * h + 0.5));
        if (face.x - ex >= 0 && face.y - ey >= 0 && face.right() + ex <= W && face.bottom() + ey <= H) {
            ++unclamped;
            context_bad += !ctx.contains(full);
        }
    }
    o.require(half_bad == 0, fmt::format("{} HalfFace areas off by more than a row", half_bad));
    o.require(bounds_bad == 0, fmt::format("{} crops out of bounds", bounds_bad));
    o.require(context_bad == 0, fmt::format("{} unclamped FaceContext boxes miss the face", context_bad));
    o.require(unclamped > 0, "no unclamped FaceContext case generated");
    o.note(fmt::format("500 cases, {} unclamped", unclamped));
    return o;
}

// 5 -------------------------------------------------------------------------
Outcome gap_cam_identity() {
    Outcome o;
    const auto model = models::make_variable_resolution(
        models::adapt_head(models::BackboneSpec::standard(Family::SqueezeNet, "synthetic:5"), 5));
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const auto cams = cam::extract_cams(model, random_input(rng, 224));
        for (GazeZone z : kAllZones) {
            const double logit = cams.logits[ordinal(z)], mean = cams.spatial_mean(z);
            const double scale = std::max(std::abs(logit), 1e-6);
            worst = std::max(worst, std::abs(mean - logit) / scale);
        }
    }
    o.require(worst <= 1e-4, fmt::format("worst relative gap {:.3g}", worst));
    o.note(fmt::format("50 inputs, worst relative gap {:.3g}", worst));
    return o;
}

// 6 -------------------------------------------------------------------------
Outcome head_surgery() {
    Outcome o;
    std::mt19937_64 rng(6);
    for (Family f : {Family::SqueezeNet, Family::ResNet50, Family::AlexNet}) {
        const auto spec = models::BackboneSpec::standard(f, "synthetic:6");
        const std::string name(models::family_name(f));
        const auto pre = models::load_pretrained(spec);
        auto adapted = models::adapt_head(spec, 60);

        const auto r = adapted.forward(random_input(rng, spec.native_input));
        o.require(std::abs(sum_probs(r.distribution) - 1.0) <= 1e-6, name + " probabilities do not sum to 1");
        o.require(r.distribution.probs().size() == 7, name + " not 7-way");

        const std::string head_prefix = pre.trunk().name_at(pre.head_index()) + ".";
        std::size_t identical = 0, checked = 0;
        const auto a = pre.parameters();
        const auto b = adapted.parameters();
        o.require(a.size() == b.size(), name + " parameter lists differ");
        for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
            if (a[i]->name.rfind(head_prefix, 0) == 0) continue;
            ++checked;
            identical += a[i]->name == b[i]->name && a[i]->value == b[i]->value;
        }
        o.require(identical == checked, fmt::format("{}: {} of {} pre-head tensors changed", name, checked - identical, checked));

        if (f != Family::SqueezeNet) {
            const auto& fc = dynamic_cast<const nn::Linear&>(adapted.head());
            const auto w = fc.weight().value.values();
            double mean = 0.0, sq = 0.0;
            for (float v : w) mean += v;
            mean /= static_cast<double>(w.size());
            for (float v : w) sq += (v - mean) * (v - mean);
            const double var = sq / static_cast<double>(w.size() - 1);
            const double he = 2.0 / fc.in_features();
            o.require(w.size() >= 10000, name + " head has fewer than 10k weights");
            o.require(std::abs(var / he - 1.0) <= 0.2, fmt::format("{} head variance ratio {:.3f}", name, var / he));
            o.note(fmt::format("{} {} weights var/He {:.3f}", name, w.size(), var / he));
        }
        o.note(fmt::format("{} {} pre-head tensors identical", name, checked));
    }
    return o;
}

// 7 -------------------------------------------------------------------------
int squeezenet_map_side(int s) {
    auto pool = [](int n) { return (n - 3 + 1) / 2 + 1; };  // 3x3 stride 2, ceil mode
    return pool(pool(pool((s - 3) / 2 + 1)));
}

Outcome variable_resolution() {
    Outcome o;
    std::mt19937_64 rng(7);
    const auto model = models::make_variable_resolution(
        models::adapt_head(models::BackboneSpec::standard(Family::SqueezeNet, "synthetic:7"), 7));
    for (int side : {224, 448, 625}) {
        const auto r = model.forward(random_input(rng, side));
        const int m = squeezenet_map_side(side);
        const auto& shape = r.features.shape();
        o.require(shape == nn::Shape{1, 7, m, m},
                  fmt::format("{}: class maps {} expected 1x7x{}x{}", side, nn::to_string(shape), m, m));
        o.require(std::abs(sum_probs(r.distribution) - 1.0) <= 1e-6, fmt::format("{}: not a distribution", side));
        o.note(fmt::format("{} -> 7x{}x{}", side, m, m));
    }
    for (Family f : {Family::AlexNet, Family::VGG16, Family::ResNet50}) {
        const std::string name(models::family_name(f));
        auto m = models::adapt_head(models::BackboneSpec::standard(f, "synthetic:7", 16), 7);
        bool raised = false;
        try {
            m.forward(random_input(rng, 448));
        } catch (const models::ModelError&) {
            raised = true;
        }
        o.require(raised, name + " accepted a 448 input");
        try {
            models::make_variable_resolution(std::move(m));
            o.require(false, name + " converted to variable resolution");
        } catch (const models::ModelError& e) {
            o.require(std::string(e.what()).find("conv_gap") != std::string::npos, name + " error lacks the reason");
        }
    }
    o.note("FC models raise ModelError");
    return o;
}

// 8 -------------------------------------------------------------------------
Outcome split_guarantees() {
    Outcome o;
    std::mt19937_64 rng(8);
    int overlap = 0, order = 0, gap = 0, silent = 0, loud = 0, ok = 0;
    for (int t = 0; t < 60; ++t) {
        std::vector<LabeledSample> all;
        const int subjects = testing::uniform_int(rng, 2, 8);
        std::vector<std::string> ids;
        for (int s = 0; s < subjects; ++s) {
            const std::string sid = "s" + std::to_string(s);
            ids.push_back(sid);
            for (int d = 0; d < testing::uniform_int(rng, 1, 2); ++d) {
                auto drive = testing::random_drive(rng, sid, sid + "_d" + std::to_string(d), testing::uniform_int(rng, 20, 400));
                all.insert(all.end(), drive.begin(), drive.end());
            }
        }
        std::shuffle(ids.begin(), ids.end(), rng);
        const int cut = testing::uniform_int(rng, 1, subjects - 1);
        const std::set<std::string> train(ids.begin(), ids.begin() + cut), test(ids.begin() + cut, ids.end());
        const dataset::CarveOptions carve{testing::uniform_real(rng, 0.01, 0.3), testing::uniform_real(rng, 0.0, 40.0)};
        try {
            const auto split = dataset::split_cross_subject(all, train, test, carve);
            ++ok;
            std::set<std::string> fit;
            for (const auto* part : {&split.train, &split.validation}) {
                for (const auto& s : *part) fit.insert(s.subject_id);
            }
            for (const auto& s : split.test) overlap += fit.count(s.subject_id) > 0;
            std::map<std::string, double> first_val;
            for (const auto& s : split.validation) {
                auto [it, inserted] = first_val.emplace(s.drive_id, s.timestamp);
                if (!inserted) it->second = std::min(it->second, s.timestamp);
            }
            for (const auto& s : split.train) {
                const auto it = first_val.find(s.drive_id);
                if (it != first_val.end() && it->second - s.timestamp < carve.time_gap) ++gap;
            }
        } catch (const dataset::DatasetError& e) {
            const std::string what = e.what();
            const bool named = std::any_of(all.begin(), all.end(),
                                           [&](const auto& s) { return what.find(s.drive_id) != std::string::npos; });
            named ? ++loud : ++silent;
        }

        const auto temporal = dataset::split_temporal(all);
        struct Range {
            double lo = INFINITY;
            double hi = -INFINITY;
        };
        std::map<std::string, std::array<Range, 3>> ranges;
        const std::array<const std::vector<LabeledSample>*, 3> parts = {&temporal.train, &temporal.validation, &temporal.test};
        for (int p = 0; p < 3; ++p) {
            for (const auto& s : *parts[p]) {
                auto& r = ranges[s.drive_id][p];
                r.lo = std::min(r.lo, s.timestamp);
                r.hi = std::max(r.hi, s.timestamp);
            }
        }
        // Empty parts keep infinite bounds and never compare as overlapping.
        for (const auto& [drive, r] : ranges) {
            for (int a = 0; a < 3; ++a) {
                for (int b = a + 1; b < 3; ++b) order += r[a].hi >= r[b].lo;
            }
        }
    }
    o.require(overlap == 0, fmt::format("{} test frames share a subject with training", overlap));
    o.require(order == 0, fmt::format("{} temporal ordering violations", order));
    o.require(gap == 0, fmt::format("{} training frames inside the validation gap", gap));
    o.require(silent == 0, fmt::format("{} carving failures without the drive name", silent));
    o.note(fmt::format("60 random datasets: {} split, {} failed loudly", ok, loud));
    return o;
}

// 9 -------------------------------------------------------------------------
Outcome desk_scale() {
    Outcome o;
    testing::TempDir dir("acceptance_e2e");
    synth::SynthOptions so;
    so.subjects = 10;
    so.frames_per_zone = 40;
    const auto ds = synth::generate(so, dir.path());
    std::vector<LabeledSample> all;
    for (const auto& m : ds.manifests) {
        const auto r = dataset::ingest(dataset::read_manifest(m));
        all.insert(all.end(), r.samples.begin(), r.samples.end());
    }
    const std::set<std::string> train(ds.subjects.begin(), ds.subjects.begin() + 7);
    const std::set<std::string> test(ds.subjects.begin() + 7, ds.subjects.end());
    const auto split = dataset::split_cross_subject(all, train, test, {0.1, 2.0});

    preprocess::PatchConfig pc;
    pc.kind = preprocess::CropKind::HalfFace;
    pc.target = 128;
    pc.default_profile = ds.profile;
    pc.memoize = true;
    const preprocess::PatchProvider provider(pc, preprocess::make_detector("boxes:" + ds.boxes_csv.string()));

    auto model = models::make_variable_resolution(
        models::adapt_head(models::BackboneSpec::standard(Family::SqueezeNet, "synthetic:7", 4), 11));
    auto cfg = training::TrainConfig::defaults_for(Family::SqueezeNet);
    cfg.epochs = 10;
    cfg.learning_rate = 1e-3;
    cfg.seed = 3;
    const auto report = training::finetune(model, split, training::patch_source(provider), cfg);

    const auto ev = eval::evaluate(model, split.test, training::patch_source(provider));
    const double macro = eval::macro_accuracy(ev.confusion);

    const auto eyes = synth::read_eye_boxes(ds.eyes_csv);
    int pass = 0, n = 0;
    for (const auto& s : split.test) {
        const auto in = provider.get(s.frame_ref, s.drive_id);
        const auto cams = cam::extract_cams(model, in);
        const double sx = static_cast<double>(in.width) / in.source.w, sy = static_cast<double>(in.height) / in.source.h;
        std::vector<BBox> mask;
        for (const auto& e : eyes.at(s.frame_ref)) {
            mask.push_back({static_cast<int>(std::lround((e.x - in.source.x) * sx)),
                            static_cast<int>(std::lround((e.y - in.source.y) * sy)),
                            static_cast<int>(std::lround(e.w * sx)), static_cast<int>(std::lround(e.h * sy))});
        }
        pass += cam::hotspot_iou(cams.map(cams.predicted), cams.width, cams.height, in.width, in.height, mask) >= 0.1;
        ++n;
    }
    const double cam_rate = n == 0 ? 0.0 : static_cast<double>(pass) / n;
    o.require(test.size() >= 3, "fewer than 3 held-out subjects");
    o.require(report.epochs.size() <= 10, "more than 10 epochs");
    o.require(macro >= 90.0, fmt::format("held-out macro {:.2f}%", macro));
    o.require(cam_rate >= 0.8, fmt::format("CAM pass rate {:.1f}%", 100.0 * cam_rate));
    o.note(fmt::format("{} held-out subjects, {} test frames: macro {:.2f}%, CAM IoU>=0.1 on {}/{} ({:.1f}%)",
                       test.size(), ev.confusion.total(), macro, pass, n, 100.0 * cam_rate));
    return o;
}

// 10 ------------------------------------------------------------------------
// Head gradients against central differences of a double-precision re-implementation
// of everything after the head's input: conv10 (1x1) -> ReLU -> global mean -> CE.
Outcome gradient_check() {
    Outcome o;
    std::mt19937_64 rng(10);
    auto model = models::make_variable_resolution(
        models::adapt_head(models::BackboneSpec::standard(Family::SqueezeNet, "synthetic:10", 8), 10));
    std::vector<preprocess::NetworkInput> inputs;
    for (int i = 0; i < 4; ++i) inputs.push_back(random_input(rng, 96));
    const std::vector<int> labels = {0, 3, 5, 6};

    const nn::Tensor x = models::to_tensor(inputs);
    const nn::Context ctx{};
    nn::Tensor feat = x;
    for (std::size_t i = 0; i < model.head_index(); ++i) feat = model.trunk().at(i).forward(feat, ctx, nullptr);

    nn::Saved saved;
    const nn::Tensor z = model.logits(x, ctx, &saved);
    nn::Tensor g;
    training::cross_entropy(z, labels, &g);
    model.zero_grad();
    model.backward(g, saved);

    auto& conv = dynamic_cast<nn::Conv2d&>(model.head());
    const int C = feat.c(), P = feat.h() * feat.w(), K = kNumZones, N = 4;
    std::vector<double> W(conv.weight().value.values().begin(), conv.weight().value.values().end());
    std::vector<double> B(conv.bias().value.values().begin(), conv.bias().value.values().end());

    auto loss = [&](const std::vector<double>& w, const std::vector<double>& b) {
        double total = 0.0;
        for (int n = 0; n < N; ++n) {
            std::array<double, kNumZones> logit{};
            for (int k = 0; k < K; ++k) {
                double acc = 0.0;
                for (int p = 0; p < P; ++p) {
                    double pre = b[k];
                    for (int c = 0; c < C; ++c) pre += w[k * C + c] * feat.sample(n)[c * P + p];
                    acc += std::max(pre, 0.0);
                }
                logit[k] = acc / P;
            }
            const double mx = *std::max_element(logit.begin(), logit.end());
            double s = 0.0;
            for (double v : logit) s += std::exp(v - mx);
            total += -(logit[labels[n]] - mx - std::log(s));
        }
        return total / N;
    };

    double worst = 0.0;
    std::size_t compared = 0;
    auto check = [&](std::vector<double>& params, const nn::Tensor& analytic, bool is_weight) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double keep = params[i], h = 1e-6 * std::max(1.0, std::abs(keep));
            params[i] = keep + h;
            const double up = is_weight ? loss(params, B) : loss(W, params);
            params[i] = keep - h;
            const double down = is_weight ? loss(params, B) : loss(W, params);
            params[i] = keep;
            const double fd = (up - down) / (2 * h), an = analytic.data()[i];
            const double scale = std::max(std::abs(fd), std::abs(an));
            if (scale < 1e-7) continue;
            worst = std::max(worst, std::abs(fd - an) / scale);
            ++compared;
        }
    };
    check(W, conv.weight().grad, true);
    check(B, conv.bias().grad, false);
    o.require(compared > 0, "no non-zero gradient entries");
    o.require(worst <= 1e-3, fmt::format("worst relative error {:.3g}", worst));
    o.note(fmt::format("{} head entries, worst relative error {:.3g}", compared, worst));
    return o;
}

// 11 ------------------------------------------------------------------------
Outcome benchmark() {
    Outcome o;
    testing::TempDir dir("acceptance_bench");
    const auto model = models::make_variable_resolution(
        models::adapt_head(models::BackboneSpec::standard(Family::SqueezeNet, "synthetic:11", 4), 11));
    models::save_checkpoint(model, dir / "model.ckpt", "acceptance", {{"strategy", "HalfFace"}, {"resolution", 224}});
    cli::RunConfig cfg;
    cfg.checkpoint = (dir / "model.ckpt").string();
    cfg.resolution = 224;
    cfg.iterations = 50;
    cfg.warmup = 5;
    cfg.output = (dir / "bench").string();
    const auto r = cli::cmd_bench(cfg);
    o.require(r.samples_ms.size() == 50, "sample count");
    o.require(r.p50_ms <= r.p95_ms, "p50 > p95");
    o.require(std::filesystem::exists(dir.path() / "bench" / "bench.json"), "bench.json missing");
    o.note(fmt::format("mean {:.2f} ms p50 {:.2f} ms p95 {:.2f} ms", r.mean_ms, r.p50_ms, r.p95_ms));
    std::string refs;
    for (const auto& p : eval::published_runtimes()) {
        refs += fmt::format("{}{}@{} {:.1f} ms", refs.empty() ? "" : ", ", models::family_name(p.family), p.resolution,
                            p.milliseconds);
    }
    o.note(fmt::format("published reference ({}, annotation only): {}", eval::kPublishedRuntimeHardware, refs));
    return o;
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<Criterion> criteria = {
        {1, "metric oracle on the published SqueezeNet confusion matrix", 1.0, metric_oracle},
        {2, "diagonal means of the published VGG16/AlexNet/ResNet50 matrices", 1.0, cross_check},
        {3, "normalised entropy suite", 5.0, entropy_suite},
        {4, "crop algebra", 5.0, crop_algebra},
        {5, "GAP/CAM identity", 60.0, gap_cam_identity},
        {6, "head surgery", 0.0, head_surgery},
        {7, "variable resolution", 60.0, variable_resolution},
        {8, "split guarantees", 10.0, split_guarantees},
        {9, "desk-scale end-to-end", 600.0, desk_scale},
        {10, "head gradient check", 0.0, gradient_check},
        {11, "benchmark harness", 0.0, benchmark},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_seconds > 0.0) o.require(secs < c.limit_seconds, fmt::format("runtime over {:.0f} s", c.limit_seconds));
        failed += !o.pass;
        std::cout << fmt::format("AC{:<2} {} {} ({:.2f} s): {}", c.id, o.pass ? "PASS" : "FAIL", c.title, secs, o.detail)
                  << std::endl;
    }
    std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failed, criteria.size()) << std::endl;
    return failed == 0 ? 0 : 1;
}
