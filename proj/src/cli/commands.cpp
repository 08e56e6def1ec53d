#include "gazezone/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "gazezone/cam/cam.hpp"
#include "gazezone/dataset/events.hpp"
#include "gazezone/dataset/manifest.hpp"
#include "gazezone/evaluation/columbia.hpp"
#include "gazezone/evaluation/protocols.hpp"
#include "gazezone/evaluation/reference.hpp"
#include "gazezone/preprocess/face_detector.hpp"
#include "gazezone/training/trainer.hpp"

namespace gazezone::cli {

namespace fs = std::filesystem;

namespace {

void write_json(const nlohmann::json& j, const fs::path& path) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

void require(bool ok, const std::string& message) {
    if (!ok) throw UsageError(message);
}

std::map<std::string, preprocess::CameraProfile> load_profiles(const RunConfig& cfg) {
    std::map<std::string, preprocess::CameraProfile> out;
    for (const auto& p : cfg.camera_profiles) {
        auto profile = preprocess::read_camera_profile(p);
        out[profile.profile_id] = std::move(profile);
    }
    return out;
}

/// Full-frame profile for images outside any calibrated car.
preprocess::CameraProfile frame_profile(const preprocess::Image& img) {
    preprocess::CameraProfile p;
    p.profile_id = "frame";
    p.frame_width = img.width;
    p.frame_height = img.height;
    p.fov_rect = {0.0, 0.0, 1.0, 1.0};
    p.driver_side_anchor = {0.5, 0.5};
    return p;
}

const preprocess::CameraProfile& profile_for_frame(const preprocess::PatchProvider& provider,
                                                   const preprocess::Image& img,
                                                   preprocess::CameraProfile& scratch) {
    const auto& d = provider.config().default_profile;
    if (d && d->frame_width == img.width && d->frame_height == img.height) return *d;
    scratch = frame_profile(img);
    return scratch;
}

models::BackboneSpec backbone_spec(const RunConfig& cfg, models::Family family) {
    const std::string weights = cfg.weights.empty() ? "synthetic:" + std::to_string(cfg.seed) : cfg.weights;
    return models::BackboneSpec::standard(family, weights, cfg.width_divisor);
}

models::GazeModel fresh_model(const RunConfig& cfg, models::Family family) {
    auto model = models::adapt_head(backbone_spec(cfg, family), cfg.seed);
    if (cfg.variable_resolution) model = models::make_variable_resolution(std::move(model));
    return model;
}

training::TrainConfig train_config(const RunConfig& cfg, models::Family family) {
    auto base = training::TrainConfig::defaults_for(family);
    base.seed = cfg.seed;
    auto tc = training::TrainConfig::from_json(cfg.train, base);
    tc.validate();
    return tc;
}

dataset::SplitArtifact load_split(const RunConfig& cfg) {
    require(!cfg.split.empty(), "--split <split.json> is required");
    return dataset::read_split_artifact(cfg.split);
}

preprocess::PatchConfig patch_config_for(const RunConfig& cfg, const models::CheckpointInfo* info, int native,
                                         const dataset::SplitArtifact* artifact) {
    auto pc = patch_config(cfg, info);
    if (pc.target == 0) pc.target = native;
    if (artifact) {
        const auto profiles = load_profiles(cfg);
        for (const auto& [drive, id] : artifact->camera_profiles) {
            if (const auto it = profiles.find(id); it != profiles.end()) pc.profile_by_drive[drive] = it->second;
        }
    }
    return pc;
}

void write_confusion(const eval::ConfusionMatrix& cm, const fs::path& dir) {
    eval::write_counts_csv(cm, dir / "confusion_counts.csv");
    eval::write_percentages_csv(cm, dir / "confusion_percent.csv");
}

std::vector<models::Family> grid_families(const RunConfig& cfg) {
    std::vector<models::Family> out;
    for (const auto& n : cfg.grid_backbones) out.push_back(models::parse_family(n));
    if (out.empty()) out = {models::Family::AlexNet, models::Family::ResNet50, models::Family::VGG16,
                            models::Family::SqueezeNet};
    return out;
}

std::vector<preprocess::CropKind> grid_kinds(const RunConfig& cfg) {
    std::vector<preprocess::CropKind> out;
    for (const auto& n : cfg.grid_strategies) out.push_back(preprocess::parse_crop_kind(n));
    if (out.empty()) out.assign(preprocess::kAllCropKinds.begin(), preprocess::kAllCropKinds.end());
    return out;
}

}  // namespace

void configure_logging(const std::string& level) {
    const auto lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && level != "off") throw UsageError("unknown log level '" + level + "'");
    auto logger = spdlog::get("gazezone");
    if (!logger) logger = spdlog::stderr_color_mt("gazezone");
    logger->set_pattern("%Y-%m-%dT%H:%M:%S.%e level=%l %v");
    logger->set_level(lvl);
    spdlog::set_default_logger(logger);
}

preprocess::PatchConfig patch_config(const RunConfig& cfg, const models::CheckpointInfo* info) {
    preprocess::PatchConfig pc;
    const nlohmann::json extra = info ? info->extra : nlohmann::json::object();
    std::string strategy = cfg.strategy;
    if (strategy.empty()) strategy = extra.value("strategy", std::string("HalfFace"));
    pc.kind = preprocess::parse_crop_kind(strategy);
    pc.context_expand = cfg.context_expand;
    pc.target = cfg.resolution > 0 ? cfg.resolution : extra.value("resolution", 0);
    if (extra.contains("means")) pc.means = extra.at("means").get<preprocess::ChannelMeans>();
    const auto profiles = load_profiles(cfg);
    if (profiles.size() == 1) pc.default_profile = profiles.begin()->second;
    if (!cfg.cache_dir.empty()) {
        pc.cache_dir = fs::path(cfg.cache_dir);
    } else {
        pc.cache_dir = preprocess::cache_dir_from_env();
    }
    return pc;
}

std::shared_ptr<const preprocess::FaceDetector> detector_for(const RunConfig& cfg) {
    if (cfg.detector.empty()) return nullptr;
    return preprocess::make_detector(cfg.detector);
}

PrepareResult cmd_prepare(const RunConfig& cfg) {
    require(!cfg.manifests.empty(), "prepare needs at least one --manifest");
    std::vector<LabeledSample> samples;
    dataset::SplitArtifact artifact;
    for (const auto& m : cfg.manifests) {
        const auto manifest = dataset::read_manifest(m);
        auto r = dataset::ingest(manifest);
        spdlog::info("ingested {}: drive {} subject {} frames {}", m, manifest.drive_id, manifest.subject_id,
                     r.samples.size());
        artifact.camera_profiles[manifest.drive_id] = manifest.camera_profile_id;
        samples.insert(samples.end(), r.samples.begin(), r.samples.end());
    }

    dataset::BalanceOptions bo;
    bo.cap_per_zone = cfg.balance_cap;
    bo.per_event_cap = cfg.per_event_cap;
    bo.seed = cfg.seed;
    const auto balanced = dataset::balance(samples, bo);
    spdlog::info("balanced {} -> {} frames", samples.size(), balanced.size());

    const auto kind = dataset::parse_split_kind(cfg.split_kind);
    if (kind == dataset::SplitKind::CrossSubject) {
        require(!cfg.train_subjects.empty() && !cfg.test_subjects.empty(),
                "cross-subject split needs --train-subjects and --test-subjects");
        const std::set<std::string> tr(cfg.train_subjects.begin(), cfg.train_subjects.end());
        const std::set<std::string> te(cfg.test_subjects.begin(), cfg.test_subjects.end());
        artifact.split = dataset::split_cross_subject(balanced, tr, te, {cfg.validation_fraction, cfg.validation_gap});
    } else {
        artifact.split = dataset::split_temporal(balanced, cfg.temporal_fractions);
    }
    for (const auto& w : artifact.split.warnings) spdlog::warn("{}", w);
    artifact.seed = cfg.seed;
    artifact.parameters = {{"split_kind", cfg.split_kind},
                           {"balance_cap", cfg.balance_cap},
                           {"per_event_cap", cfg.per_event_cap},
                           {"validation_fraction", cfg.validation_fraction},
                           {"validation_gap", cfg.validation_gap},
                           {"temporal_fractions", cfg.temporal_fractions},
                           {"train_subjects", cfg.train_subjects},
                           {"test_subjects", cfg.test_subjects},
                           {"manifests", cfg.manifests}};

    const fs::path out = cfg.output;
    persist_config(cfg, out);
    PrepareResult res{out / "split.json", out / "summary.csv", artifact};
    dataset::write_split_artifact(artifact, res.split_path);

    const auto tr = dataset::zone_counts(artifact.split.train);
    const auto va = dataset::zone_counts(artifact.split.validation);
    const auto te = dataset::zone_counts(artifact.split.test);
    std::ofstream csv(res.summary_path);
    if (!csv) throw Error("cannot write " + res.summary_path.string());
    csv << "zone,train,validation,test\n";
    spdlog::info("{:<16}{:>8}{:>12}{:>8}", "zone", "train", "validation", "test");
    for (GazeZone z : kAllZones) {
        const int i = ordinal(z);
        csv << zone_name(z) << ',' << tr[i] << ',' << va[i] << ',' << te[i] << '\n';
        spdlog::info("{:<16}{:>8}{:>12}{:>8}", zone_name(z), tr[i], va[i], te[i]);
    }
    spdlog::info("gap-dropped training frames: {}", artifact.split.gap_dropped);
    return res;
}

TrainResult cmd_train(const RunConfig& cfg) {
    const auto family = models::parse_family(cfg.backbone);
    const auto artifact = load_split(cfg);
    auto model = fresh_model(cfg, family);
    const auto tc = train_config(cfg, family);
    auto pc = patch_config_for(cfg, nullptr, model.spec().native_input, &artifact);
    pc.memoize = true;
    const preprocess::PatchProvider provider(pc, detector_for(cfg));

    const fs::path run = cfg.output;
    persist_config(cfg, run);
    training::TrainOptions opts;
    opts.run_dir = run;
    opts.run_metadata = {{"run_config", to_json(cfg)},
                         {"strategy", preprocess::crop_kind_name(pc.kind)},
                         {"resolution", pc.target}};
    opts.on_epoch = [](const training::EpochRecord& r) {
        spdlog::info("epoch {} train_loss {:.4f} train_acc {:.2f} val_loss {:.4f} val_macro {:.2f} {:.1f}s", r.epoch,
                     r.train_loss, r.train_accuracy, r.validation_loss, r.validation_macro, r.seconds);
    };
    const auto report = training::finetune(model, artifact.split, training::patch_source(provider), tc, opts);

    TrainResult res{run, run / "model.ckpt", report.best_epoch};
    const nlohmann::json extra = {{"strategy", preprocess::crop_kind_name(pc.kind)},
                                  {"resolution", pc.target},
                                  {"means", pc.means},
                                  {"context_expand", pc.context_expand},
                                  {"best_epoch", report.best_epoch},
                                  {"split", cfg.split}};
    models::save_checkpoint(model, res.checkpoint, tc.fingerprint(), extra);
    spdlog::info("best epoch {} -> {}", report.best_epoch, res.checkpoint.string());
    return res;
}

nlohmann::json cmd_eval(const RunConfig& cfg) {
    const fs::path out = cfg.output;
    if (cfg.mode == "reference") {
        persist_config(cfg, out);
        const auto entries = eval::cross_check_published();
        for (const auto& e : entries) {
            spdlog::info("{:<13} diagonal mean {:.2f} caption macro {:.2f} micro {:.2f}{}", e.model, e.diagonal_mean,
                         e.caption_macro, e.caption_micro, e.flagged ? " FLAGGED" : "");
            for (const auto& n : e.notes) spdlog::info("  {}", n);
        }
        const auto j = eval::to_json(entries);
        write_json(j, out / "reference_check.json");
        return j;
    }
    if (cfg.mode == "grid") {
        const auto artifact = load_split(cfg);
        persist_config(cfg, out);
        const auto detector = detector_for(cfg);
        eval::AblationSetup setup;
        setup.make_model = [&](models::Family f) { return fresh_model(cfg, f); };
        setup.config = [&](models::Family f) { return train_config(cfg, f); };
        std::vector<std::shared_ptr<preprocess::PatchProvider>> keep;
        setup.patches = [&](models::Family f, preprocess::CropKind k) {
            RunConfig c = cfg;
            c.strategy = std::string(preprocess::crop_kind_name(k));
            auto pc = patch_config_for(c, nullptr, models::BackboneSpec::standard(f).native_input, &artifact);
            pc.memoize = true;
            keep.push_back(std::make_shared<preprocess::PatchProvider>(pc, detector));
            return training::patch_source(*keep.back());
        };
        setup.run_root = out / "cells";
        setup.on_cell = [](const eval::GridCell& c) {
            if (c.macro) {
                spdlog::info("cell {} / {}: macro {:.2f}", models::family_name(c.family),
                             preprocess::crop_kind_name(c.kind), *c.macro);
            }
        };
        const auto grid = eval::ablation_grid(grid_families(cfg), grid_kinds(cfg), artifact.split, setup);
        const std::string table = grid.to_table();
        std::ofstream(out / "grid.txt") << table;
        std::istringstream lines(table);
        for (std::string line; std::getline(lines, line);) spdlog::info("{}", line);
        const auto j = grid.to_json();
        write_json(j, out / "grid.json");
        return j;
    }

    require(!cfg.checkpoint.empty(), "--checkpoint is required for eval mode " + cfg.mode);
    auto loaded = models::load_checkpoint(cfg.checkpoint);
    const auto& model = loaded.model;

    if (cfg.mode == "confusion") {
        const auto artifact = load_split(cfg);
        auto pc = patch_config_for(cfg, &loaded.info, model.spec().native_input, &artifact);
        const preprocess::PatchProvider provider(pc, detector_for(cfg));
        persist_config(cfg, out);
        const auto ev = eval::evaluate(model, artifact.split.test, training::patch_source(provider));
        write_confusion(ev.confusion, out);
        eval::write_predictions_csv(ev, out / "predictions.csv");
        auto j = eval::summary_json(ev.confusion);
        j["dropped_no_face"] = ev.dropped;
        j["strategy"] = preprocess::crop_kind_name(pc.kind);
        j["resolution"] = pc.target;
        j["checkpoint"] = cfg.checkpoint;
        write_json(j, out / "summary.json");
        spdlog::info("macro {} micro {} over {} frames ({} without a face)", j.at("macro_accuracy").dump(),
                     j.at("micro_accuracy").dump(), ev.confusion.total(), ev.dropped);
        return j;
    }
    if (cfg.mode == "columbia") {
        require(!cfg.columbia_manifest.empty(), "columbia mode needs --columbia-manifest");
        RunConfig c = cfg;
        if (c.strategy.empty()) c.strategy = "HalfFace";
        const auto pc = patch_config_for(c, &loaded.info, model.spec().native_input, nullptr);
        const preprocess::PatchProvider provider(pc, detector_for(cfg));
        const auto rows = eval::read_columbia_manifest(cfg.columbia_manifest);
        persist_config(cfg, out);
        const auto report = eval::cross_dataset_eval(model, rows, [&](const eval::ColumbiaRow& r) {
            const auto frame = preprocess::load_frame(r.image_path);
            preprocess::CameraProfile scratch;
            return provider.from_frame(frame, profile_for_frame(provider, frame.image, scratch));
        });
        auto j = report.to_json();
        j["strategy"] = preprocess::crop_kind_name(pc.kind);
        write_json(j, out / "columbia.json");
        if (cfg.charts) {
            for (const auto& h : report.configurations) {
                preprocess::save_image(eval::histogram_chart(h), out / "charts" / (h.config.label() + ".png"));
            }
        }
        spdlog::info("{} configurations, {} subjects, {} with a Forward majority", report.configurations.size(),
                     report.subjects, report.flagged(GazeZone::Forward).size());
        return j;
    }
    throw UsageError("unknown eval mode '" + cfg.mode + "' (expected confusion, columbia, grid or reference)");
}

nlohmann::json cmd_cam(const RunConfig& cfg) {
    require(!cfg.frames.empty(), "cam needs at least one --frame");
    require(!cfg.checkpoint.empty(), "--checkpoint is required");
    auto loaded = models::load_checkpoint(cfg.checkpoint);
    const auto& model = loaded.model;
    if (model.spec().head_kind != models::HeadKind::ConvGap) {
        throw cam::CamError(std::string(models::family_name(model.spec().family)) +
                            " checkpoint has a fully connected head; class activation maps need a conv_gap model");
    }
    const auto pc = patch_config_for(cfg, &loaded.info, model.spec().native_input, nullptr);
    const preprocess::PatchProvider provider(pc, detector_for(cfg));
    const fs::path out = cfg.output;
    persist_config(cfg, out);
    nlohmann::json all = nlohmann::json::array();
    std::vector<std::vector<preprocess::Image>> sheet;
    for (std::size_t i = 0; i < cfg.frames.size(); ++i) {
        const auto frame = preprocess::load_frame(cfg.frames[i]);
        preprocess::CameraProfile scratch;
        const auto input = provider.from_frame(frame, profile_for_frame(provider, frame.image, scratch));
        const auto cams = cam::extract_cams(model, input, cfg.frames[i]);
        const auto patch = cam::patch_image(input, pc.means);
        const std::string stem = "frame_" + std::to_string(i);
        all.push_back(cam::export_overlays(cams, patch, out, stem, cfg.alpha));
        std::vector<preprocess::Image> row{patch};
        for (GazeZone z : kAllZones) row.push_back(cam::render_overlay(cams, z, patch, cfg.alpha));
        sheet.push_back(std::move(row));
        spdlog::info("{} -> {}", cfg.frames[i], zone_name(cams.predicted));
    }
    preprocess::save_image(cam::grid_sheet(sheet, std::min(pc.target, 160)), out / "grid.png");
    return all;
}

eval::BenchmarkResult cmd_bench(const RunConfig& cfg) {
    require(!cfg.checkpoint.empty(), "--checkpoint is required");
    if (cfg.iterations < eval::kMinBenchmarkIterations) {
        throw UsageError("--iters must be at least " + std::to_string(eval::kMinBenchmarkIterations));
    }
    auto loaded = models::load_checkpoint(cfg.checkpoint);
    const auto& model = loaded.model;
    const auto pc = patch_config_for(cfg, &loaded.info, model.spec().native_input, nullptr);
    const fs::path out = cfg.output;
    persist_config(cfg, out);
    eval::BenchmarkResult r;
    if (cfg.end_to_end) {
        require(!cfg.frames.empty(), "--end-to-end needs at least one --frame");
        const preprocess::PatchProvider provider(pc, detector_for(cfg));
        std::vector<preprocess::Frame> frames;
        for (const auto& f : cfg.frames) frames.push_back(preprocess::load_frame(f));
        preprocess::CameraProfile scratch;
        const auto& profile = profile_for_frame(provider, frames.front().image, scratch);
        r = eval::benchmark_end_to_end(model, frames, provider, profile, cfg.iterations, cfg.warmup);
    } else {
        r = eval::benchmark_inference(model, pc.target, cfg.iterations, cfg.warmup, cfg.seed);
    }
    write_json(r.to_json(), out / "bench.json");
    spdlog::info("{}", r.summary());
    spdlog::info("published reference runtimes ({}; annotation only):", eval::kPublishedRuntimeHardware);
    for (const auto& p : eval::published_runtimes()) {
        spdlog::info("  {}@{}: {:.1f} ms", models::family_name(p.family), p.resolution, p.milliseconds);
    }
    return r;
}

}  // namespace gazezone::cli
