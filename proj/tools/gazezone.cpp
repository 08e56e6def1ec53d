#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "gazezone/cli/commands.hpp"

namespace {

using gazezone::cli::RunConfig;

/// Collects only the flags the user typed, keyed by RunConfig field name.
class Overrides {
public:
    explicit Overrides(CLI::App* app) : app_(app) {}

    template <class T>
    Overrides& opt(const std::string& flags, const std::string& key, const std::string& help) {
        auto holder = std::make_shared<T>();
        auto* o = app_->add_option(flags, *holder, help);
        bind(o, key, holder);
        return *this;
    }
    Overrides& flag(const std::string& flags, const std::string& key, const std::string& help) {
        auto holder = std::make_shared<bool>(false);
        auto* o = app_->add_flag(flags, *holder, help);
        bind(o, key, holder);
        return *this;
    }
    Overrides& train(const std::string& flags, const std::string& key, const std::string& help, bool integral) {
        auto holder = std::make_shared<double>(0.0);
        auto* o = app_->add_option(flags, *holder, help);
        setters_.push_back([o, key, holder, integral](nlohmann::json& j) {
            if (o->count() == 0) return;
            if (integral) {
                j["train"][key] = static_cast<long long>(*holder);
            } else {
                j["train"][key] = *holder;
            }
        });
        return *this;
    }

    nlohmann::json collect() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& s : setters_) s(j);
        return j;
    }

private:
    template <class T>
    void bind(CLI::Option* o, const std::string& key, std::shared_ptr<T> holder) {
        setters_.push_back([o, key, holder](nlohmann::json& j) {
            if (o->count() > 0) j[key] = *holder;
        });
    }

    CLI::App* app_;
    std::vector<std::function<void(nlohmann::json&)>> setters_;
};

void common(Overrides& o) {
    o.opt<std::string>("-o,--output", "output", "Output directory")
        .opt<std::uint64_t>("--seed", "seed", "Seed for every random choice")
        .opt<std::string>("--log-level", "log_level", "trace|debug|info|warn|error")
        .opt<std::vector<std::string>>("--camera-profile", "camera_profiles", "Camera profile JSON (repeatable)")
        .opt<std::string>("--detector", "detector", "Face detector: boxes:<csv> or cascade:<model>")
        .opt<std::string>("--cache-dir", "cache_dir", "Crop cache directory");
}

void model_flags(Overrides& o) {
    o.opt<std::string>("--backbone", "backbone", "AlexNet | VGG16 | ResNet50 | SqueezeNet")
        .opt<std::string>("--weights", "weights", "Pretrained weights: <file>[#sha256=<hex>] or synthetic:<seed>")
        .opt<int>("--width-divisor", "width_divisor", "Divide every channel count (1 = full width)")
        .flag("--variable-resolution", "variable_resolution", "Convert a conv_gap model to accept any input size");
}

void patch_flags(Overrides& o) {
    o.opt<std::string>("--strategy", "strategy", "HalfFace | Face | FaceContext | FaceEmbeddedFoV")
        .opt<int>("--resolution", "resolution", "Square patch side (default: native or checkpoint)")
        .opt<double>("--context-expand", "context_expand", "FaceContext expansion factor");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driver gaze-zone classification toolkit"};
    app.require_subcommand(1);
    std::string config_file;
    app.add_option("-c,--config", config_file, "JSON config; flags override its values")->check(CLI::ExistingFile);

    auto* prepare = app.add_subcommand("prepare", "Ingest manifests, balance, split and carve validation");
    Overrides prep(prepare);
    common(prep);
    prep.opt<std::vector<std::string>>("-m,--manifest", "manifests", "Drive manifest CSV (repeatable)")
        .opt<std::string>("--split", "split_kind", "cross_subject | temporal")
        .opt<std::vector<std::string>>("--train-subjects", "train_subjects", "Training subject ids")
        .opt<std::vector<std::string>>("--test-subjects", "test_subjects", "Test subject ids")
        .opt<std::array<double, 3>>("--temporal", "temporal_fractions", "Train/validation/test fractions")
        .opt<double>("--validation-fraction", "validation_fraction", "Share of training frames carved out")
        .opt<double>("--validation-gap", "validation_gap", "Seconds between training and validation frames")
        .opt<int>("--balance-cap", "balance_cap", "Frames kept per zone")
        .opt<int>("--per-event-cap", "per_event_cap", "Frames per event per sampling pass");

    auto* train = app.add_subcommand("train", "Fine-tune a backbone on a prepared split");
    Overrides tr(train);
    common(tr);
    model_flags(tr);
    patch_flags(tr);
    tr.opt<std::string>("--split", "split", "split.json from prepare")
        .train("--epochs", "epochs", "Training epochs", true)
        .train("--lr", "learning_rate", "Adam learning rate", false)
        .train("--batch-size", "batch_size", "Mini-batch size", true);

    auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint");
    Overrides ev(evalc);
    common(ev);
    model_flags(ev);
    patch_flags(ev);
    ev.opt<std::string>("--mode", "mode", "confusion | columbia | grid | reference")
        .opt<std::string>("--checkpoint", "checkpoint", "Trained checkpoint")
        .opt<std::string>("--split", "split", "split.json from prepare")
        .opt<std::string>("--columbia-manifest", "columbia_manifest", "Columbia gaze manifest CSV")
        .flag("--charts", "charts", "Write one bar chart per configuration")
        .opt<std::vector<std::string>>("--grid-backbones", "grid_backbones", "Backbones for the grid")
        .opt<std::vector<std::string>>("--grid-strategies", "grid_strategies", "Crop strategies for the grid")
        .train("--epochs", "epochs", "Training epochs per grid cell", true)
        .train("--lr", "learning_rate", "Adam learning rate per grid cell", false)
        .train("--batch-size", "batch_size", "Mini-batch size per grid cell", true);

    auto* camc = app.add_subcommand("cam", "Export class activation map overlays");
    Overrides cm(camc);
    common(cm);
    patch_flags(cm);
    cm.opt<std::string>("--checkpoint", "checkpoint", "Trained conv_gap checkpoint")
        .opt<std::vector<std::string>>("-f,--frame", "frames", "Input frame (repeatable)")
        .opt<double>("--alpha", "alpha", "Overlay blend factor");

    auto* bench = app.add_subcommand("bench", "Time forward passes");
    Overrides bn(bench);
    common(bn);
    patch_flags(bn);
    bn.opt<std::string>("--checkpoint", "checkpoint", "Checkpoint to time")
        .opt<int>("--iters", "iterations", "Timed iterations (at least 30)")
        .opt<int>("--warmup", "warmup", "Untimed warm-up iterations")
        .flag("--end-to-end", "end_to_end", "Include face detection and cropping")
        .opt<std::vector<std::string>>("-f,--frame", "frames", "Frames for the end-to-end timer");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    std::pair<CLI::App*, Overrides*> subs[] = {{prepare, &prep}, {train, &tr}, {evalc, &ev}, {camc, &cm}, {bench, &bn}};
    try {
        for (auto [sub, over] : subs) {
            if (!sub->parsed()) continue;
            const RunConfig cfg = gazezone::cli::resolve_config(config_file, over->collect());
            gazezone::cli::configure_logging(cfg.log_level);
            const std::string name = sub->get_name();
            if (name == "prepare") {
                const auto r = gazezone::cli::cmd_prepare(cfg);
                spdlog::info("wrote {}", r.split_path.string());
            } else if (name == "train") {
                const auto r = gazezone::cli::cmd_train(cfg);
                spdlog::info("wrote {}", r.checkpoint.string());
            } else if (name == "eval") {
                gazezone::cli::cmd_eval(cfg);
            } else if (name == "cam") {
                gazezone::cli::cmd_cam(cfg);
            } else {
                const auto r = gazezone::cli::cmd_bench(cfg);
                std::cout << r.to_json().dump() << '\n';
            }
        }
    } catch (const gazezone::cli::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        if (spdlog::default_logger()) spdlog::error("{}", e.what());
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
