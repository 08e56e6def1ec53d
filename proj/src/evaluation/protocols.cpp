#include "gazezone/evaluation/protocols.hpp"

#include <cstdio>
#include <fstream>

#include <spdlog/spdlog.h>

#include "gazezone/evaluation/reference.hpp"
#include "gazezone/preprocess/face_detector.hpp"

namespace gazezone::eval {

Evaluation evaluate(const models::GazeModel& model, const std::vector<LabeledSample>& samples,
                    const training::PatchSource& patches, std::size_t batch_size) {
    if (batch_size == 0) throw EvalError("batch size must be positive");
    Evaluation out;
    std::vector<preprocess::NetworkInput> inputs;
    std::vector<const LabeledSample*> pending;
    auto flush = [&] {
        if (inputs.empty()) return;
        const auto results = model.forward(inputs);
        for (std::size_t i = 0; i < results.size(); ++i) {
            const GazeZone p = argmax_zone(results[i].distribution);
            out.confusion.add(pending[i]->zone, p);
            out.predictions.push_back({*pending[i], p, results[i].distribution});
        }
        inputs.clear();
        pending.clear();
    };
    for (const auto& s : samples) {
        try {
            inputs.push_back(patches(s));
        } catch (const preprocess::NoFaceError&) {
            ++out.dropped;
            continue;
        }
        pending.push_back(&s);
        if (inputs.size() == batch_size) flush();
    }
    flush();
    return out;
}

void write_predictions_csv(const Evaluation& evaluation, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw EvalError("cannot write " + path.string());
    out << "frame_ref,drive_id,timestamp,zone,predicted";
    for (GazeZone z : kAllZones) out << ",p_" << zone_name(z);
    out << '\n';
    char buf[32];
    for (const auto& p : evaluation.predictions) {
        out << p.sample.frame_ref << ',' << p.sample.drive_id << ',' << p.sample.timestamp << ','
            << zone_name(p.sample.zone) << ',' << zone_name(p.predicted);
        for (double v : p.distribution.probs()) {
            std::snprintf(buf, sizeof buf, "%.6f", v);
            out << ',' << buf;
        }
        out << '\n';
    }
}

nlohmann::json AblationGrid::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json j = {{"family", models::family_name(c.family)},
                            {"strategy", preprocess::crop_kind_name(c.kind)},
                            {"run_dir", c.run_dir.string()}};
        j["macro"] = c.macro ? nlohmann::json(*c.macro) : nlohmann::json();
        j["micro"] = c.micro ? nlohmann::json(*c.micro) : nlohmann::json();
        if (c.failed()) j["error"] = c.error;
        const auto ref = published_ablation(c.family, c.kind);
        j["published_macro"] = ref ? nlohmann::json(*ref) : nlohmann::json();
        rows.push_back(std::move(j));
    }
    return {{"cells", rows}};
}

std::string AblationGrid::to_table() const {
    std::string out = fmt::format("{:<12}", "");
    for (auto k : kinds) out += fmt::format(" {:>24}", preprocess::crop_kind_name(k));
    out += '\n';
    for (std::size_t r = 0; r < families.size(); ++r) {
        out += fmt::format("{:<12}", models::family_name(families[r]));
        for (std::size_t c = 0; c < kinds.size(); ++c) {
            const auto& cell = at(r, c);
            const auto ref = published_ablation(cell.family, cell.kind);
            const std::string got = cell.macro ? fmt::format("{:.2f}", *cell.macro) : "FAILED";
            const std::string pub = ref ? fmt::format("{:.2f}", *ref) : "-";
            out += fmt::format(" {:>24}", got + " (ref " + pub + ")");
        }
        out += '\n';
    }
    return out;
}

AblationGrid ablation_grid(const std::vector<models::Family>& families,
                           const std::vector<preprocess::CropKind>& kinds, const dataset::DatasetSplit& split,
                           const AblationSetup& setup) {
    if (!setup.make_model || !setup.patches || !setup.config) {
        throw EvalError("ablation setup needs make_model, patches and config");
    }
    AblationGrid grid{families, kinds, {}};
    for (auto f : families) {
        for (auto k : kinds) {
            GridCell cell{f, k, std::nullopt, std::nullopt, {}, {}};
            if (!setup.run_root.empty()) {
                cell.run_dir = setup.run_root / (std::string(models::family_name(f)) + "_" +
                                                 std::string(preprocess::crop_kind_name(k)));
            }
            try {
                auto model = setup.make_model(f);
                const auto patches = setup.patches(f, k);
                training::TrainOptions opts;
                opts.run_dir = cell.run_dir;
                opts.run_metadata = {{"family", models::family_name(f)}, {"strategy", preprocess::crop_kind_name(k)}};
                training::finetune(model, split, patches, setup.config(f), opts);
                const auto ev = evaluate(model, split.test, patches);
                cell.macro = macro_accuracy(ev.confusion);
                cell.micro = micro_accuracy(ev.confusion);
            } catch (const std::exception& e) {
                cell.macro.reset();
                cell.micro.reset();
                cell.error = e.what();
                spdlog::warn("grid cell {} / {} failed: {}", models::family_name(f), preprocess::crop_kind_name(k),
                             e.what());
            }
            if (setup.on_cell) setup.on_cell(cell);
            grid.cells.push_back(std::move(cell));
        }
    }
    return grid;
}

std::vector<ResolutionResult> resolution_study(const models::GazeModel& model, const std::vector<int>& resolutions,
                                               const dataset::DatasetSplit& split, const ResolutionSetup& setup) {
    if (!model.accepts_variable_resolution()) {
        throw models::ModelError(std::string(models::family_name(model.spec().family)) +
                                 " model only accepts its native input size; convert it with "
                                 "make_variable_resolution before a resolution study");
    }
    if (!setup.patches) throw EvalError("resolution setup needs a patch factory");
    std::vector<ResolutionResult> out;
    for (int side : resolutions) {
        model.check_input(side, side);
        const auto patches = setup.patches(side);
        Evaluation ev;
        if (setup.finetune) {
            models::GazeModel copy = model;
            training::TrainOptions opts;
            if (!setup.run_root.empty()) opts.run_dir = setup.run_root / ("res_" + std::to_string(side));
            opts.run_metadata = {{"resolution", side}};
            training::finetune(copy, split, patches, *setup.finetune, opts);
            ev = evaluate(copy, split.test, patches);
        } else {
            ev = evaluate(model, split.test, patches);
        }
        out.push_back({side, macro_accuracy(ev.confusion), micro_accuracy(ev.confusion), ev.dropped,
                       published_resolution(side)});
    }
    return out;
}

nlohmann::json to_json(const std::vector<ResolutionResult>& results) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results) {
        nlohmann::json j = {{"resolution", r.resolution}, {"macro", r.macro}, {"micro", r.micro}, {"dropped", r.dropped}};
        j["published_macro"] = r.published ? nlohmann::json(*r.published) : nlohmann::json();
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace gazezone::eval
