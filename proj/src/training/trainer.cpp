#include "gazezone/training/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "gazezone/core/hash.hpp"
#include "gazezone/evaluation/metrics.hpp"
#include "gazezone/models/checkpoint.hpp"

namespace gazezone::training {

using models::Family;

TrainConfig TrainConfig::defaults_for(Family family) {
    TrainConfig c;
    switch (family) {
        case Family::SqueezeNet: c.learning_rate = 4e-4; c.batch_size = 64; break;
        case Family::AlexNet: c.learning_rate = 1e-4; c.batch_size = 64; break;
        case Family::VGG16: c.learning_rate = 1e-4; c.batch_size = 32; break;
        case Family::ResNet50: c.learning_rate = 1e-4; c.batch_size = 16; break;
    }
    c.epochs = 50;
    return c;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw TrainingError("learning_rate must be > 0");
    if (epochs < 1) throw TrainingError("epochs must be >= 1");
    if (batch_size < 1) throw TrainingError("batch_size must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw TrainingError("Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw TrainingError("Adam epsilon must be > 0");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"learning_rate", learning_rate}, {"epochs", epochs},   {"batch_size", batch_size},
            {"optimizer", "adam"},            {"beta1", beta1},     {"beta2", beta2},
            {"epsilon", epsilon},             {"augmentation", "none"}, {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const TrainConfig& base) {
    TrainConfig c = base;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

std::string TrainConfig::fingerprint() const { return sha256_hex(to_json().dump()); }

Adam::Adam(std::vector<nn::Parameter*> params, double lr, double beta1, double beta2, double epsilon)
    : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(epsilon) {
    for (auto* p : params_) {
        m_.emplace_back(p->value.size(), 0.f);
        v_.emplace_back(p->value.size(), 0.f);
    }
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    const float step = static_cast<float>(lr_ * std::sqrt(c2) / c1);
    const float eps = static_cast<float>(eps_ * std::sqrt(c2));
    const float b1 = static_cast<float>(b1_), b2 = static_cast<float>(b2_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        float* w = params_[k]->value.data();
        const float* g = params_[k]->grad.data();
        float* m = m_[k].data();
        float* v = v_[k].data();
        const std::size_t n = m_[k].size();
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = b1 * m[i] + (1.f - b1) * g[i];
            v[i] = b2 * v[i] + (1.f - b2) * g[i] * g[i];
            w[i] -= step * m[i] / (std::sqrt(v[i]) + eps);
        }
    }
}

double cross_entropy(const nn::Tensor& logits, std::span<const int> labels, nn::Tensor* grad) {
    const int n = logits.n(), k = logits.c();
    if (static_cast<std::size_t>(n) != labels.size()) throw TrainingError("label count does not match batch size");
    if (grad) *grad = nn::Tensor(logits.shape());
    double total = 0.0;
    std::vector<double> p(k);
    for (int i = 0; i < n; ++i) {
        const float* z = logits.sample(i);
        const double mx = *std::max_element(z, z + k);
        double sum = 0.0;
        for (int c = 0; c < k; ++c) sum += (p[c] = std::exp(static_cast<double>(z[c]) - mx));
        const int y = labels[i];
        total += -(static_cast<double>(z[y]) - mx - std::log(sum));
        if (grad) {
            float* g = grad->sample(i);
            for (int c = 0; c < k; ++c) g[c] = static_cast<float>((p[c] / sum - (c == y ? 1.0 : 0.0)) / n);
        }
    }
    return total / n;
}

nlohmann::json TrainReport::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : epochs) {
        rows.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"train_accuracy", e.train_accuracy},
                        {"validation_loss", e.validation_loss},
                        {"validation_accuracy", e.validation_accuracy},
                        {"validation_macro_accuracy", e.validation_macro},
                        {"seconds", e.seconds},
                        {"checkpoint", e.checkpoint}});
    }
    return {{"epochs", rows},
            {"train_samples", train_samples},
            {"validation_samples", validation_samples},
            {"dropped_no_face_train", dropped_train},
            {"dropped_no_face_validation", dropped_validation},
            {"initial_train_loss", initial_train_loss},
            {"best_epoch", best_epoch},
            {"best_checkpoint", best_checkpoint}};
}

TrainReport TrainReport::from_json(const nlohmann::json& j) {
    TrainReport r;
    for (const auto& e : j.at("epochs")) {
        EpochRecord rec;
        rec.epoch = e.at("epoch").get<int>();
        rec.train_loss = e.value("train_loss", 0.0);
        rec.train_accuracy = e.value("train_accuracy", 0.0);
        rec.validation_loss = e.value("validation_loss", 0.0);
        rec.validation_accuracy = e.value("validation_accuracy", 0.0);
        rec.validation_macro = e.at("validation_macro_accuracy").get<double>();
        rec.seconds = e.value("seconds", 0.0);
        rec.checkpoint = e.value("checkpoint", std::string{});
        r.epochs.push_back(rec);
    }
    r.train_samples = j.value("train_samples", std::size_t{0});
    r.validation_samples = j.value("validation_samples", std::size_t{0});
    r.dropped_train = j.value("dropped_no_face_train", std::size_t{0});
    r.dropped_validation = j.value("dropped_no_face_validation", std::size_t{0});
    r.initial_train_loss = j.value("initial_train_loss", 0.0);
    r.best_epoch = j.value("best_epoch", 0);
    r.best_checkpoint = j.value("best_checkpoint", std::string{});
    return r;
}

void TrainReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw TrainingError("cannot write " + path.string());
    out << "epoch,train_loss,train_accuracy,validation_loss,validation_accuracy,validation_macro_accuracy,seconds\n";
    char buf[256];
    for (const auto& e : epochs) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.4f,%.6f,%.4f,%.4f,%.3f\n", e.epoch, e.train_loss, e.train_accuracy,
                      e.validation_loss, e.validation_accuracy, e.validation_macro, e.seconds);
        out << buf;
    }
}

BestEpoch select_best(const TrainReport& report) {
    if (report.epochs.empty()) throw TrainingError("report has no epochs");
    const EpochRecord* best = &report.epochs.front();
    for (const auto& e : report.epochs) {
        if (e.validation_macro > best->validation_macro) best = &e;
    }
    return {best->epoch, best->checkpoint};
}

PatchSource patch_source(const preprocess::PatchProvider& provider) {
    return [&provider](const LabeledSample& s) { return provider.get(s.frame_ref, s.drive_id); };
}

namespace {

struct Prepared {
    std::vector<preprocess::NetworkInput> inputs;
    std::vector<int> labels;
    std::size_t dropped = 0;
};

Prepared prepare(const std::vector<LabeledSample>& samples, const PatchSource& patches, const char* what) {
    Prepared out;
    out.inputs.reserve(samples.size());
    for (const auto& s : samples) {
        try {
            out.inputs.push_back(patches(s));
            out.labels.push_back(ordinal(s.zone));
        } catch (const preprocess::NoFaceError&) {
            ++out.dropped;
        }
    }
    if (out.dropped > 0) {
        spdlog::warn("{}: dropped {} of {} frames without a detectable face", what, out.dropped, samples.size());
    }
    return out;
}

nn::Tensor gather(const Prepared& data, std::span<const std::size_t> idx, std::vector<int>& labels) {
    const auto& first = data.inputs[idx.front()];
    const int h = first.height, w = first.width;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    nn::Tensor t(static_cast<int>(idx.size()), 3, h, w);
    labels.resize(idx.size());
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const auto& in = data.inputs[idx[b]];
        if (in.height != h || in.width != w) throw TrainingError("training patches differ in size");
        float* dst = t.sample(static_cast<int>(b));
        for (std::size_t i = 0; i < plane; ++i) {
            dst[i] = in.pixels[i * 3];
            dst[plane + i] = in.pixels[i * 3 + 1];
            dst[2 * plane + i] = in.pixels[i * 3 + 2];
        }
        labels[b] = data.labels[idx[b]];
    }
    return t;
}

struct PassResult {
    double loss = 0.0;
    eval::ConfusionMatrix cm;
};

PassResult evaluate(const models::GazeModel& model, const Prepared& data, int batch_size) {
    PassResult r;
    std::vector<std::size_t> order(data.inputs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<int> labels;
    double weighted = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + batch_size);
        const std::span<const std::size_t> idx(order.data() + start, end - start);
        const nn::Tensor z = model.logits(gather(data, idx, labels), nn::Context{});
        weighted += cross_entropy(z, labels, nullptr) * static_cast<double>(idx.size());
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const float* zs = z.sample(static_cast<int>(b));
            const int pred = static_cast<int>(std::max_element(zs, zs + z.c()) - zs);
            r.cm.add(labels[b], pred);
        }
    }
    r.loss = order.empty() ? 0.0 : weighted / static_cast<double>(order.size());
    return r;
}

std::vector<nn::Tensor> snapshot(const models::GazeModel& model) {
    std::vector<nn::Tensor> out;
    for (const auto* p : model.parameters()) out.push_back(p->value);
    return out;
}

void restore(models::GazeModel& model, const std::vector<nn::Tensor>& values) {
    const auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw TrainingError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

TrainReport finetune(models::GazeModel& model, const dataset::DatasetSplit& split, const PatchSource& patches,
                     const TrainConfig& config, const TrainOptions& options) {
    config.validate();
    dataset::check_split_invariants(split);
    if (split.train.empty()) throw TrainingError("split has no training frames");
    if (split.validation.empty()) throw TrainingError("split has no validation frames");
    if (model.classes() != kNumZones) throw TrainingError("model head must have 7 outputs; run adapt_head first");

    const bool persist = !options.run_dir.empty();
    const auto ckpt_dir = options.run_dir / "checkpoints";
    if (persist) {
        std::filesystem::create_directories(ckpt_dir);
        nlohmann::json snap = options.run_metadata;
        snap["train"] = config.to_json();
        snap["backbone"] = model.spec().to_json();
        snap["variable_resolution"] = model.accepts_variable_resolution();
        snap["split"] = {{"kind", dataset::split_kind_name(split.kind)},
                         {"train", split.train.size()},
                         {"validation", split.validation.size()},
                         {"test", split.test.size()}};
        snap["config_fingerprint"] = config.fingerprint();
        write_json(snap, options.run_dir / "config.json");
    }

    const Prepared train = prepare(split.train, patches, "train");
    const Prepared val = prepare(split.validation, patches, "validation");
    if (train.inputs.empty()) throw TrainingError("no training frame survived preprocessing");
    if (val.inputs.empty()) throw TrainingError("no validation frame survived preprocessing");

    TrainReport report;
    report.train_samples = train.inputs.size();
    report.validation_samples = val.inputs.size();
    report.dropped_train = train.dropped;
    report.dropped_validation = val.dropped;
    report.initial_train_loss = evaluate(model, train, config.batch_size).loss;
    spdlog::info("training {} on {} frames ({} validation), initial loss {:.4f}", models::family_name(model.spec().family),
                 train.inputs.size(), val.inputs.size(), report.initial_train_loss);

    std::mt19937_64 shuffle_rng(config.seed);
    std::mt19937_64 dropout_rng(config.seed ^ 0xD1B54A32D192ED03ULL);
    const nn::Context train_ctx{true, &dropout_rng};
    Adam adam(model.parameters(), config.learning_rate, config.beta1, config.beta2, config.epsilon);

    std::vector<std::size_t> order(train.inputs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<int> labels;
    std::vector<nn::Tensor> best_weights = snapshot(model);
    double best_macro = -1.0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const nn::Tensor x = gather(train, idx, labels);
            nn::Saved saved;
            const nn::Tensor z = model.logits(x, train_ctx, &saved);
            nn::Tensor grad;
            const double loss = cross_entropy(z, labels, &grad);
            if (!std::isfinite(loss)) {
                if (!report.epochs.empty()) restore(model, best_weights);
                throw DivergenceError("loss became non-finite in epoch " + std::to_string(epoch) +
                                          (report.best_checkpoint.empty()
                                               ? std::string("; no completed epoch")
                                               : "; last good checkpoint " + report.best_checkpoint),
                                      report);
            }
            loss_sum += loss * static_cast<double>(idx.size());
            for (std::size_t b = 0; b < idx.size(); ++b) {
                const float* zs = z.sample(static_cast<int>(b));
                if (std::max_element(zs, zs + z.c()) - zs == labels[b]) ++correct;
            }
            model.zero_grad();
            model.backward(grad, saved);
            adam.step();
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.train_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(order.size());
        const PassResult v = evaluate(model, val, config.batch_size);
        rec.validation_loss = v.loss;
        rec.validation_accuracy = eval::micro_accuracy(v.cm);
        rec.validation_macro = eval::macro_accuracy_present(v.cm);
        if (persist) {
            char name[32];
            std::snprintf(name, sizeof name, "epoch_%03d.ckpt", epoch);
            rec.checkpoint = (ckpt_dir / name).string();
            models::save_checkpoint(model, rec.checkpoint, config.fingerprint(), {{"epoch", epoch}});
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!std::isfinite(rec.validation_loss)) {
            if (!report.epochs.empty()) restore(model, best_weights);
            throw DivergenceError("validation loss became non-finite in epoch " + std::to_string(epoch), report);
        }
        if (rec.validation_macro > best_macro) {
            best_macro = rec.validation_macro;
            best_weights = snapshot(model);
        }
        report.epochs.push_back(rec);
        const BestEpoch best = select_best(report);
        report.best_epoch = best.epoch;
        report.best_checkpoint = best.checkpoint;
        spdlog::info("epoch {}/{}: train loss {:.4f} acc {:.2f}%, val loss {:.4f} acc {:.2f}% macro {:.2f}% ({:.1f}s)",
                     epoch, config.epochs, rec.train_loss, rec.train_accuracy, rec.validation_loss,
                     rec.validation_accuracy, rec.validation_macro, rec.seconds);
        if (persist) {
            write_json(report.to_json(), options.run_dir / "report.json");
            report.write_csv(options.run_dir / "report.csv");
        }
        if (options.on_epoch) options.on_epoch(rec);
    }
    restore(model, best_weights);
    return report;
}

}  // namespace gazezone::training
