#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazezone/dataset/split.hpp"
#include "gazezone/models/gaze_model.hpp"
#include "gazezone/preprocess/normalize.hpp"

namespace gazezone::training {

class TrainingError : public Error {
public:
    using Error::Error;
};

struct TrainConfig {
    double learning_rate = 1e-4;
    int epochs = 50;
    int batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    /// Published recipe for the family: learning rate and batch size.
    static TrainConfig defaults_for(models::Family family);

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& base);
    /// SHA-256 of the canonical JSON form.
    std::string fingerprint() const;
};

/// Adam with bias-corrected moments and no learning-rate schedule.
class Adam {
public:
    Adam(std::vector<nn::Parameter*> params, double lr, double beta1, double beta2, double epsilon);
    void step();
    long long steps() const { return t_; }

private:
    std::vector<nn::Parameter*> params_;
    std::vector<std::vector<float>> m_, v_;
    double lr_, b1_, b2_, eps_;
    long long t_ = 0;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_accuracy = 0.0;       // percent
    double validation_loss = 0.0;
    double validation_accuracy = 0.0;  // micro, percent
    double validation_macro = 0.0;     // macro over zones present in validation, percent
    double seconds = 0.0;
    std::string checkpoint;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::size_t train_samples = 0;
    std::size_t validation_samples = 0;
    /// Frames skipped because no face was found.
    std::size_t dropped_train = 0;
    std::size_t dropped_validation = 0;
    /// Mean loss of the adapted but untrained model on the training set.
    double initial_train_loss = 0.0;
    std::string best_checkpoint;
    int best_epoch = 0;

    nlohmann::json to_json() const;
    static TrainReport from_json(const nlohmann::json& j);
    void write_csv(const std::filesystem::path& path) const;
};

struct BestEpoch {
    int epoch = 0;
    std::string checkpoint;
};

/// Epoch with the highest validation macro accuracy; ties go to the earliest.
BestEpoch select_best(const TrainReport& report);

/// Thrown when the loss stops being finite. Carries the report up to the
/// last good epoch.
class DivergenceError : public TrainingError {
public:
    DivergenceError(const std::string& what, TrainReport report)
        : TrainingError(what), report_(std::move(report)) {}
    const TrainReport& report() const { return report_; }
    const std::string& last_good_checkpoint() const { return report_.best_checkpoint; }

private:
    TrainReport report_;
};

/// Maps a sample to its network input; throws preprocess::NoFaceError to skip it.
using PatchSource = std::function<preprocess::NetworkInput(const LabeledSample&)>;

PatchSource patch_source(const preprocess::PatchProvider& provider);

struct TrainOptions {
    /// Receives config.json, checkpoints/, report.json and report.csv.
    /// Empty: nothing is written.
    std::filesystem::path run_dir;
    /// Merged into config.json.
    nlohmann::json run_metadata = nlohmann::json::object();
    std::function<void(const EpochRecord&)> on_epoch;
};

/// Mini-batch cross-entropy fine-tuning of every parameter with Adam.
/// Patches are resolved once up front. On return the model holds the
/// weights of the epoch select_best() picks.
TrainReport finetune(models::GazeModel& model, const dataset::DatasetSplit& split, const PatchSource& patches,
                     const TrainConfig& config, const TrainOptions& options = {});

/// Mean softmax cross-entropy and its gradient w.r.t. logits (N x K x 1 x 1).
double cross_entropy(const nn::Tensor& logits, std::span<const int> labels, nn::Tensor* grad);

}  // namespace gazezone::training
