#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gazezone/core/types.hpp"

namespace gazezone::eval {

class EvalError : public Error {
public:
    using Error::Error;
};

/// Rounds to `decimals` places, halves away from zero for positive values.
double round_half_up(double value, int decimals = 2);

/// Square count matrix; row = true class, column = predicted class.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int classes = kNumZones);
    /// Row-major counts, classes x classes.
    static ConfusionMatrix from_counts(const std::vector<std::vector<std::int64_t>>& rows);

    int classes() const { return n_; }
    void add(int truth, int predicted, std::int64_t count = 1);
    void add(GazeZone truth, GazeZone predicted, std::int64_t count = 1) {
        add(ordinal(truth), ordinal(predicted), count);
    }
    void merge(const ConfusionMatrix& other);

    std::int64_t at(int truth, int predicted) const { return counts_[index(truth, predicted)]; }
    std::int64_t row_sum(int truth) const;
    std::int64_t total() const;
    std::int64_t correct() const;
    /// Row-normalised percentages rounded half-up to 2 decimals; empty rows are 0.
    std::vector<std::vector<double>> percentages() const;
    /// Zone name for 7-class matrices, "class <i>" otherwise.
    std::string class_name(int i) const;

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t index(int t, int p) const;

    int n_;
    std::vector<std::int64_t> counts_;
};

ConfusionMatrix build_confusion(std::span<const std::pair<GazeZone, GazeZone>> predictions);

/// Mean per-class recall in percent. Throws naming the first empty class.
double macro_accuracy(const ConfusionMatrix& cm);
/// Correct over total in percent. Throws on an empty matrix.
double micro_accuracy(const ConfusionMatrix& cm);
/// Per-class recall in percent; NaN for empty rows.
std::vector<double> per_class_recall(const ConfusionMatrix& cm);
/// Macro accuracy over the non-empty rows only.
double macro_accuracy_present(const ConfusionMatrix& cm);

/// -sum p log p / log n with 0 log 0 = 0. Throws when n < 2.
double normalized_entropy(std::span<const double> probs, int n);
double normalized_entropy(const ZoneDistribution& dist, int n = kNumZones);

/// {macro, micro, per_zone: {name: recall}, counts, percentages}.
nlohmann::json summary_json(const ConfusionMatrix& cm);
void write_counts_csv(const ConfusionMatrix& cm, const std::filesystem::path& path);
void write_percentages_csv(const ConfusionMatrix& cm, const std::filesystem::path& path);

}  // namespace gazezone::eval
