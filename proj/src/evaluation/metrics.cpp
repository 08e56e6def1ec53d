#include "gazezone/evaluation/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace gazezone::eval {

double round_half_up(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    // The nudge absorbs binary representation error of decimal halves.
    return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

ConfusionMatrix::ConfusionMatrix(int classes) : n_(classes) {
    if (classes < 1) throw EvalError("confusion matrix needs at least one class");
    counts_.assign(static_cast<std::size_t>(classes) * classes, 0);
}

ConfusionMatrix ConfusionMatrix::from_counts(const std::vector<std::vector<std::int64_t>>& rows) {
    ConfusionMatrix cm(static_cast<int>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (rows[t].size() != rows.size()) throw EvalError("confusion matrix must be square");
        for (std::size_t p = 0; p < rows.size(); ++p) cm.add(static_cast<int>(t), static_cast<int>(p), rows[t][p]);
    }
    return cm;
}

std::size_t ConfusionMatrix::index(int t, int p) const {
    if (t < 0 || t >= n_ || p < 0 || p >= n_) throw EvalError("class index out of range");
    return static_cast<std::size_t>(t) * n_ + p;
}

void ConfusionMatrix::add(int truth, int predicted, std::int64_t count) {
    if (count < 0) throw EvalError("negative confusion count");
    counts_[index(truth, predicted)] += count;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.n_ != n_) throw EvalError("cannot merge confusion matrices of different sizes");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::int64_t ConfusionMatrix::row_sum(int truth) const {
    std::int64_t s = 0;
    for (int p = 0; p < n_; ++p) s += at(truth, p);
    return s;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
}

std::int64_t ConfusionMatrix::correct() const {
    std::int64_t s = 0;
    for (int i = 0; i < n_; ++i) s += at(i, i);
    return s;
}

std::vector<std::vector<double>> ConfusionMatrix::percentages() const {
    std::vector<std::vector<double>> out(n_, std::vector<double>(n_, 0.0));
    for (int t = 0; t < n_; ++t) {
        const auto r = row_sum(t);
        if (r == 0) continue;
        for (int p = 0; p < n_; ++p) out[t][p] = round_half_up(100.0 * static_cast<double>(at(t, p)) / r);
    }
    return out;
}

std::string ConfusionMatrix::class_name(int i) const {
    if (n_ == kNumZones) return std::string(zone_name(zone_from_ordinal(i)));
    return "class " + std::to_string(i);
}

ConfusionMatrix build_confusion(std::span<const std::pair<GazeZone, GazeZone>> predictions) {
    ConfusionMatrix cm;
    for (const auto& [t, p] : predictions) cm.add(t, p);
    return cm;
}

std::vector<double> per_class_recall(const ConfusionMatrix& cm) {
    std::vector<double> out(cm.classes(), std::numeric_limits<double>::quiet_NaN());
    for (int t = 0; t < cm.classes(); ++t) {
        const auto r = cm.row_sum(t);
        if (r > 0) out[t] = 100.0 * static_cast<double>(cm.at(t, t)) / static_cast<double>(r);
    }
    return out;
}

double macro_accuracy(const ConfusionMatrix& cm) {
    const auto recall = per_class_recall(cm);
    double sum = 0.0;
    for (int t = 0; t < cm.classes(); ++t) {
        if (std::isnan(recall[t])) throw EvalError("no samples for " + cm.class_name(t) + "; macro accuracy undefined");
        sum += recall[t];
    }
    return sum / cm.classes();
}

double macro_accuracy_present(const ConfusionMatrix& cm) {
    double sum = 0.0;
    int present = 0;
    for (double r : per_class_recall(cm)) {
        if (std::isnan(r)) continue;
        sum += r;
        ++present;
    }
    if (present == 0) throw EvalError("empty confusion matrix");
    return sum / present;
}

double micro_accuracy(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw EvalError("empty confusion matrix; micro accuracy undefined");
    return 100.0 * static_cast<double>(cm.correct()) / static_cast<double>(total);
}

double normalized_entropy(std::span<const double> probs, int n) {
    if (n < 2) throw EvalError("normalized entropy needs at least 2 classes, got " + std::to_string(n));
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h / std::log(static_cast<double>(n));
}

double normalized_entropy(const ZoneDistribution& dist, int n) {
    const auto& p = dist.probs();
    return normalized_entropy(std::span<const double>(p.data(), p.size()), n);
}

nlohmann::json summary_json(const ConfusionMatrix& cm) {
    nlohmann::json j;
    const auto recall = per_class_recall(cm);
    nlohmann::json per = nlohmann::json::object();
    bool complete = true;
    for (int t = 0; t < cm.classes(); ++t) {
        if (std::isnan(recall[t])) {
            per[cm.class_name(t)] = nullptr;
            complete = false;
        } else {
            per[cm.class_name(t)] = round_half_up(recall[t]);
        }
    }
    j["macro_accuracy"] = complete ? nlohmann::json(round_half_up(macro_accuracy(cm))) : nlohmann::json(nullptr);
    j["micro_accuracy"] = cm.total() > 0 ? nlohmann::json(round_half_up(micro_accuracy(cm))) : nlohmann::json(nullptr);
    j["per_zone"] = per;
    j["total"] = cm.total();
    nlohmann::json counts = nlohmann::json::array();
    for (int t = 0; t < cm.classes(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (int p = 0; p < cm.classes(); ++p) row.push_back(cm.at(t, p));
        counts.push_back(row);
    }
    j["counts"] = counts;
    j["percentages"] = cm.percentages();
    return j;
}

namespace {

template <typename Cell>
void write_csv(const ConfusionMatrix& cm, const std::filesystem::path& path, Cell cell) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw EvalError("cannot write " + path.string());
    out << "true\\predicted";
    for (int p = 0; p < cm.classes(); ++p) out << ',' << cm.class_name(p);
    out << '\n';
    for (int t = 0; t < cm.classes(); ++t) {
        out << cm.class_name(t);
        for (int p = 0; p < cm.classes(); ++p) out << ',' << cell(t, p);
        out << '\n';
    }
}

}  // namespace

void write_counts_csv(const ConfusionMatrix& cm, const std::filesystem::path& path) {
    write_csv(cm, path, [&](int t, int p) { return std::to_string(cm.at(t, p)); });
}

void write_percentages_csv(const ConfusionMatrix& cm, const std::filesystem::path& path) {
    const auto pct = cm.percentages();
    write_csv(cm, path, [&](int t, int p) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", pct[t][p]);
        return std::string(buf);
    });
}

}  // namespace gazezone::eval
