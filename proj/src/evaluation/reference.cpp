#include "gazezone/evaluation/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace gazezone::eval {

namespace {

using models::Family;
using preprocess::CropKind;

std::vector<PublishedConfusion> make_confusions() {
    return {
        {"SqueezeNet",
         {{{97.65, 0, 1.17, 0, 0.68, 0.39, 0.1},
           {0, 100, 0, 0, 0, 0, 0},
           {3.23, 0, 94.03, 0, 0, 0.1, 2.64},
           {0.09, 7.77, 0, 90.42, 0, 1.12, 0.6},
           {0, 0.1, 0, 0, 99.9, 0, 0.31},
           {5.79, 0, 0.09, 2.63, 0, 89.21, 2.28},
           {0.73, 0.37, 1.83, 1.28, 0, 0.73, 95.06}}},
         95.18,
         94.96},
        {"RandomForest",
         {{{84.16, 0, 7.72, 0.68, 1.47, 5.38, 0.59},
           {0, 99.12, 0, 0, 0.39, 0, 0.49},
           {6.17, 0, 71.17, 0.33, 0.67, 1.83, 19.83},
           {0.78, 8.57, 0, 32.55, 15.41, 0, 42.68},
           {0, 0.84, 0, 0.21, 98.74, 0, 0.21},
           {27.81, 0, 6.84, 2.89, 0, 40.96, 21.49},
           {6.99, 4.56, 11.36, 10.87, 7.18, 4.37, 54.66}}},
         68.76,
         67.15},
        {"VGG16",
         {{{95.31, 0.2, 1.56, 0, 1.76, 1.08, 0.1},
           {0, 99.51, 0, 0, 0.1, 0, 0.39},
           {1.96, 0, 85.71, 0, 0, 0.1, 12.23},
           {0.17, 6.56, 0.35, 87.58, 0.26, 4.92, 0.17},
           {0, 0.21, 0, 0, 99.48, 0, 0.31},
           {1.49, 0.61, 0, 5.27, 0, 90.87, 1.76},
           {0.91, 0.82, 0.18, 0.73, 0.09, 2.2, 95.06}}},
         93.59,
         93.17},
        {"AlexNet",
         {{{85.92, 0.29, 2.05, 0, 9.68, 1.86, 0.2},
           {0, 99.9, 0, 0, 0, 0, 0.1},
           {1.57, 0, 84.54, 0.39, 0, 1.86, 11.64},
           {0, 9.92, 0, 74.55, 0.52, 3.28, 11.73},
           {0, 1.36, 0, 0, 98.64, 0, 0},
           {5.61, 0, 1.32, 4.21, 0.09, 86.49, 2.28},
           {3.39, 0.73, 0.64, 1.65, 0.55, 0.73, 92.31}}},
         88.55,
         88.91},
        {"ResNet50",
         {{{86.12, 0.1, 2.15, 0, 9.68, 0.49, 1.47},
           {0, 96.67, 0, 0.1, 0, 0, 3.23},
           {1.17, 0, 90.22, 0, 0.2, 0.1, 8.32},
           {0.26, 6.21, 0, 89.99, 0.26, 0, 3.28},
           {0, 0, 0, 0, 100, 0, 0},
           {1.49, 0, 0.35, 3.6, 0, 79.37, 15.19},
           {0.09, 0.18, 0.09, 0.37, 0, 0, 99.27}}},
         91.43,
         91.66},
    };
}

// Rows AlexNet, ResNet50, VGG16, SqueezeNet; columns in kAllCropKinds order.
constexpr double kAblation[4][4] = {
    {88.91, 82.08, 75.56, 62.21},
    {91.66, 89.34, 86.67, 87.04},
    {93.36, 92.74, 91.21, 88.92},
    {95.18, 94.81, 92.74, 89.37},
};

int ablation_row(Family f) {
    switch (f) {
        case Family::AlexNet: return 0;
        case Family::ResNet50: return 1;
        case Family::VGG16: return 2;
        case Family::SqueezeNet: return 3;
    }
    return -1;
}

std::optional<Family> family_of(const std::string& model) {
    try {
        return models::parse_family(model);
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

const std::vector<PublishedConfusion>& published_confusions() {
    static const std::vector<PublishedConfusion> tables = make_confusions();
    return tables;
}

const PublishedConfusion& published_confusion(const std::string& model) {
    for (const auto& t : published_confusions()) {
        if (t.model == model) return t;
    }
    throw EvalError("no published confusion matrix for " + model);
}

std::optional<double> published_ablation(Family family, CropKind kind) {
    const int r = ablation_row(family);
    const auto it = std::find(preprocess::kAllCropKinds.begin(), preprocess::kAllCropKinds.end(), kind);
    if (r < 0 || it == preprocess::kAllCropKinds.end()) return std::nullopt;
    return kAblation[r][it - preprocess::kAllCropKinds.begin()];
}

std::optional<double> published_resolution(int side) {
    switch (side) {
        case 224: return 89.37;
        case 448: return 90.78;
        case 625: return 92.13;
        default: return std::nullopt;
    }
}

const std::vector<PublishedRuntime>& published_runtimes() {
    static const std::vector<PublishedRuntime> rows = {
        {Family::AlexNet, 227, 2.3},    {Family::VGG16, 224, 10.0},      {Family::ResNet50, 224, 17.0},
        {Family::SqueezeNet, 224, 2.5}, {Family::SqueezeNet, 448, 4.0}, {Family::SqueezeNet, 625, 6.0},
    };
    return rows;
}

ConfusionMatrix counts_from_percentages(const PercentMatrix& percent, const std::array<std::int64_t, kNumZones>& rows) {
    ConfusionMatrix cm(kNumZones);
    for (int i = 0; i < kNumZones; ++i) {
        const auto n = rows[i];
        if (n < 0) throw EvalError("negative row total for " + cm.class_name(i));
        const auto diag = std::min<std::int64_t>(
            n, static_cast<std::int64_t>(std::floor(percent[i][i] * static_cast<double>(n) / 100.0 + 0.5 + 1e-9)));
        cm.add(i, i, diag);
        const std::int64_t rest = n - diag;
        double off_total = 0.0;
        for (int j = 0; j < kNumZones; ++j) {
            if (j != i) off_total += percent[i][j];
        }
        if (rest == 0) continue;
        if (!(off_total > 0.0)) {
            throw EvalError(cm.class_name(i) + " row has " + std::to_string(rest) +
                            " frames left but no off-diagonal mass");
        }
        std::array<std::int64_t, kNumZones> base{};
        std::array<double, kNumZones> frac{};
        std::int64_t assigned = 0;
        for (int j = 0; j < kNumZones; ++j) {
            if (j == i) continue;
            const double share = static_cast<double>(rest) * percent[i][j] / off_total;
            base[j] = static_cast<std::int64_t>(std::floor(share));
            frac[j] = share - static_cast<double>(base[j]);
            assigned += base[j];
        }
        std::array<int, kNumZones - 1> order{};
        int k = 0;
        for (int j = 0; j < kNumZones; ++j) {
            if (j != i) order[k++] = j;
        }
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
        for (std::int64_t left = rest - assigned, idx = 0; left > 0; --left, ++idx) ++base[order[idx]];
        for (int j = 0; j < kNumZones; ++j) {
            if (j != i && base[j] > 0) cm.add(i, j, base[j]);
        }
    }
    return cm;
}

ConfusionMatrix counts_by_cell_rounding(const PercentMatrix& percent, const std::array<std::int64_t, kNumZones>& rows) {
    ConfusionMatrix cm(kNumZones);
    for (int i = 0; i < kNumZones; ++i) {
        for (int j = 0; j < kNumZones; ++j) {
            const auto c = static_cast<std::int64_t>(std::floor(percent[i][j] * static_cast<double>(rows[i]) / 100.0 + 0.5));
            if (c > 0) cm.add(i, j, c);
        }
    }
    return cm;
}

std::vector<CrossCheckEntry> cross_check_published(double tolerance) {
    std::vector<CrossCheckEntry> out;
    for (const auto& t : published_confusions()) {
        CrossCheckEntry e;
        e.model = t.model;
        e.caption_macro = t.caption_macro;
        e.caption_micro = t.caption_micro;
        double diag = 0.0;
        for (int i = 0; i < kNumZones; ++i) {
            diag += t.percent[i][i];
            e.row_sums.push_back(std::accumulate(t.percent[i].begin(), t.percent[i].end(), 0.0));
        }
        e.diagonal_mean = diag / kNumZones;
        if (const auto f = family_of(t.model)) e.ablation_half_face = published_ablation(*f, CropKind::HalfFace);

        const bool macro_ok = std::abs(e.diagonal_mean - e.caption_macro) <= tolerance;
        if (!macro_ok) {
            e.flagged = true;
            e.notes.push_back("diagonal mean " + fmt2(e.diagonal_mean) + " differs from caption macro " +
                              fmt2(e.caption_macro));
            if (std::abs(e.diagonal_mean - e.caption_micro) <= tolerance) {
                e.notes.push_back("diagonal mean matches caption micro; the caption labels look swapped");
            }
        }
        if (e.ablation_half_face && std::abs(e.diagonal_mean - *e.ablation_half_face) > tolerance) {
            e.flagged = true;
            e.notes.push_back("diagonal mean differs from the HalfFace ablation entry " + fmt2(*e.ablation_half_face));
        }
        for (int i = 0; i < kNumZones; ++i) {
            if (std::abs(e.row_sums[i] - 100.0) > 0.05) {
                e.notes.push_back("row " + std::string(zone_name(zone_from_ordinal(i))) + " sums to " +
                                  fmt2(e.row_sums[i]));
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

nlohmann::json to_json(const std::vector<CrossCheckEntry>& entries) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json j = {{"model", e.model},
                            {"diagonal_mean", e.diagonal_mean},
                            {"caption_macro", e.caption_macro},
                            {"caption_micro", e.caption_micro},
                            {"row_sums", e.row_sums},
                            {"flagged", e.flagged},
                            {"notes", e.notes}};
        j["ablation_half_face"] = e.ablation_half_face ? nlohmann::json(*e.ablation_half_face) : nlohmann::json();
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace gazezone::eval
