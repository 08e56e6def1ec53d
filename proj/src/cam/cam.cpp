#include "gazezone/cam/cam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace gazezone::cam {

double CamStack::spatial_mean(GazeZone z) const {
    const auto& m = maps[ordinal(z)];
    if (m.empty()) throw CamError("empty class map");
    double s = 0.0;
    for (float v : m) s += v;
    return s / static_cast<double>(m.size());
}

CamStack extract_cams(const models::GazeModel& model, const preprocess::NetworkInput& input, std::string source) {
    if (model.spec().head_kind != models::HeadKind::ConvGap) {
        throw CamError(std::string(models::family_name(model.spec().family)) +
                       " has a fully connected head; class activation maps need a conv_gap model");
    }
    models::ForwardResult r = model.forward(input);
    const nn::Tensor& f = r.features;
    if (f.c() != kNumZones) {
        throw CamError("final convolution has " + std::to_string(f.c()) + " channels, expected " +
                       std::to_string(kNumZones) + " class maps");
    }
    CamStack cams;
    cams.height = f.h();
    cams.width = f.w();
    const std::size_t plane = static_cast<std::size_t>(f.h()) * f.w();
    for (int k = 0; k < kNumZones; ++k) {
        cams.maps[k].assign(f.data() + k * plane, f.data() + (k + 1) * plane);
    }
    cams.logits = r.logits;
    cams.predicted = argmax_zone(r.distribution);
    cams.source = std::move(source);
    return cams;
}

std::vector<float> normalize_map(std::span<const float> map) {
    if (map.empty()) throw CamError("empty map");
    const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
    std::vector<float> out(map.size(), 0.5f);
    const float range = *hi - *lo;
    if (!(range > 0.f)) return out;
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = (map[i] - *lo) / range;
    return out;
}

std::vector<float> upsample(std::span<const float> map, int width, int height, int out_width, int out_height) {
    if (map.size() != static_cast<std::size_t>(width) * height) throw CamError("map size does not match its extent");
    return preprocess::resize_bilinear(map, width, height, 1, out_width, out_height);
}

std::array<std::uint8_t, 3> jet(float v) {
    v = std::clamp(v, 0.f, 1.f);
    auto ch = [&](float centre) {
        const float x = std::clamp(1.5f - std::abs(4.f * v - centre), 0.f, 1.f);
        return static_cast<std::uint8_t>(std::lround(255.f * x));
    };
    return {ch(3.f), ch(2.f), ch(1.f)};
}

preprocess::Image render_overlay(std::span<const float> map, int width, int height, const preprocess::Image& source,
                                 double alpha) {
    const auto norm = normalize_map(map);
    const auto up = upsample(norm, width, height, source.width, source.height);
    preprocess::Image out = source;
    const auto a = static_cast<float>(alpha);
    for (std::size_t i = 0; i < up.size(); ++i) {
        const auto c = jet(up[i]);
        for (int k = 0; k < 3; ++k) {
            const float v = (1.f - a) * source.rgb[i * 3 + k] + a * c[k];
            out.rgb[i * 3 + k] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return out;
}

preprocess::Image render_overlay(const CamStack& cams, GazeZone zone, const preprocess::Image& source, double alpha) {
    return render_overlay(cams.map(zone), cams.width, cams.height, source, alpha);
}

preprocess::Image patch_image(const preprocess::NetworkInput& input, const preprocess::ChannelMeans& means) {
    preprocess::Image img;
    img.width = input.width;
    img.height = input.height;
    img.rgb.resize(input.pixels.size());
    for (std::size_t i = 0; i < input.pixels.size(); ++i) {
        img.rgb[i] = static_cast<std::uint8_t>(std::clamp(std::lround(input.pixels[i] + means[i % 3]), 0L, 255L));
    }
    return img;
}

nlohmann::json export_overlays(const CamStack& cams, const preprocess::Image& source, const std::filesystem::path& dir,
                               const std::string& stem, double alpha) {
    std::filesystem::create_directories(dir);
    nlohmann::json maps = nlohmann::json::object();
    for (GazeZone z : kAllZones) {
        const std::string name = stem + "_" + std::string(zone_name(z)) + ".png";
        preprocess::save_image(render_overlay(cams, z, source, alpha), dir / name);
        maps[std::string(zone_name(z))] = {{"logit", cams.logits[ordinal(z)]}, {"overlay", name}};
    }
    const nlohmann::json side = {{"source", cams.source},
                                 {"predicted_zone", zone_name(cams.predicted)},
                                 {"map_height", cams.height},
                                 {"map_width", cams.width},
                                 {"alpha", alpha},
                                 {"colormap", "jet"},
                                 {"maps", maps}};
    std::ofstream out(dir / (stem + ".json"));
    if (!out) throw CamError("cannot write " + (dir / (stem + ".json")).string());
    out << side.dump(2) << '\n';
    return side;
}

preprocess::Image grid_sheet(const std::vector<std::vector<preprocess::Image>>& rows, int cell_size, int pad) {
    if (rows.empty() || cell_size < 1 || pad < 0) throw CamError("grid needs rows and a positive cell size");
    std::size_t cols = 0;
    for (const auto& r : rows) cols = std::max(cols, r.size());
    preprocess::Image sheet;
    sheet.width = static_cast<int>(cols) * (cell_size + pad) + pad;
    sheet.height = static_cast<int>(rows.size()) * (cell_size + pad) + pad;
    sheet.rgb.assign(static_cast<std::size_t>(sheet.width) * sheet.height * 3, 255);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const auto& img = rows[r][c];
            if (img.width == 0 || img.height == 0) continue;
            const std::vector<float> src(img.rgb.begin(), img.rgb.end());
            const auto cell = preprocess::resize_bilinear(src, img.width, img.height, 3, cell_size, cell_size);
            const int ox = pad + static_cast<int>(c) * (cell_size + pad);
            const int oy = pad + static_cast<int>(r) * (cell_size + pad);
            for (int y = 0; y < cell_size; ++y) {
                for (int x = 0; x < cell_size; ++x) {
                    for (int k = 0; k < 3; ++k) {
                        const float v = cell[(static_cast<std::size_t>(y) * cell_size + x) * 3 + k];
                        sheet.rgb[(static_cast<std::size_t>(oy + y) * sheet.width + ox + x) * 3 + k] =
                            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
                    }
                }
            }
        }
    }
    return sheet;
}

double hotspot_iou(std::span<const float> map, int map_width, int map_height, int width, int height,
                   const std::vector<BBox>& mask, double top_fraction) {
    if (!(top_fraction > 0.0 && top_fraction <= 1.0)) throw CamError("top_fraction must lie in (0, 1]");
    const auto up = upsample(map, map_width, map_height, width, height);
    const std::size_t n = up.size();
    const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(top_fraction * n)));
    std::vector<float> sorted = up;
    std::nth_element(sorted.begin(), sorted.begin() + (n - keep), sorted.end());
    const float threshold = sorted[n - keep];

    std::vector<char> in_mask(n, 0);
    for (const auto& b : mask) {
        for (int y = std::max(0, b.y); y < std::min(height, b.y + b.h); ++y) {
            for (int x = std::max(0, b.x); x < std::min(width, b.x + b.w); ++x) {
                in_mask[static_cast<std::size_t>(y) * width + x] = 1;
            }
        }
    }
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool hot = up[i] >= threshold;
        inter += hot && in_mask[i];
        uni += hot || in_mask[i];
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace gazezone::cam
