#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "gazezone/cam/cam.hpp"
#include "gazezone/synth/synthetic.hpp"
#include "support.hpp"

using namespace gazezone;
using namespace gazezone::cam;

namespace {

preprocess::NetworkInput random_input(std::mt19937_64& rng, int side) {
    preprocess::NetworkInput in;
    in.height = in.width = side;
    in.pixels.resize(static_cast<std::size_t>(side) * side * 3);
    std::uniform_real_distribution<float> u(-120.f, 130.f);
    for (auto& v : in.pixels) v = u(rng);
    return in;
}

models::GazeModel squeeze(bool variable = true) {
    auto m = models::adapt_head(models::BackboneSpec::standard(models::Family::SqueezeNet, "synthetic:2", 8), 2);
    return variable ? models::make_variable_resolution(std::move(m)) : m;
}

}  // namespace

TEST_CASE("class maps average to the logits") {
    std::mt19937_64 rng(21);
    const auto model = squeeze();
    for (int t = 0; t < 20; ++t) {
        const int side = testing::uniform_int(rng, 0, 1) ? 224 : testing::uniform_int(rng, 64, 300);
        const auto cams = extract_cams(model, random_input(rng, side), "x");
        CHECK(cams.source == "x");
        for (GazeZone z : kAllZones) {
            const double logit = cams.logits[ordinal(z)];
            CHECK(std::abs(cams.spatial_mean(z) - logit) <= 1e-4 * std::max(1.0, std::abs(logit)));
        }
        const auto best = std::max_element(cams.logits.begin(), cams.logits.end()) - cams.logits.begin();
        CHECK(ordinal(cams.predicted) == best);
    }
}

TEST_CASE("fully connected heads have no class maps") {
    std::mt19937_64 rng(22);
    for (auto f : {models::Family::AlexNet, models::Family::VGG16, models::Family::ResNet50}) {
        const auto model = models::adapt_head(models::BackboneSpec::standard(f, "synthetic:1", 16), 1);
        try {
            extract_cams(model, random_input(rng, model.spec().native_input));
            FAIL("expected CamError");
        } catch (const CamError& e) {
            CHECK(std::string(e.what()).find("conv_gap") != std::string::npos);
        }
    }
}

TEST_CASE("map normalisation") {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 200; ++t) {
        std::vector<float> m(static_cast<std::size_t>(testing::uniform_int(rng, 1, 80)));
        for (auto& v : m) v = static_cast<float>(testing::uniform_real(rng, -50, 50));
        const auto n = normalize_map(m);
        const auto [lo, hi] = std::minmax_element(n.begin(), n.end());
        if (m.size() > 1 && *std::max_element(m.begin(), m.end()) > *std::min_element(m.begin(), m.end())) {
            CHECK(*lo == 0.f);
            CHECK(*hi == doctest::Approx(1.f));
        }
        for (std::size_t i = 0; i + 1 < m.size(); ++i) {
            if (m[i] < m[i + 1]) CHECK(n[i] <= n[i + 1]);
        }
    }
    const std::vector<float> flat(9, 3.f);
    for (float v : normalize_map(flat)) CHECK(v == 0.5f);
    CHECK_THROWS_AS(normalize_map(std::vector<float>{}), CamError);
}

TEST_CASE("jet colormap endpoints") {
    CHECK(jet(0.f) == std::array<std::uint8_t, 3>{0, 0, 128});
    CHECK(jet(0.5f) == std::array<std::uint8_t, 3>{128, 255, 128});
    CHECK(jet(1.f) == std::array<std::uint8_t, 3>{128, 0, 0});
    CHECK(jet(-3.f) == jet(0.f));
    CHECK(jet(7.f) == jet(1.f));
}

TEST_CASE("overlay blending") {
    preprocess::Image src(8, 6, 100);
    const std::vector<float> map = {0.f, 1.f, 2.f, 3.f};
    const auto none = render_overlay(map, 2, 2, src, 0.0);
    CHECK(none.rgb == src.rgb);
    const auto full = render_overlay(map, 2, 2, src, 1.0);
    CHECK(full.width == 8);
    CHECK(full.height == 6);
    const auto c = jet(0.f);
    for (int k = 0; k < 3; ++k) CHECK(full.rgb[k] == c[k]);
    const auto half = render_overlay(map, 2, 2, src, 0.5);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(int(half.rgb[k]) - int(std::lround(0.5 * 100 + 0.5 * c[k]))) <= 1);
    CHECK_THROWS_AS(render_overlay(map, 3, 2, src, 0.5), CamError);
}

TEST_CASE("hotspot IoU") {
    // Peak in the top-left quadrant of a 4x4 map.
    std::vector<float> map(16, 0.f);
    map[0] = map[1] = map[4] = map[5] = 1.f;
    const std::vector<BBox> on = {{0, 0, 20, 20}};
    const std::vector<BBox> off = {{20, 20, 20, 20}};
    CHECK(hotspot_iou(map, 4, 4, 40, 40, on, 0.25) > 0.5);
    CHECK(hotspot_iou(map, 4, 4, 40, 40, off, 0.25) == 0.0);
    CHECK(hotspot_iou(map, 4, 4, 40, 40, {{0, 0, 40, 40}}, 1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(hotspot_iou(map, 4, 4, 40, 40, on, 0.0), CamError);
}

TEST_CASE("overlay export and grid sheet") {
    std::mt19937_64 rng(24);
    testing::TempDir dir("cam");
    const auto model = squeeze();
    const auto input = random_input(rng, 96);
    const auto cams = extract_cams(model, input, "frame.png");
    const auto patch = patch_image(input);
    CHECK(patch.width == 96);
    const auto side = export_overlays(cams, patch, dir.path(), "frame_0");
    for (GazeZone z : kAllZones) {
        CHECK(std::filesystem::exists(dir / ("frame_0_" + std::string(zone_name(z)) + ".png")));
    }
    std::ifstream in(dir / "frame_0.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j == side);
    CHECK(j.at("predicted_zone") == zone_name(cams.predicted));
    CHECK(j.at("maps").size() == kNumZones);
    CHECK(j.at("maps").at("Forward").at("logit").get<double>() == doctest::Approx(cams.logits[0]));
    const auto img = preprocess::load_image(dir / "frame_0_Forward.png");
    CHECK(img.width == 96);

    const auto sheet = grid_sheet({{patch, patch}, {patch}}, 32, 2);
    CHECK(sheet.width == 2 * 34 + 2);
    CHECK(sheet.height == 2 * 34 + 2);
    CHECK_THROWS_AS(grid_sheet({}, 32), CamError);
}

TEST_CASE("synthetic frames are reproducible and eyes sit inside the face") {
    synth::SynthOptions o;
    std::mt19937_64 rng(25);
    for (int t = 0; t < 30; ++t) {
        const int subject = testing::uniform_int(rng, 0, 9);
        const auto zone = zone_from_ordinal(testing::uniform_int(rng, 0, 6));
        const auto seed = rng();
        BBox face, face2;
        std::array<BBox, 2> eyes{}, eyes2{};
        const auto a = synth::render(o, subject, zone, seed, &face, &eyes);
        const auto b = synth::render(o, subject, zone, seed, &face2, &eyes2);
        CHECK(a.rgb == b.rgb);
        CHECK(face == face2);
        CHECK(a.width == o.width);
        for (const auto& e : eyes) {
            CHECK(e.x >= face.x);
            CHECK(e.y >= face.y);
            CHECK(e.x + e.w <= face.x + face.w);
            CHECK(e.y + e.h <= face.y + face.h);
        }
    }
}
