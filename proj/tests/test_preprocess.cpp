#include <doctest.h>

#include <cmath>
#include <fstream>

#include "gazezone/preprocess/crop.hpp"
#include "gazezone/preprocess/face_detector.hpp"
#include "gazezone/preprocess/image.hpp"
#include "gazezone/preprocess/normalize.hpp"
#include "support.hpp"

using namespace gazezone;
using namespace gazezone::preprocess;

namespace {

CameraProfile profile(int w, int h) {
    CameraProfile p;
    p.profile_id = "car";
    p.frame_width = w;
    p.frame_height = h;
    p.fov_rect = {0.0, 0.0, 0.5, 1.0};
    p.driver_side_anchor = {0.25, 0.5};
    return p;
}

Image random_image(std::mt19937_64& rng, int w, int h) {
    Image img(w, h);
    for (auto& v : img.rgb) v = static_cast<std::uint8_t>(testing::uniform_int(rng, 0, 255));
    return img;
}

CropStrategy strategy(CropKind kind, double expand = 0.5, FracRect fov = {0, 0, 0.5, 1.0}) {
    CropStrategy s;
    s.kind = kind;
    s.context_expand = expand;
    s.fov_rect = fov;
    return s;
}

}  // namespace

TEST_CASE("resolve_crop examples") {
    const BBox face{100, 80, 200, 200};
    CHECK(resolve_crop(2704, 1524, face, strategy(CropKind::Face)) == face);
    CHECK(resolve_crop(2704, 1524, face, strategy(CropKind::HalfFace)) == BBox{100, 80, 200, 100});
    CHECK(resolve_crop(2704, 1524, face, strategy(CropKind::FaceContext, 0.5)) == BBox{0, 0, 400, 400});
    CHECK(resolve_crop(2704, 1524, std::nullopt, strategy(CropKind::FaceEmbeddedFoV)) == BBox{0, 0, 1352, 1524});
    CHECK(resolve_crop(640, 480, BBox{10, 10, 20, 1}, strategy(CropKind::HalfFace)).h == 1);
}

TEST_CASE("face strategies require a face box") {
    for (CropKind k : {CropKind::HalfFace, CropKind::Face, CropKind::FaceContext}) {
        CHECK_THROWS_AS(resolve_crop(640, 480, std::nullopt, strategy(k)), CropError);
    }
    CHECK_THROWS_AS(strategy(CropKind::FaceContext, -0.1).validate(), CropError);
    CHECK_THROWS_AS(strategy(CropKind::FaceEmbeddedFoV, 0.5, {0.6, 0, 0.5, 1}).validate(), CropError);
}

TEST_CASE("crop strategy names") {
    for (CropKind k : kAllCropKinds) CHECK(parse_crop_kind(crop_kind_name(k)) == k);
    try {
        parse_crop_kind("Eyes");
        FAIL("expected CropError");
    } catch (const CropError& e) {
        CHECK(std::string(e.what()).find("FaceEmbeddedFoV") != std::string::npos);
    }
}

TEST_CASE("crop algebra over random frames and faces (property)") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 2000; ++trial) {
        const int W = testing::uniform_int(rng, 32, 3000), H = testing::uniform_int(rng, 32, 2000);
        const int w = testing::uniform_int(rng, 2, W), h = testing::uniform_int(rng, 2, H);
        const BBox face{testing::uniform_int(rng, 0, W - w), testing::uniform_int(rng, 0, H - h), w, h};
        const double expand = testing::uniform_real(rng, 0.0, 1.5);
        const BBox half = resolve_crop(W, H, face, strategy(CropKind::HalfFace));
        const BBox full = resolve_crop(W, H, face, strategy(CropKind::Face));
        const BBox ctx = resolve_crop(W, H, face, strategy(CropKind::FaceContext, expand));
        const double fx = testing::uniform_real(rng, 0, 0.9), fy = testing::uniform_real(rng, 0, 0.9);
        const FracRect fr{fx, fy, testing::uniform_real(rng, 0.05, 1 - fx), testing::uniform_real(rng, 0.05, 1 - fy)};
        const BBox fov = resolve_crop(W, H, std::nullopt, strategy(CropKind::FaceEmbeddedFoV, 0.5, fr));
        for (const BBox& b : {half, full, ctx, fov}) CHECK(b.inside(W, H));
        CHECK(std::abs(2 * half.area() - full.area()) <= full.w);
        const int ex = static_cast<int>(std::floor(expand * w + 0.5)), ey = static_cast<int>(std::floor(expand * h + 0.5));
        const bool unclamped = face.x - ex >= 0 && face.y - ey >= 0 && face.right() + ex <= W && face.bottom() + ey <= H;
        if (unclamped && ex > 0 && ey > 0) {
            CHECK(ctx.contains(full));
            CHECK(ctx.area() > full.area());
        }
        CHECK(ctx.contains(full));
    }
}

TEST_CASE("detect_driver_face picks the detection nearest the anchor") {
    const Frame frame{"f", Image(640, 480)};
    const auto prof = profile(640, 480);
    const BBox driver{100, 200, 80, 80}, passenger{450, 200, 80, 80};
    CallableDetector one([&](const Frame&) { return std::vector<Detection>{{passenger, 0.9}}; });
    CHECK(detect_driver_face(frame, prof, one) == passenger);
    CallableDetector two([&](const Frame&) { return std::vector<Detection>{{passenger, 0.99}, {driver, 0.5}}; });
    // Anchor (160, 240): driver centre is 0 px away, passenger 330 px.
    CHECK(detect_driver_face(frame, prof, two) == driver);
    CallableDetector none([](const Frame&) { return std::vector<Detection>{}; });
    CHECK_THROWS_AS(detect_driver_face(frame, prof, none), NoFaceError);
}

TEST_CASE("normalize: shape, mean subtraction, determinism and errors") {
    std::mt19937_64 rng(4);
    const Image img = random_image(rng, 300, 200);
    const auto a = normalize(img, {10, 20, 150, 120}, 227, kImageNetMeans);
    CHECK(a.height == 227);
    CHECK(a.width == 227);
    CHECK(a.pixels.size() == 227u * 227u * 3u);
    CHECK(a.source == BBox{10, 20, 150, 120});
    const auto b = normalize(img, {10, 20, 150, 120}, 227, kImageNetMeans);
    CHECK(a.pixels == b.pixels);

    Image gray(64, 48);
    const ChannelMeans means = {100.f, 120.f, 140.f};
    for (std::size_t i = 0; i < gray.rgb.size(); ++i) gray.rgb[i] = static_cast<std::uint8_t>(means[i % 3]);
    const auto z = normalize(gray, {0, 0, 64, 48}, 224, means);
    for (float v : z.pixels) CHECK(v == 0.f);

    CHECK_THROWS_AS(normalize(img, {0, 0, 0, 10}, 224, kImageNetMeans), CropError);
    CHECK_THROWS_AS(normalize(img, {250, 0, 100, 10}, 224, kImageNetMeans), CropError);
}

TEST_CASE("normalized patches are centred when pixels are centred on the means (property)") {
    std::mt19937_64 rng(8);
    const ChannelMeans means = {123.f, 117.f, 104.f};
    std::array<double, 3> sum{};
    std::size_t n = 0;
    for (int trial = 0; trial < 40; ++trial) {
        Image img(64, 64);
        for (std::size_t i = 0; i < img.rgb.size(); ++i) {
            img.rgb[i] = static_cast<std::uint8_t>(means[i % 3] + testing::uniform_int(rng, -100, 100));
        }
        const auto x = normalize(img, {testing::uniform_int(rng, 0, 20), testing::uniform_int(rng, 0, 20), 40, 40}, 32,
                                 means);
        for (std::size_t i = 0; i < x.pixels.size(); ++i) sum[i % 3] += x.pixels[i];
        n += x.pixels.size() / 3;
    }
    for (double s : sum) CHECK(std::abs(s / n) < 1.0);
}

TEST_CASE("bilinear resize uses half-pixel centres with edge clamping") {
    const std::vector<float> src = {0.f, 100.f};
    const auto out = resize_bilinear(src, 2, 1, 1, 4, 1);
    REQUIRE(out.size() == 4);
    CHECK(out[0] == doctest::Approx(0.0));
    CHECK(out[1] == doctest::Approx(25.0));
    CHECK(out[2] == doctest::Approx(75.0));
    CHECK(out[3] == doctest::Approx(100.0));
    std::mt19937_64 rng(1);
    std::vector<float> r(5 * 7 * 3);
    for (auto& v : r) v = static_cast<float>(testing::uniform_real(rng, 0, 255));
    CHECK(resize_bilinear(r, 5, 7, 3, 5, 7) == r);
}

TEST_CASE("PNG round trip is lossless") {
    testing::TempDir dir("png");
    std::mt19937_64 rng(3);
    const Image img = random_image(rng, 33, 17);
    save_image(img, dir / "x.png");
    CHECK(load_image(dir / "x.png") == img);
    CHECK_THROWS_AS(load_image(dir / "missing.png"), Error);
    const Image c = crop(img, {1, 2, 5, 6});
    CHECK(c.width == 5);
    CHECK(c.at(0, 0)[1] == img.at(1, 2)[1]);
}

TEST_CASE("camera profile JSON round trip and validation") {
    testing::TempDir dir("profile");
    const auto p = profile(2704, 1524);
    write_camera_profile(p, dir / "p.json");
    const auto q = read_camera_profile(dir / "p.json");
    CHECK(q.profile_id == p.profile_id);
    CHECK(q.frame_width == 2704);
    CHECK(q.fov_rect.w == doctest::Approx(0.5));
    CHECK(q.driver_side_anchor[0] == doctest::Approx(0.25));
    auto bad = p;
    bad.fov_rect = {0.5, 0, 0.6, 1};
    CHECK_THROWS_AS(bad.validate(), CropError);
}

TEST_CASE("patch provider: detection, NoFace, cache and memo") {
    testing::TempDir dir("provider");
    std::mt19937_64 rng(6);
    save_image(random_image(rng, 160, 120), dir / "a.png");
    save_image(random_image(rng, 160, 120), dir / "b.png");
    const std::string a = (dir / "a.png").string(), b = (dir / "b.png").string();
    {
        std::ofstream csv(dir / "boxes.csv");
        csv << "frame_path,x,y,w,h,score\na.png,40,30,60,60,0.9\n";
    }
    PatchConfig pc;
    pc.target = 32;
    pc.default_profile = profile(160, 120);
    pc.cache_dir = dir / "cache";
    const auto detector = make_detector("boxes:" + (dir / "boxes.csv").string());
    const PatchProvider provider(pc, detector);
    const auto first = provider.get(a);
    CHECK(first.source == BBox{40, 30, 60, 30});
    CHECK(provider.cache_hits() == 0);
    const auto second = provider.get(a);
    CHECK(provider.cache_hits() == 1);
    CHECK(first.pixels == second.pixels);
    CHECK(first.source == second.source);
    CHECK_THROWS_AS(provider.get(b), NoFaceError);

    pc.kind = CropKind::FaceEmbeddedFoV;
    pc.cache_dir.reset();
    pc.memoize = true;
    const PatchProvider fov(pc, nullptr);
    CHECK(fov.get(b).source == BBox{0, 0, 80, 120});
    CHECK(fov.get(b).source == BBox{0, 0, 80, 120});
    CHECK(fov.cache_hits() == 1);

    pc.kind = CropKind::Face;
    const PatchProvider no_detector(pc, nullptr);
    CHECK_THROWS_AS(no_detector.get(a), NoFaceError);
    CHECK_THROWS_AS(make_detector("magic:x"), Error);
    CHECK_THROWS(make_detector("cascade:" + (dir / "none.xml").string()));
}
