#include "gazezone/evaluation/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include <spdlog/fmt/fmt.h>

#include "gazezone/preprocess/face_detector.hpp"

namespace gazezone::eval {

namespace {

void check_counts(int iterations, int warmup) {
    if (iterations < kMinBenchmarkIterations) {
        throw EvalError("benchmark needs at least " + std::to_string(kMinBenchmarkIterations) +
                        " timed iterations, got " + std::to_string(iterations));
    }
    if (warmup < 0) throw EvalError("warmup must be nonnegative");
}

void finish(BenchmarkResult& r) {
    r.mean_ms = std::accumulate(r.samples_ms.begin(), r.samples_ms.end(), 0.0) / static_cast<double>(r.samples_ms.size());
    r.p50_ms = percentile(r.samples_ms, 50.0);
    r.p95_ms = percentile(r.samples_ms, 95.0);
}

std::optional<PublishedRuntime> published_for(models::Family f, int side) {
    for (const auto& p : published_runtimes()) {
        if (p.family == f && p.resolution == side) return p;
    }
    return std::nullopt;
}

template <class F>
std::vector<double> time_loop(int iterations, int warmup, F&& body) {
    for (int i = 0; i < warmup; ++i) body(i);
    std::vector<double> ms;
    ms.reserve(iterations);
    for (int i = 0; i < iterations; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        body(warmup + i);
        const auto t1 = std::chrono::steady_clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return ms;
}

}  // namespace

double percentile(std::span<const double> samples, double q) {
    if (samples.empty()) throw EvalError("percentile of an empty sample");
    if (!(q > 0.0 && q <= 100.0)) throw EvalError("percentile rank must lie in (0, 100]");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(s.size())));
    return s[std::max<std::size_t>(rank, 1) - 1];
}

nlohmann::json BenchmarkResult::to_json() const {
    nlohmann::json j = {{"family", family},         {"resolution", resolution}, {"iterations", iterations},
                        {"warmup", warmup},         {"end_to_end", end_to_end}, {"mean_ms", mean_ms},
                        {"p50_ms", p50_ms},         {"p95_ms", p95_ms},         {"samples_ms", samples_ms}};
    if (published) {
        j["published"] = {{"milliseconds", published->milliseconds}, {"hardware", kPublishedRuntimeHardware}};
    }
    return j;
}

std::string BenchmarkResult::summary() const {
    std::string s = fmt::format("{} @{}{}: mean {:.2f} ms, p50 {:.2f} ms, p95 {:.2f} ms over {} runs", family,
                                resolution, end_to_end ? " end-to-end" : "", mean_ms, p50_ms, p95_ms, iterations);
    if (published) {
        s += fmt::format(" [published {:.1f} ms on {}, not comparable]", published->milliseconds,
                         kPublishedRuntimeHardware);
    }
    return s;
}

BenchmarkResult benchmark_inference(const models::GazeModel& model, int side, int iterations, int warmup,
                                    std::uint64_t seed) {
    check_counts(iterations, warmup);
    model.check_input(side, side);
    preprocess::NetworkInput input;
    input.height = side;
    input.width = side;
    input.pixels.resize(static_cast<std::size_t>(side) * side * 3);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-120.f, 130.f);
    for (auto& v : input.pixels) v = u(rng);

    BenchmarkResult r;
    r.family = std::string(models::family_name(model.spec().family));
    r.resolution = side;
    r.iterations = iterations;
    r.warmup = warmup;
    volatile double sink = 0.0;
    r.samples_ms = time_loop(iterations, warmup, [&](int) { sink = sink + model.forward(input).logits[0]; });
    finish(r);
    r.published = published_for(model.spec().family, side);
    return r;
}

BenchmarkResult benchmark_end_to_end(const models::GazeModel& model, const std::vector<preprocess::Frame>& frames,
                                     const preprocess::PatchProvider& provider,
                                     const preprocess::CameraProfile& profile, int iterations, int warmup) {
    check_counts(iterations, warmup);
    if (frames.empty()) throw EvalError("end-to-end benchmark needs at least one frame");
    BenchmarkResult r;
    r.family = std::string(models::family_name(model.spec().family));
    r.resolution = provider.config().target;
    r.iterations = iterations;
    r.warmup = warmup;
    r.end_to_end = true;
    volatile double sink = 0.0;
    r.samples_ms = time_loop(iterations, warmup, [&](int i) {
        const auto& f = frames[static_cast<std::size_t>(i) % frames.size()];
        try {
            sink = sink + model.forward(provider.from_frame(f, profile)).logits[0];
        } catch (const preprocess::NoFaceError&) {
        }
    });
    finish(r);
    return r;
}

}  // namespace gazezone::eval
