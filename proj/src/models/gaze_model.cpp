#include "gazezone/models/gaze_model.hpp"

#include <algorithm>
#include <filesystem>
#include <random>

#include "gazezone/core/hash.hpp"
#include "gazezone/models/checkpoint.hpp"

namespace gazezone::models {

namespace {

// Pretrained first layers see raw 0-255 pixels; this keeps their
// activations near unit scale.
constexpr float kFirstLayerScale = 1.f / 64.f;

int smallest_trunk_input(const Network& net) {
    for (int s = 1; s <= 4096; ++s) {
        try {
            nn::Shape shape{1, 3, s, s};
            for (std::size_t i = 0; i <= net.feature_index; ++i) shape = net.trunk.at(i).output_shape(shape);
            return s;
        } catch (const Error&) {
        }
    }
    throw ModelError("backbone accepts no input size up to 4096");
}

}  // namespace

GazeModel::GazeModel(BackboneSpec spec, Network network, int classes)
    : spec_(std::move(spec)), network_(std::move(network)), classes_(classes) {}

GazeModel::GazeModel(const GazeModel& other)
    : spec_(other.spec_),
      network_{other.network_.trunk, other.network_.feature_index, other.network_.head_index},
      classes_(other.classes_),
      variable_resolution_(other.variable_resolution_) {}

void GazeModel::check_input(int height, int width) const {
    if (!variable_resolution_) {
        if (height != spec_.native_input || width != spec_.native_input) {
            throw ModelError(std::string(family_name(spec_.family)) + " expects " +
                             std::to_string(spec_.native_input) + "x" + std::to_string(spec_.native_input) +
                             " input, got " + std::to_string(height) + "x" + std::to_string(width) +
                             (spec_.head_kind == HeadKind::FullyConnected
                                  ? " (fully connected layers fix the input resolution)"
                                  : " (convert with make_variable_resolution to accept other sizes)"));
        }
        return;
    }
    const int min = smallest_trunk_input(network_);
    if (height < min || width < min) {
        throw ModelError(std::string(family_name(spec_.family)) + " needs at least " + std::to_string(min) + "x" +
                         std::to_string(min) + " input, got " + std::to_string(height) + "x" + std::to_string(width));
    }
}

nn::Tensor GazeModel::logits(const nn::Tensor& batch, const nn::Context& ctx, nn::Saved* saved,
                             nn::Tensor* features) const {
    if (batch.c() != 3) throw ModelError("input must have 3 channels, got " + std::to_string(batch.c()));
    check_input(batch.h(), batch.w());
    const auto& trunk = network_.trunk;
    if (saved) saved->children.assign(trunk.size(), nn::Saved{});
    nn::Tensor cur = batch;
    for (std::size_t i = 0; i < trunk.size(); ++i) {
        cur = trunk.at(i).forward(cur, ctx, saved ? &saved->children[i] : nullptr);
        if (features && i == network_.feature_index) *features = cur;
    }
    if (cur.c() != classes_ || cur.h() != 1 || cur.w() != 1) {
        throw ModelError("network produced " + nn::to_string(cur.shape()) + ", expected " + std::to_string(classes_) +
                         " logits per sample");
    }
    return cur;
}

void GazeModel::backward(const nn::Tensor& grad_logits, const nn::Saved& saved) {
    network_.trunk.backward(grad_logits, saved);
}

std::vector<ForwardResult> GazeModel::forward(std::span<const preprocess::NetworkInput> inputs,
                                              bool keep_features) const {
    if (classes_ != kNumZones) {
        throw ModelError("model has " + std::to_string(classes_) + " outputs; adapt its head to 7 zones first");
    }
    std::vector<ForwardResult> out;
    if (inputs.empty()) return out;
    nn::Tensor feats;
    const nn::Tensor z = logits(to_tensor(inputs), nn::Context{}, nullptr, keep_features ? &feats : nullptr);
    out.resize(inputs.size());
    for (std::size_t n = 0; n < inputs.size(); ++n) {
        for (int k = 0; k < kNumZones; ++k) out[n].logits[k] = z.at(static_cast<int>(n), k, 0, 0);
        out[n].distribution = ZoneDistribution::softmax(out[n].logits);
        if (keep_features) {
            out[n].features = nn::Tensor(1, feats.c(), feats.h(), feats.w());
            std::copy_n(feats.sample(static_cast<int>(n)), feats.sample_size(), out[n].features.data());
        }
    }
    return out;
}

ForwardResult GazeModel::forward(const preprocess::NetworkInput& input) const {
    return std::move(forward(std::span(&input, 1), true).front());
}

std::vector<nn::Parameter*> GazeModel::parameters() { return network_.trunk.collect_parameters(); }

std::vector<const nn::Parameter*> GazeModel::parameters() const {
    auto params = const_cast<nn::Sequential&>(network_.trunk).collect_parameters();
    return {params.begin(), params.end()};
}

std::vector<nn::Parameter*> GazeModel::head_parameters() { return head().collect_parameters(); }

void GazeModel::zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
}

void GazeModel::replace_head(int classes, std::uint64_t seed) {
    if (classes < 1) throw ModelError("class count must be positive");
    std::mt19937_64 rng(seed);
    auto& old = head();
    const std::string name = network_.trunk.name_at(network_.head_index);
    nn::LayerPtr fresh;
    if (auto* fc = dynamic_cast<nn::Linear*>(&old)) {
        auto layer = std::make_unique<nn::Linear>(fc->in_features(), classes);
        nn::he_init(*layer, rng);
        fresh = std::move(layer);
    } else if (auto* conv = dynamic_cast<nn::Conv2d*>(&old)) {
        auto layer = std::make_unique<nn::Conv2d>(conv->in_channels(), classes, 1);
        nn::he_init(*layer, rng);
        fresh = std::move(layer);
    } else {
        throw ModelError("head layer '" + name + "' is neither fully connected nor a 1x1 convolution");
    }
    fresh->set_names(name + ".");
    network_.trunk.replace(network_.head_index, std::move(fresh));
    classes_ = classes;
}

nn::Tensor to_tensor(std::span<const preprocess::NetworkInput> inputs) {
    if (inputs.empty()) return {};
    const int h = inputs.front().height, w = inputs.front().width;
    nn::Tensor t(static_cast<int>(inputs.size()), 3, h, w);
    for (std::size_t n = 0; n < inputs.size(); ++n) {
        const auto& in = inputs[n];
        if (in.height != h || in.width != w) throw ModelError("batch mixes input sizes");
        if (in.pixels.size() != static_cast<std::size_t>(h) * w * 3) throw ModelError("input pixel buffer size mismatch");
        float* dst = t.sample(static_cast<int>(n));
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        for (std::size_t i = 0; i < plane; ++i) {
            dst[i] = in.pixels[i * 3];
            dst[plane + i] = in.pixels[i * 3 + 1];
            dst[2 * plane + i] = in.pixels[i * 3 + 2];
        }
    }
    return t;
}

nn::Tensor to_tensor(const preprocess::NetworkInput& input) { return to_tensor(std::span(&input, 1)); }

GazeModel synthesize_pretrained(const BackboneSpec& spec, std::uint64_t seed) {
    GazeModel model(spec, build_network(spec, kPretrainedClasses), kPretrainedClasses);
    std::mt19937_64 rng(seed);
    for (auto* p : model.parameters()) {
        const auto& s = p->value.shape();
        const auto ends_with = [&](std::string_view suffix) { return p->name.ends_with(suffix); };
        if (ends_with(".weight")) {
            float sd = std::sqrt(2.f / static_cast<float>(s[1] * s[2] * s[3]));
            if (p->name == "conv1.weight") sd *= kFirstLayerScale;
            std::normal_distribution<float> dist(0.f, sd);
            for (float& v : p->value.values()) v = dist(rng);
        } else if (ends_with("bn2c.scale")) {
            // Residual branches start as identity mappings.
            p->value.fill(0.f);
        }
    }
    return model;
}

std::string write_synthetic_pretrained(const BackboneSpec& spec, std::uint64_t seed,
                                       const std::filesystem::path& path) {
    save_checkpoint(synthesize_pretrained(spec, seed), path, "synthetic:" + std::to_string(seed));
    return path.string() + "#sha256=" + sha256_file(path);
}

GazeModel load_pretrained(const BackboneSpec& spec) {
    spec.validate();
    const std::string& loc = spec.weights;
    if (loc.empty()) throw ModelError("no pretrained weights locator given for " + std::string(family_name(spec.family)));
    if (loc.starts_with("synthetic:")) {
        std::uint64_t seed = 0;
        try {
            seed = std::stoull(loc.substr(10));
        } catch (const std::exception&) {
            throw ModelError("bad synthetic weights locator '" + loc + "'");
        }
        GazeModel m = synthesize_pretrained(spec, seed);
        return m;
    }
    std::string path = loc, digest;
    if (const auto pos = loc.find("#sha256="); pos != std::string::npos) {
        path = loc.substr(0, pos);
        digest = loc.substr(pos + 8);
    }
    if (!std::filesystem::exists(path)) throw ModelError("pretrained weights not found: " + path);
    if (!digest.empty()) {
        const std::string actual = sha256_file(path);
        if (actual != digest) {
            throw ModelError("checksum mismatch for " + path + ": expected " + digest + ", got " + actual);
        }
    }
    LoadedCheckpoint ck = load_checkpoint(path);
    const BackboneSpec& got = ck.info.backbone;
    if (got.family != spec.family || got.width_divisor != spec.width_divisor) {
        throw ModelError("weights in " + path + " are for " + std::string(family_name(got.family)) + " (width / " +
                         std::to_string(got.width_divisor) + "), not " + std::string(family_name(spec.family)) +
                         " (width / " + std::to_string(spec.width_divisor) + ")");
    }
    if (ck.info.classes != kPretrainedClasses) {
        throw ModelError("weights in " + path + " have " + std::to_string(ck.info.classes) + " outputs, expected " +
                         std::to_string(kPretrainedClasses));
    }
    GazeModel m(spec, Network{std::move(ck.model.trunk()), ck.model.feature_index(), ck.model.head_index()},
                kPretrainedClasses);
    return m;
}

GazeModel adapt_head(GazeModel pretrained, std::uint64_t seed) {
    pretrained.replace_head(kNumZones, seed);
    pretrained.set_variable_resolution(false);
    return pretrained;
}

GazeModel adapt_head(const BackboneSpec& spec, std::uint64_t seed) { return adapt_head(load_pretrained(spec), seed); }

GazeModel make_variable_resolution(GazeModel model) {
    if (model.spec().head_kind != HeadKind::ConvGap) {
        throw ModelError(std::string(family_name(model.spec().family)) +
                         " ends in fully connected layers whose weight count is tied to one spatial size; only "
                         "conv_gap models (global average pooling over class maps) accept variable resolution");
    }
    model.set_variable_resolution(true);
    return model;
}

}  // namespace gazezone::models
