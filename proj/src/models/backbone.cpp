#include "gazezone/models/backbone.hpp"

#include <algorithm>
#include <memory>

namespace gazezone::models {

using nn::ChannelAffine;
using nn::Conv2d;
using nn::Dropout;
using nn::Fire;
using nn::GlobalAvgPool;
using nn::Linear;
using nn::LocalResponseNorm;
using nn::MaxPool2d;
using nn::ReLU;
using nn::Sequential;

std::string_view family_name(Family f) {
    switch (f) {
        case Family::AlexNet: return "AlexNet";
        case Family::VGG16: return "VGG16";
        case Family::ResNet50: return "ResNet50";
        case Family::SqueezeNet: return "SqueezeNet";
    }
    throw ModelError("unknown backbone family");
}

Family parse_family(std::string_view name) {
    for (Family f : {Family::AlexNet, Family::VGG16, Family::ResNet50, Family::SqueezeNet}) {
        std::string a(family_name(f)), b(name);
        std::transform(a.begin(), a.end(), a.begin(), ::tolower);
        std::transform(b.begin(), b.end(), b.begin(), ::tolower);
        if (a == b) return f;
    }
    throw ModelError("unknown backbone family '" + std::string(name) +
                     "' (expected AlexNet, VGG16, ResNet50 or SqueezeNet)");
}

std::string_view head_kind_name(HeadKind k) {
    return k == HeadKind::FullyConnected ? "fully_connected" : "conv_gap";
}

BackboneSpec BackboneSpec::standard(Family family, std::string weights, int width_divisor) {
    BackboneSpec s;
    s.family = family;
    s.native_input = family == Family::AlexNet ? 227 : 224;
    s.head_kind = family == Family::SqueezeNet ? HeadKind::ConvGap : HeadKind::FullyConnected;
    s.weights = std::move(weights);
    s.width_divisor = width_divisor;
    return s;
}

void BackboneSpec::validate() const {
    const BackboneSpec ref = standard(family);
    if (native_input != ref.native_input) {
        throw ModelError(std::string(family_name(family)) + " native input is " + std::to_string(ref.native_input) +
                         ", got " + std::to_string(native_input));
    }
    if (head_kind != ref.head_kind) {
        throw ModelError(std::string(family_name(family)) + " head kind is " +
                         std::string(head_kind_name(ref.head_kind)));
    }
    if (width_divisor < 1) throw ModelError("width_divisor must be >= 1");
}

nlohmann::json BackboneSpec::to_json() const {
    return {{"family", family_name(family)},
            {"native_input", native_input},
            {"head_kind", head_kind_name(head_kind)},
            {"weights", weights},
            {"width_divisor", width_divisor}};
}

BackboneSpec BackboneSpec::from_json(const nlohmann::json& j) {
    BackboneSpec s = standard(parse_family(j.at("family").get<std::string>()));
    s.native_input = j.value("native_input", s.native_input);
    if (j.contains("head_kind")) {
        const auto k = j.at("head_kind").get<std::string>();
        if (k == "fully_connected") {
            s.head_kind = HeadKind::FullyConnected;
        } else if (k == "conv_gap") {
            s.head_kind = HeadKind::ConvGap;
        } else {
            throw ModelError("unknown head kind '" + k + "'");
        }
    }
    s.weights = j.value("weights", std::string{});
    s.width_divisor = j.value("width_divisor", 1);
    s.validate();
    return s;
}

namespace {

struct Builder {
    Network net;
    int d;

    int ch(int c, int multiple = 1) const { return std::max(multiple, c / d / multiple * multiple); }

    Builder& add(const std::string& name, nn::LayerPtr layer) {
        net.trunk.add(name, std::move(layer));
        return *this;
    }
    void mark_features() { net.feature_index = net.trunk.size() - 1; }
    void mark_head() { net.head_index = net.trunk.size() - 1; }
};

Network alexnet(int d, int classes) {
    Builder b{{}, d};
    const int c1 = b.ch(96, 2), c2 = b.ch(256, 2), c3 = b.ch(384, 2), fc = b.ch(4096);
    b.add("conv1", std::make_unique<Conv2d>(3, c1, 11, 4))
        .add("relu1", std::make_unique<ReLU>())
        .add("norm1", std::make_unique<LocalResponseNorm>())
        .add("pool1", std::make_unique<MaxPool2d>(3, 2))
        .add("conv2", std::make_unique<Conv2d>(c1, c2, 5, 1, 2, 2))
        .add("relu2", std::make_unique<ReLU>())
        .add("norm2", std::make_unique<LocalResponseNorm>())
        .add("pool2", std::make_unique<MaxPool2d>(3, 2))
        .add("conv3", std::make_unique<Conv2d>(c2, c3, 3, 1, 1))
        .add("relu3", std::make_unique<ReLU>())
        .add("conv4", std::make_unique<Conv2d>(c3, c3, 3, 1, 1, 2))
        .add("relu4", std::make_unique<ReLU>())
        .add("conv5", std::make_unique<Conv2d>(c3, c2, 3, 1, 1, 2))
        .add("relu5", std::make_unique<ReLU>());
    b.mark_features();
    b.add("pool5", std::make_unique<MaxPool2d>(3, 2))
        .add("fc6", std::make_unique<Linear>(c2 * 6 * 6, fc))
        .add("relu6", std::make_unique<ReLU>())
        .add("drop6", std::make_unique<Dropout>(0.5f))
        .add("fc7", std::make_unique<Linear>(fc, fc))
        .add("relu7", std::make_unique<ReLU>())
        .add("drop7", std::make_unique<Dropout>(0.5f))
        .add("fc8", std::make_unique<Linear>(fc, classes));
    b.mark_head();
    return std::move(b.net);
}

Network vgg16(int d, int classes) {
    Builder b{{}, d};
    const int blocks[5][2] = {{64, 2}, {128, 2}, {256, 3}, {512, 3}, {512, 3}};
    int in = 3;
    for (int s = 0; s < 5; ++s) {
        const int out = b.ch(blocks[s][0]);
        for (int i = 0; i < blocks[s][1]; ++i) {
            const std::string id = std::to_string(s + 1) + "_" + std::to_string(i + 1);
            b.add("conv" + id, std::make_unique<Conv2d>(in, out, 3, 1, 1)).add("relu" + id, std::make_unique<ReLU>());
            in = out;
        }
        if (s == 4) b.mark_features();
        b.add("pool" + std::to_string(s + 1), std::make_unique<MaxPool2d>(2, 2));
    }
    const int fc = b.ch(4096);
    b.add("fc6", std::make_unique<Linear>(in * 7 * 7, fc))
        .add("relu6", std::make_unique<ReLU>())
        .add("drop6", std::make_unique<Dropout>(0.5f))
        .add("fc7", std::make_unique<Linear>(fc, fc))
        .add("relu7", std::make_unique<ReLU>())
        .add("drop7", std::make_unique<Dropout>(0.5f))
        .add("fc8", std::make_unique<Linear>(fc, classes));
    b.mark_head();
    return std::move(b.net);
}

Network resnet50(int d, int classes) {
    Builder b{{}, d};
    const int c1 = b.ch(64);
    b.add("conv1", std::make_unique<Conv2d>(3, c1, 7, 2, 3, 1, false))
        .add("bn_conv1", std::make_unique<ChannelAffine>(c1))
        .add("conv1_relu", std::make_unique<ReLU>())
        .add("pool1", std::make_unique<MaxPool2d>(3, 2));
    const int depth[4] = {3, 4, 6, 3};
    int in = c1;
    for (int s = 0; s < 4; ++s) {
        const int mid = b.ch(64 << s), out = b.ch(256 << s);
        for (int i = 0; i < depth[s]; ++i) {
            const int stride = (s > 0 && i == 0) ? 2 : 1;
            const std::string name = "res" + std::to_string(s + 2) + static_cast<char>('a' + i);
            b.add(name, std::make_unique<nn::Bottleneck>(in, mid, out, stride));
            in = out;
        }
    }
    b.mark_features();
    b.add("pool5", std::make_unique<GlobalAvgPool>()).add("fc1000", std::make_unique<Linear>(in, classes));
    b.mark_head();
    return std::move(b.net);
}

Network squeezenet(int d, int classes) {
    Builder b{{}, d};
    const int c1 = b.ch(64);
    b.add("conv1", std::make_unique<Conv2d>(3, c1, 3, 2))
        .add("relu_conv1", std::make_unique<ReLU>())
        .add("pool1", std::make_unique<MaxPool2d>(3, 2));
    struct FireSpec {
        int squeeze, expand;
    };
    const FireSpec fires[8] = {{16, 64}, {16, 64}, {32, 128}, {32, 128}, {48, 192}, {48, 192}, {64, 256}, {64, 256}};
    int in = c1;
    for (int i = 0; i < 8; ++i) {
        const int s = b.ch(fires[i].squeeze), e = b.ch(fires[i].expand);
        b.add("fire" + std::to_string(i + 2), std::make_unique<Fire>(in, s, e, e));
        in = 2 * e;
        if (i == 1) b.add("pool3", std::make_unique<MaxPool2d>(3, 2));
        if (i == 3) b.add("pool5", std::make_unique<MaxPool2d>(3, 2));
    }
    b.add("drop9", std::make_unique<Dropout>(0.5f)).add("conv10", std::make_unique<Conv2d>(in, classes, 1));
    b.mark_head();
    b.add("relu_conv10", std::make_unique<ReLU>());
    b.mark_features();
    b.add("pool10", std::make_unique<GlobalAvgPool>());
    return std::move(b.net);
}

}  // namespace

Network build_network(const BackboneSpec& spec, int classes) {
    spec.validate();
    if (classes < 1) throw ModelError("class count must be positive");
    Network net;
    switch (spec.family) {
        case Family::AlexNet: net = alexnet(spec.width_divisor, classes); break;
        case Family::VGG16: net = vgg16(spec.width_divisor, classes); break;
        case Family::ResNet50: net = resnet50(spec.width_divisor, classes); break;
        case Family::SqueezeNet: net = squeezenet(spec.width_divisor, classes); break;
    }
    net.trunk.set_names("");
    return net;
}

int min_input_size(const BackboneSpec& spec) {
    const Network net = build_network(spec, 1);
    // Only the convolutional part bounds the size; heads are checked separately.
    for (int s = 1; s <= spec.native_input; ++s) {
        try {
            nn::Shape shape{1, 3, s, s};
            for (std::size_t i = 0; i <= net.feature_index; ++i) shape = net.trunk.at(i).output_shape(shape);
            return s;
        } catch (const Error&) {
        }
    }
    return spec.native_input;
}

}  // namespace gazezone::models
