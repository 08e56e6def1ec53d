#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <json.hpp>

#include "gazezone/core/types.hpp"
#include "gazezone/nn/layers.hpp"

namespace gazezone::models {

class ModelError : public Error {
public:
    using Error::Error;
};

enum class Family { AlexNet, VGG16, ResNet50, SqueezeNet };
enum class HeadKind { FullyConnected, ConvGap };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);
std::string_view head_kind_name(HeadKind k);

/// Number of ImageNet classes in a pretrained head.
inline constexpr int kPretrainedClasses = 1000;

struct BackboneSpec {
    Family family = Family::SqueezeNet;
    int native_input = 224;
    HeadKind head_kind = HeadKind::ConvGap;
    /// "path", "path#sha256=<hex>", or "synthetic:<seed>".
    std::string weights;
    /// Every channel count is divided by this; 1 gives the published widths.
    int width_divisor = 1;

    /// Native input and head kind filled in from the family.
    static BackboneSpec standard(Family family, std::string weights = {}, int width_divisor = 1);

    void validate() const;
    nlohmann::json to_json() const;
    static BackboneSpec from_json(const nlohmann::json& j);
};

/// A backbone graph with the positions CAM and head surgery need.
struct Network {
    nn::Sequential trunk;
    /// Layer whose output is the final convolutional activation.
    std::size_t feature_index = 0;
    /// The replaceable classifier layer (Linear or 1x1 Conv2d).
    std::size_t head_index = 0;
};

/// Uninitialised graph (zero weights, unit affine scales) with `classes` outputs.
Network build_network(const BackboneSpec& spec, int classes);

/// Smallest square input the convolutional trunk can process.
int min_input_size(const BackboneSpec& spec);

}  // namespace gazezone::models
