#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gazezone/core/types.hpp"
#include "gazezone/models/backbone.hpp"
#include "gazezone/nn/layers.hpp"
#include "gazezone/preprocess/normalize.hpp"

namespace gazezone::models {

struct ForwardResult {
    ZoneDistribution distribution;
    std::array<double, kNumZones> logits{};
    /// Final convolutional activations, 1 x C x H x W. For conv_gap models
    /// these are the class maps whose spatial means are the logits.
    nn::Tensor features;
};

/// A backbone plus classifier. forward() is const and safe to call from
/// several threads once training has finished.
class GazeModel {
public:
    GazeModel(BackboneSpec spec, Network network, int classes);
    GazeModel(const GazeModel& other);
    GazeModel(GazeModel&&) noexcept = default;
    GazeModel& operator=(GazeModel&&) noexcept = default;

    const BackboneSpec& spec() const { return spec_; }
    int classes() const { return classes_; }
    bool accepts_variable_resolution() const { return variable_resolution_; }
    /// Throws ModelError when an input of this size cannot be processed.
    void check_input(int height, int width) const;

    /// Single-patch inference; requires classes() == 7.
    ForwardResult forward(const preprocess::NetworkInput& input) const;
    /// Batched inference; features are omitted unless keep_features is set.
    std::vector<ForwardResult> forward(std::span<const preprocess::NetworkInput> inputs,
                                       bool keep_features = false) const;

    /// Raw batched pass: N x 3 x H x W in, N x classes x 1 x 1 logits out.
    /// `features`, when given, receives the final convolutional activations.
    nn::Tensor logits(const nn::Tensor& batch, const nn::Context& ctx, nn::Saved* saved = nullptr,
                      nn::Tensor* features = nullptr) const;
    /// Back-propagates dL/dlogits, accumulating parameter gradients.
    void backward(const nn::Tensor& grad_logits, const nn::Saved& saved);

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;
    std::vector<nn::Parameter*> head_parameters();
    void zero_grad();

    nn::Sequential& trunk() { return network_.trunk; }
    const nn::Sequential& trunk() const { return network_.trunk; }
    std::size_t feature_index() const { return network_.feature_index; }
    std::size_t head_index() const { return network_.head_index; }
    nn::Layer& head() { return network_.trunk.at(network_.head_index); }
    const nn::Layer& head() const { return network_.trunk.at(network_.head_index); }

    /// Replaces the classifier with a freshly He-initialised one.
    void replace_head(int classes, std::uint64_t seed);
    void set_variable_resolution(bool on) { variable_resolution_ = on; }

private:
    BackboneSpec spec_;
    Network network_;
    int classes_;
    bool variable_resolution_ = false;
};

/// NHWC patches to an N x 3 x H x W tensor; all patches must share a size.
nn::Tensor to_tensor(std::span<const preprocess::NetworkInput> inputs);
nn::Tensor to_tensor(const preprocess::NetworkInput& input);

/// Random He-initialised 1000-way weights standing in for an ImageNet
/// checkpoint; identical seeds give identical weights.
GazeModel synthesize_pretrained(const BackboneSpec& spec, std::uint64_t seed);
/// Writes synthesize_pretrained() as a checkpoint and returns its
/// "path#sha256=..." locator.
std::string write_synthetic_pretrained(const BackboneSpec& spec, std::uint64_t seed,
                                       const std::filesystem::path& path);

/// Resolves spec.weights into a 1000-way pretrained model, verifying the
/// checksum when the locator carries one.
GazeModel load_pretrained(const BackboneSpec& spec);

/// Pretrained backbone with its 1000-way classifier swapped for a 7-way
/// He-initialised one; every other weight is kept unchanged.
GazeModel adapt_head(const BackboneSpec& spec, std::uint64_t seed);
GazeModel adapt_head(GazeModel pretrained, std::uint64_t seed);

/// Lifts the native-resolution restriction of a conv_gap model. Throws for
/// fully connected heads.
GazeModel make_variable_resolution(GazeModel model);

}  // namespace gazezone::models
