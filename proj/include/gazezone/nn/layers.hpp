#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gazezone/nn/tensor.hpp"

namespace gazezone::nn {

struct Context {
    bool training = false;
    std::mt19937_64* rng = nullptr;  // required by Dropout in training mode
};

/// Activations a layer keeps from forward() for its backward().
struct Saved {
    std::vector<Tensor> tensors;
    std::vector<std::int32_t> indices;
    Shape input_shape{0, 0, 0, 0};
    std::vector<Saved> children;
};

/// Layers are immutable during forward(), so a frozen network can serve
/// concurrent inference. backward() accumulates into parameter gradients
/// and is single-writer.
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string type() const = 0;
    /// Throws Error when the input cannot be processed (e.g. too small).
    virtual Shape output_shape(const Shape& in) const = 0;
    /// saved == nullptr means no backward pass will follow.
    virtual Tensor forward(const Tensor& x, const Context& ctx, Saved* saved) const = 0;
    /// Returns dL/dx, accumulating parameter gradients.
    virtual Tensor backward(const Tensor& grad_out, const Saved& saved) = 0;
    /// Appends owned parameters; names are prefixed with prefix.
    virtual void parameters(std::vector<Parameter*>& out) { (void)out; }
    virtual void set_names(const std::string& prefix) { (void)prefix; }
    virtual std::unique_ptr<Layer> clone() const = 0;

    std::vector<Parameter*> collect_parameters() {
        std::vector<Parameter*> out;
        parameters(out);
        return out;
    }
};

using LayerPtr = std::unique_ptr<Layer>;

class Conv2d final : public Layer {
public:
    /// Without bias the layer owns only its weight (convolutions followed by a batch-norm affine).
    Conv2d(int in_channels, int out_channels, int kernel, int stride = 1, int pad = 0, int groups = 1,
           bool bias = true);

    std::string type() const override { return "Conv2d"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, const Context& ctx, Saved* saved) const override;
    Tensor backward(const Tensor& grad_out, const Saved& saved) override;
    void parameters(std::vector<Parameter*>& out) override;
    void set_names(const std::string& prefix) override;
    LayerPtr clone() const override { return std::make_unique<Conv2d>(*this); }

    int in_channels() const { return in_; }
    int out_channels() const { return out_; }
    int kernel() const { return k_; }
    int groups() const { return groups_; }
    bool has_bias() const { return has_bias_; }
    /// Inputs per output unit, the He fan-in.
    int fan_in() const { return in_ / groups_ * k_ * k_; }
    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }
    const Parameter& weight() const { return weight_; }
    const Parameter& bias() const { return bias_; }

private:
    int in_, out_, k_, stride_, pad_, groups_;
    bool has_bias_;
    Parameter weight_;  // out x in/groups x k x k
    Parameter bias_;    // 1 x out x 1 x 1, empty without bias
};

class Linear final : public Layer {
public:
    Linear(int in_features, int out_features);

    std::string type() const override { return "Linear"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, const Context& ctx, Saved* saved) const override;
    Tensor backward(const Tensor& grad_out, const Saved& saved) override;
    void parameters(std::vector<Parameter*>& out) override;
    void set_names(const std::string& prefix) override;
    LayerPtr clone() const override { return std::make_unique<Linear>(*this); }

    int in_features() const { return in_; }
    int out_features() const { return out_; }
    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }
    const Parameter& weight() const { return weight_; }
    const Parameter& bias() const { return bias_; }

private:
    int in_, out_;
    Parameter weight_;  // out x in x 1 x 1
    Parameter bias_;    // 1 x out x 1 x 1
};

class ReLU final : public Layer {
public:
    std::string type() const override { return "ReLU"; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor forward(const Tensor& x, const Context& ctx, Saved* saved) const override;
    Tensor backward(const Tensor& grad_out, const Saved& saved) override;
    LayerPtr clone() const override { return std::make_unique<ReLU>(*this); }
};

/// Max pooling with ceil-mode output size, windows clipped at the border.
class MaxPool2d final : public Layer {
public:
    MaxPool2d(int kernel, int stride, int pad = 0) : k_(kernel), stride_(stride), pad_(pad) {}

    std::string type() const override { return "MaxPool2d"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, const Context& ctx, Saved* saved) const override;
    Tensor backward(const Tensor& grad_out, const Saved& saved) override;
    LayerPtr clone() const override { return std::make_unique<MaxPool2d>(*this); }

private:
    int k_, stride_, pad_;
};

/// Spatial mean per channel: N x C x H x W -> N x C x 1 x 1.
class GlobalAvgPool final : public Layer {
public:
    std::string type() const override { return "GlobalAvgPool"; }
    Shape output_shape(const Shape& in) const override { return {in[0], in[1], 1, 1}; }
    Tensor forward(const Tensor& x, const Context& ctx, Saved* saved) const override;
    Tensor backward(const Tensor& grad_out, const Saved& saved) override;
    LayerPtr clone() const override { return std::make_unique<GlobalAvgPool>(*this); }
};

/// Inverted dropout; identity outside training.
class Dropout final : public Layer {
public:
    explicit Dropout(float p) : p_(p) {}

    std::string type() const override { return "Dropout"; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor forward(const Tensor& x, const Context& ctx, Saved* saved) const override;
    Tensor backward(const Tensor& grad_out, const Saved& saved) override;
    LayerPtr clone() const override { return std::make_unique<Dropout>(*this); }

private:
    float p_;
};

/// Cross-channel local response normalization (AlexNet).
class LocalResponseNorm final : public Layer {
public:
    LocalResponseNorm(int size = 5, float alpha = 1e-4f, float beta = 0.75f, float k = 1.f)
        : size_(size), alpha_(alpha), beta_(beta), k_(k) {}

    std::string type() const override { return "LocalResponseNorm"; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor forward(const Tensor& x, const Context& ctx, Saved* saved) const override;
    Tensor backward(const Tensor& grad_out, const Saved& saved) override;
    LayerPtr clone() const override { return std::make_unique<LocalResponseNorm>(*this); }

private:
    int size_;
    float alpha_, beta_, k_;
};

/// Per-channel scale and shift. Holds batch-norm statistics folded in at
/// pretraining time together with the learned scale.
class ChannelAffine final : public Layer {
public:
    explicit ChannelAffine(int channels);

    std::string type() const override { return "ChannelAffine"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, const Context& ctx, Saved* saved) const override;
    Tensor backward(const Tensor& grad_out, const Saved& saved) override;
    void parameters(std::vector<Parameter*>& out) override;
    void set_names(const std::string& prefix) override;
    LayerPtr clone() const override { return std::make_unique<ChannelAffine>(*this); }

    Parameter& scale() { return scale_; }
    Parameter& shift() { return shift_; }

private:
    int channels_;
    Parameter scale_;
    Parameter shift_;
};

/// Ordered container of named sub-layers.
class Sequential final : public Layer {
public:
    Sequential() = default;
    Sequential(const Sequential& other);
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(const Sequential&) = delete;
    Sequential& operator=(Sequential&&) noexcept = default;

    Sequential& add(std::string name, LayerPtr layer);

    std::string type() const override { return "Sequential"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, const Context& ctx, Saved* saved) const override;
    Tensor backward(const Tensor& grad_out, const Saved& saved) override;
    void parameters(std::vector<Parameter*>& out) override;
    void set_names(const std::string& prefix) override;
    LayerPtr clone() const override { return std::make_unique<Sequential>(*this); }

    std::size_t size() const { return layers_.size(); }
    Layer& at(std::size_t i) { return *layers_[i].second; }
    const Layer& at(std::size_t i) const { return *layers_[i].second; }
    const std::string& name_at(std::size_t i) const { return layers_[i].first; }
    void replace(std::size_t i, LayerPtr layer);

private:
    std::vector<std::pair<std::string, LayerPtr>> layers_;
};

/// SqueezeNet fire module: 1x1 squeeze, then parallel 1x1 and 3x3 expands
/// concatenated along channels, each followed by ReLU.
class Fire final : public Layer {
public:
    Fire(int in_channels, int squeeze, int expand1x1, int expand3x3);

    std::string type() const override { return "Fire"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, const Context& ctx, Saved* saved) const override;
    Tensor backward(const Tensor& grad_out, const Saved& saved) override;
    void parameters(std::vector<Parameter*>& out) override;
    void set_names(const std::string& prefix) override;
    LayerPtr clone() const override { return std::make_unique<Fire>(*this); }

private:
    Conv2d squeeze_, expand1_, expand3_;
    ReLU relu_;
};

/// ResNet bottleneck: 1x1 -> 3x3 -> 1x1 with a projection shortcut when the
/// shape changes; stride sits on the first 1x1 convolution.
class Bottleneck final : public Layer {
public:
    Bottleneck(int in_channels, int mid_channels, int out_channels, int stride);

    std::string type() const override { return "Bottleneck"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, const Context& ctx, Saved* saved) const override;
    Tensor backward(const Tensor& grad_out, const Saved& saved) override;
    void parameters(std::vector<Parameter*>& out) override;
    void set_names(const std::string& prefix) override;
    LayerPtr clone() const override { return std::make_unique<Bottleneck>(*this); }

    Sequential& branch() { return branch_; }
    bool has_projection() const { return projection_.size() > 0; }

private:
    Sequential branch_;
    Sequential projection_;  // empty: identity shortcut
    ReLU relu_;
};

/// He (MSRA) normal initialisation: N(0, 2 / fan_in); bias zero.
void he_init(Conv2d& conv, std::mt19937_64& rng);
void he_init(Linear& linear, std::mt19937_64& rng);

}  // namespace gazezone::nn
