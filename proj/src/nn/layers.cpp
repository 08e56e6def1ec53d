#include "gazezone/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "gazezone/core/types.hpp"

namespace gazezone::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void im2col(const float* x, int channels, int h, int w, int k, int stride, int pad, int ho, int wo, float* col) {
    const int plane = ho * wo;
    for (int c = 0; c < channels; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                float* dst = col + static_cast<std::size_t>((c * k + ki) * k + kj) * plane;
                const float* src = x + static_cast<std::size_t>(c) * h * w;
                for (int oh = 0; oh < ho; ++oh) {
                    const int ih = oh * stride - pad + ki;
                    float* row = dst + oh * wo;
                    if (ih < 0 || ih >= h) {
                        std::fill(row, row + wo, 0.f);
                        continue;
                    }
                    const float* srow = src + static_cast<std::size_t>(ih) * w;
                    for (int ow = 0; ow < wo; ++ow) {
                        const int iw = ow * stride - pad + kj;
                        row[ow] = (iw >= 0 && iw < w) ? srow[iw] : 0.f;
                    }
                }
            }
        }
    }
}

void col2im(const float* col, int channels, int h, int w, int k, int stride, int pad, int ho, int wo, float* x) {
    const int plane = ho * wo;
    for (int c = 0; c < channels; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                const float* src = col + static_cast<std::size_t>((c * k + ki) * k + kj) * plane;
                float* dst = x + static_cast<std::size_t>(c) * h * w;
                for (int oh = 0; oh < ho; ++oh) {
                    const int ih = oh * stride - pad + ki;
                    if (ih < 0 || ih >= h) continue;
                    float* drow = dst + static_cast<std::size_t>(ih) * w;
                    const float* row = src + oh * wo;
                    for (int ow = 0; ow < wo; ++ow) {
                        const int iw = ow * stride - pad + kj;
                        if (iw >= 0 && iw < w) drow[iw] += row[ow];
                    }
                }
            }
        }
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(what);
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, int groups, bool bias)
    : in_(in_channels),
      out_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(pad),
      groups_(groups),
      has_bias_(bias),
      weight_({out_channels, in_channels / std::max(groups, 1), kernel, kernel}),
      bias_(bias ? Shape{1, out_channels, 1, 1} : Shape{0, 0, 0, 0}) {
    require(in_ > 0 && out_ > 0 && k_ > 0 && stride_ > 0 && pad_ >= 0 && groups_ > 0, "Conv2d: bad geometry");
    require(in_ % groups_ == 0 && out_ % groups_ == 0, "Conv2d: channels must divide evenly into groups");
}

Shape Conv2d::output_shape(const Shape& in) const {
    require(in[1] == in_, "Conv2d: expected " + std::to_string(in_) + " input channels, got " + std::to_string(in[1]));
    const int hp = in[2] + 2 * pad_ - k_;
    const int wp = in[3] + 2 * pad_ - k_;
    require(hp >= 0 && wp >= 0, "Conv2d: input " + to_string(in) + " is smaller than the kernel");
    return {in[0], out_, hp / stride_ + 1, wp / stride_ + 1};
}

Tensor Conv2d::forward(const Tensor& x, const Context&, Saved* saved) const {
    const Shape os = output_shape(x.shape());
    Tensor y(os);
    const int cg = in_ / groups_, og = out_ / groups_;
    const int kdim = cg * k_ * k_, L = os[2] * os[3];
    const bool pointwise = k_ == 1 && stride_ == 1 && pad_ == 0;
    FloatBuffer col(pointwise ? 0 : static_cast<std::size_t>(kdim) * L);
    Eigen::Map<const Eigen::VectorXf> b(bias_.value.data(), has_bias_ ? out_ : 0);

    for (int n = 0; n < x.n(); ++n) {
        for (int g = 0; g < groups_; ++g) {
            const float* xin = x.sample(n) + static_cast<std::size_t>(g) * cg * x.h() * x.w();
            const float* cp = xin;
            if (!pointwise) {
                im2col(xin, cg, x.h(), x.w(), k_, stride_, pad_, os[2], os[3], col.data());
                cp = col.data();
            }
            ConstMapMat W(weight_.value.data() + static_cast<std::size_t>(g) * og * kdim, og, kdim);
            ConstMapMat C(cp, kdim, L);
            MapMat Y(y.sample(n) + static_cast<std::size_t>(g) * og * L, og, L);
            Y.noalias() = W * C;
            if (has_bias_) Y.colwise() += b.segment(g * og, og);
        }
    }
    if (saved) saved->tensors = {x};
    return y;
}

Tensor Conv2d::backward(const Tensor& gy, const Saved& saved) {
    const Tensor& x = saved.tensors.at(0);
    Tensor gx(x.shape());
    const int cg = in_ / groups_, og = out_ / groups_;
    const int kdim = cg * k_ * k_, L = gy.h() * gy.w();
    const bool pointwise = k_ == 1 && stride_ == 1 && pad_ == 0;
    FloatBuffer col(pointwise ? 0 : static_cast<std::size_t>(kdim) * L);
    FloatBuffer dcol(static_cast<std::size_t>(kdim) * L);
    Eigen::Map<Eigen::VectorXf> db(bias_.grad.data(), has_bias_ ? out_ : 0);

    for (int n = 0; n < x.n(); ++n) {
        for (int g = 0; g < groups_; ++g) {
            const std::size_t xoff = static_cast<std::size_t>(g) * cg * x.h() * x.w();
            const float* cp = x.sample(n) + xoff;
            if (!pointwise) {
                im2col(cp, cg, x.h(), x.w(), k_, stride_, pad_, gy.h(), gy.w(), col.data());
                cp = col.data();
            }
            ConstMapMat C(cp, kdim, L);
            ConstMapMat dY(gy.sample(n) + static_cast<std::size_t>(g) * og * L, og, L);
            ConstMapMat W(weight_.value.data() + static_cast<std::size_t>(g) * og * kdim, og, kdim);
            MapMat dW(weight_.grad.data() + static_cast<std::size_t>(g) * og * kdim, og, kdim);
            dW.noalias() += dY * C.transpose();
            if (has_bias_) db.segment(g * og, og) += dY.rowwise().sum();
            MapMat dC(dcol.data(), kdim, L);
            dC.noalias() = W.transpose() * dY;
            float* gxs = gx.sample(n) + xoff;
            if (pointwise) {
                for (std::size_t i = 0; i < dcol.size(); ++i) gxs[i] += dcol[i];
            } else {
                col2im(dcol.data(), cg, x.h(), x.w(), k_, stride_, pad_, gy.h(), gy.w(), gxs);
            }
        }
    }
    return gx;
}

void Conv2d::parameters(std::vector<Parameter*>& out) {
    out.push_back(&weight_);
    if (has_bias_) out.push_back(&bias_);
}

void Conv2d::set_names(const std::string& prefix) {
    weight_.name = prefix + "weight";
    bias_.name = prefix + "bias";
}

// ---------------------------------------------------------------- Linear

Linear::Linear(int in_features, int out_features)
    : in_(in_features), out_(out_features), weight_({out_features, in_features, 1, 1}), bias_({1, out_features, 1, 1}) {
    require(in_ > 0 && out_ > 0, "Linear: feature counts must be positive");
}

Shape Linear::output_shape(const Shape& in) const {
    const long long flat = static_cast<long long>(in[1]) * in[2] * in[3];
    require(flat == in_, "Linear: expected " + std::to_string(in_) + " input features, got " + to_string(in) +
                             " (fully connected layers fix the input resolution)");
    return {in[0], out_, 1, 1};
}

Tensor Linear::forward(const Tensor& x, const Context&, Saved* saved) const {
    Tensor y(output_shape(x.shape()));
    ConstMapMat X(x.data(), x.n(), in_);
    ConstMapMat W(weight_.value.data(), out_, in_);
    MapMat Y(y.data(), x.n(), out_);
    Y.noalias() = X * W.transpose();
    Y.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(bias_.value.data(), out_);
    if (saved) saved->tensors = {x};
    return y;
}

Tensor Linear::backward(const Tensor& gy, const Saved& saved) {
    const Tensor& x = saved.tensors.at(0);
    Tensor gx(x.shape());
    ConstMapMat X(x.data(), x.n(), in_);
    ConstMapMat dY(gy.data(), gy.n(), out_);
    ConstMapMat W(weight_.value.data(), out_, in_);
    MapMat dW(weight_.grad.data(), out_, in_);
    dW.noalias() += dY.transpose() * X;
    Eigen::Map<Eigen::RowVectorXf>(bias_.grad.data(), out_) += dY.colwise().sum();
    MapMat(gx.data(), x.n(), in_).noalias() = dY * W;
    return gx;
}

void Linear::parameters(std::vector<Parameter*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

void Linear::set_names(const std::string& prefix) {
    weight_.name = prefix + "weight";
    bias_.name = prefix + "bias";
}

// ---------------------------------------------------------------- ReLU

Tensor ReLU::forward(const Tensor& x, const Context&, Saved* saved) const {
    Tensor y = x;
    for (float& v : y.values()) v = v < 0.f ? 0.f : v;
    if (saved) saved->tensors = {y};
    return y;
}

Tensor ReLU::backward(const Tensor& gy, const Saved& saved) {
    const Tensor& y = saved.tensors.at(0);
    Tensor gx = gy;
    auto g = gx.values();
    auto out = y.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(out[i] > 0.f)) g[i] = 0.f;
    }
    return gx;
}

// ---------------------------------------------------------------- MaxPool2d

Shape MaxPool2d::output_shape(const Shape& in) const {
    auto extent = [&](int n) {
        require(n + 2 * pad_ >= k_, "MaxPool2d: input " + to_string(in) + " is smaller than the window");
        int o = (n + 2 * pad_ - k_ + stride_ - 1) / stride_ + 1;
        if (pad_ > 0 && (o - 1) * stride_ >= n + pad_) --o;
        return o;
    };
    return {in[0], in[1], extent(in[2]), extent(in[3])};
}

Tensor MaxPool2d::forward(const Tensor& x, const Context&, Saved* saved) const {
    const Shape os = output_shape(x.shape());
    Tensor y(os);
    std::vector<std::int32_t> arg(saved ? y.size() : 0);
    std::size_t o = 0;
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            const float* plane = x.sample(n) + static_cast<std::size_t>(c) * x.h() * x.w();
            for (int oh = 0; oh < os[2]; ++oh) {
                const int hs = std::max(oh * stride_ - pad_, 0);
                const int he = std::min(oh * stride_ - pad_ + k_, x.h());
                for (int ow = 0; ow < os[3]; ++ow, ++o) {
                    const int ws = std::max(ow * stride_ - pad_, 0);
                    const int we = std::min(ow * stride_ - pad_ + k_, x.w());
                    float best = -std::numeric_limits<float>::infinity();
                    int bi = hs * x.w() + ws;
                    for (int ih = hs; ih < he; ++ih) {
                        for (int iw = ws; iw < we; ++iw) {
                            const float v = plane[ih * x.w() + iw];
                            if (v > best) {
                                best = v;
                                bi = ih * x.w() + iw;
                            }
                        }
                    }
                    y.data()[o] = best;
                    if (saved) arg[o] = bi;
                }
            }
        }
    }
    if (saved) {
        saved->input_shape = x.shape();
        saved->indices = std::move(arg);
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& gy, const Saved& saved) {
    Tensor gx(saved.input_shape);
    const std::size_t plane_out = static_cast<std::size_t>(gy.h()) * gy.w();
    const std::size_t plane_in = static_cast<std::size_t>(gx.h()) * gx.w();
    for (std::size_t o = 0; o < gy.size(); ++o) {
        const std::size_t plane = o / plane_out;
        gx.data()[plane * plane_in + static_cast<std::size_t>(saved.indices[o])] += gy.data()[o];
    }
    return gx;
}

// ---------------------------------------------------------------- GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& x, const Context&, Saved* saved) const {
    Tensor y(output_shape(x.shape()));
    const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
    for (std::size_t p = 0; p < y.size(); ++p) {
        const float* src = x.data() + p * plane;
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += src[i];
        y.data()[p] = static_cast<float>(acc / static_cast<double>(plane));
    }
    if (saved) saved->input_shape = x.shape();
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& gy, const Saved& saved) {
    Tensor gx(saved.input_shape);
    const std::size_t plane = static_cast<std::size_t>(gx.h()) * gx.w();
    const float inv = 1.f / static_cast<float>(plane);
    for (std::size_t p = 0; p < gy.size(); ++p) {
        std::fill_n(gx.data() + p * plane, plane, gy.data()[p] * inv);
    }
    return gx;
}

// ---------------------------------------------------------------- Dropout

Tensor Dropout::forward(const Tensor& x, const Context& ctx, Saved* saved) const {
    if (!ctx.training || p_ <= 0.f) {
        if (saved) saved->tensors.clear();
        return x;
    }
    require(ctx.rng != nullptr, "Dropout: training forward needs an RNG");
    Tensor mask(x.shape());
    std::bernoulli_distribution keep(1.0 - p_);
    const float scale = 1.f / (1.f - p_);
    for (float& m : mask.values()) m = keep(*ctx.rng) ? scale : 0.f;
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] *= mask.data()[i];
    if (saved) saved->tensors = {std::move(mask)};
    return y;
}

Tensor Dropout::backward(const Tensor& gy, const Saved& saved) {
    if (saved.tensors.empty()) return gy;
    Tensor gx = gy;
    const Tensor& mask = saved.tensors[0];
    for (std::size_t i = 0; i < gx.size(); ++i) gx.data()[i] *= mask.data()[i];
    return gx;
}

// ---------------------------------------------------------------- LocalResponseNorm

Tensor LocalResponseNorm::forward(const Tensor& x, const Context&, Saved* saved) const {
    Tensor y(x.shape());
    Tensor scale(x.shape());
    const int pre = (size_ - 1) / 2;
    const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
    for (int n = 0; n < x.n(); ++n) {
        const float* xs = x.sample(n);
        float* ss = scale.sample(n);
        float* ys = y.sample(n);
        for (int c = 0; c < x.c(); ++c) {
            const int lo = std::max(c - pre, 0);
            const int hi = std::min(c - pre + size_, x.c());
            for (std::size_t i = 0; i < plane; ++i) {
                float acc = 0.f;
                for (int j = lo; j < hi; ++j) {
                    const float v = xs[j * plane + i];
                    acc += v * v;
                }
                const float s = k_ + alpha_ / size_ * acc;
                ss[c * plane + i] = s;
                ys[c * plane + i] = xs[c * plane + i] * std::pow(s, -beta_);
            }
        }
    }
    if (saved) saved->tensors = {x, y, scale};
    return y;
}

Tensor LocalResponseNorm::backward(const Tensor& gy, const Saved& saved) {
    const Tensor& x = saved.tensors.at(0);
    const Tensor& y = saved.tensors.at(1);
    const Tensor& scale = saved.tensors.at(2);
    Tensor gx(x.shape());
    const int pre = (size_ - 1) / 2;
    const int post = size_ - 1 - pre;
    const float ratio = 2.f * alpha_ * beta_ / size_;
    const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            // Outputs j whose window [j - pre, j - pre + size) contains c.
            const int lo = std::max(c - post, 0);
            const int hi = std::min(c + pre, x.c() - 1);
            for (std::size_t i = 0; i < plane; ++i) {
                float acc = 0.f;
                for (int j = lo; j <= hi; ++j) {
                    const std::size_t q = j * plane + i;
                    acc += gy.sample(n)[q] * y.sample(n)[q] / scale.sample(n)[q];
                }
                const std::size_t p = c * plane + i;
                gx.sample(n)[p] = gy.sample(n)[p] * std::pow(scale.sample(n)[p], -beta_) - ratio * x.sample(n)[p] * acc;
            }
        }
    }
    return gx;
}

// ---------------------------------------------------------------- ChannelAffine

ChannelAffine::ChannelAffine(int channels)
    : channels_(channels), scale_({1, channels, 1, 1}), shift_({1, channels, 1, 1}) {
    scale_.value.fill(1.f);
}

Shape ChannelAffine::output_shape(const Shape& in) const {
    require(in[1] == channels_, "ChannelAffine: channel count mismatch");
    return in;
}

Tensor ChannelAffine::forward(const Tensor& x, const Context&, Saved* saved) const {
    output_shape(x.shape());
    Tensor y(x.shape());
    const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < channels_; ++c) {
            const float a = scale_.value.data()[c], b = shift_.value.data()[c];
            const float* src = x.sample(n) + c * plane;
            float* dst = y.sample(n) + c * plane;
            for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] * a + b;
        }
    }
    if (saved) saved->tensors = {x};
    return y;
}

Tensor ChannelAffine::backward(const Tensor& gy, const Saved& saved) {
    const Tensor& x = saved.tensors.at(0);
    Tensor gx(x.shape());
    const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < channels_; ++c) {
            const float a = scale_.value.data()[c];
            const float* g = gy.sample(n) + c * plane;
            const float* xs = x.sample(n) + c * plane;
            float* dx = gx.sample(n) + c * plane;
            double ds = 0.0, dt = 0.0;
            for (std::size_t i = 0; i < plane; ++i) {
                ds += static_cast<double>(g[i]) * xs[i];
                dt += g[i];
                dx[i] = g[i] * a;
            }
            scale_.grad.data()[c] += static_cast<float>(ds);
            shift_.grad.data()[c] += static_cast<float>(dt);
        }
    }
    return gx;
}

void ChannelAffine::parameters(std::vector<Parameter*>& out) {
    out.push_back(&scale_);
    out.push_back(&shift_);
}

void ChannelAffine::set_names(const std::string& prefix) {
    scale_.name = prefix + "scale";
    shift_.name = prefix + "shift";
}

// ---------------------------------------------------------------- Sequential

Sequential::Sequential(const Sequential& other) {
    for (const auto& [name, layer] : other.layers_) layers_.emplace_back(name, layer->clone());
}

Sequential& Sequential::add(std::string name, LayerPtr layer) {
    layers_.emplace_back(std::move(name), std::move(layer));
    return *this;
}

void Sequential::replace(std::size_t i, LayerPtr layer) { layers_.at(i).second = std::move(layer); }

Shape Sequential::output_shape(const Shape& in) const {
    Shape s = in;
    for (const auto& [name, layer] : layers_) {
        try {
            s = layer->output_shape(s);
        } catch (const Error& e) {
            throw Error(name + ": " + e.what());
        }
    }
    return s;
}

Tensor Sequential::forward(const Tensor& x, const Context& ctx, Saved* saved) const {
    if (saved) saved->children.assign(layers_.size(), Saved{});
    Tensor cur = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        cur = layers_[i].second->forward(cur, ctx, saved ? &saved->children[i] : nullptr);
    }
    return cur;
}

Tensor Sequential::backward(const Tensor& gy, const Saved& saved) {
    Tensor g = gy;
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i].second->backward(g, saved.children.at(i));
    return g;
}

void Sequential::parameters(std::vector<Parameter*>& out) {
    for (auto& [name, layer] : layers_) layer->parameters(out);
}

void Sequential::set_names(const std::string& prefix) {
    for (auto& [name, layer] : layers_) layer->set_names(prefix + name + ".");
}

// ---------------------------------------------------------------- Fire

Fire::Fire(int in_channels, int squeeze, int expand1x1, int expand3x3)
    : squeeze_(in_channels, squeeze, 1), expand1_(squeeze, expand1x1, 1), expand3_(squeeze, expand3x3, 3, 1, 1) {}

Shape Fire::output_shape(const Shape& in) const {
    const Shape s = squeeze_.output_shape(in);
    const Shape a = expand1_.output_shape(s);
    const Shape b = expand3_.output_shape(s);
    return {in[0], a[1] + b[1], a[2], a[3]};
}

Tensor Fire::forward(const Tensor& x, const Context& ctx, Saved* saved) const {
    if (saved) saved->children.assign(6, Saved{});
    auto slot = [&](int i) { return saved ? &saved->children[i] : nullptr; };
    const Tensor s = relu_.forward(squeeze_.forward(x, ctx, slot(0)), ctx, slot(1));
    const Tensor a = relu_.forward(expand1_.forward(s, ctx, slot(2)), ctx, slot(3));
    const Tensor b = relu_.forward(expand3_.forward(s, ctx, slot(4)), ctx, slot(5));
    Tensor y(x.n(), a.c() + b.c(), a.h(), a.w());
    for (int n = 0; n < x.n(); ++n) {
        std::copy_n(a.sample(n), a.sample_size(), y.sample(n));
        std::copy_n(b.sample(n), b.sample_size(), y.sample(n) + a.sample_size());
    }
    return y;
}

Tensor Fire::backward(const Tensor& gy, const Saved& saved) {
    const int ca = expand1_.out_channels(), cb = expand3_.out_channels();
    Tensor ga(gy.n(), ca, gy.h(), gy.w());
    Tensor gb(gy.n(), cb, gy.h(), gy.w());
    for (int n = 0; n < gy.n(); ++n) {
        std::copy_n(gy.sample(n), ga.sample_size(), ga.sample(n));
        std::copy_n(gy.sample(n) + ga.sample_size(), gb.sample_size(), gb.sample(n));
    }
    const auto& ch = saved.children;
    Tensor gs = expand1_.backward(relu_.backward(ga, ch.at(3)), ch.at(2));
    gs.add(expand3_.backward(relu_.backward(gb, ch.at(5)), ch.at(4)));
    return squeeze_.backward(relu_.backward(gs, ch.at(1)), ch.at(0));
}

void Fire::parameters(std::vector<Parameter*>& out) {
    squeeze_.parameters(out);
    expand1_.parameters(out);
    expand3_.parameters(out);
}

void Fire::set_names(const std::string& prefix) {
    squeeze_.set_names(prefix + "squeeze1x1.");
    expand1_.set_names(prefix + "expand1x1.");
    expand3_.set_names(prefix + "expand3x3.");
}

// ---------------------------------------------------------------- Bottleneck

Bottleneck::Bottleneck(int in_channels, int mid_channels, int out_channels, int stride) {
    branch_.add("branch2a", std::make_unique<Conv2d>(in_channels, mid_channels, 1, stride, 0, 1, false))
        .add("bn2a", std::make_unique<ChannelAffine>(mid_channels))
        .add("relu2a", std::make_unique<ReLU>())
        .add("branch2b", std::make_unique<Conv2d>(mid_channels, mid_channels, 3, 1, 1, 1, false))
        .add("bn2b", std::make_unique<ChannelAffine>(mid_channels))
        .add("relu2b", std::make_unique<ReLU>())
        .add("branch2c", std::make_unique<Conv2d>(mid_channels, out_channels, 1, 1, 0, 1, false))
        .add("bn2c", std::make_unique<ChannelAffine>(out_channels));
    if (stride != 1 || in_channels != out_channels) {
        projection_.add("branch1", std::make_unique<Conv2d>(in_channels, out_channels, 1, stride, 0, 1, false))
            .add("bn1", std::make_unique<ChannelAffine>(out_channels));
    }
}

Shape Bottleneck::output_shape(const Shape& in) const {
    const Shape b = branch_.output_shape(in);
    if (has_projection()) {
        require(projection_.output_shape(in) == b, "Bottleneck: shortcut shape mismatch");
    } else {
        require(in == b, "Bottleneck: identity shortcut shape mismatch");
    }
    return b;
}

Tensor Bottleneck::forward(const Tensor& x, const Context& ctx, Saved* saved) const {
    if (saved) saved->children.assign(3, Saved{});
    auto slot = [&](int i) { return saved ? &saved->children[i] : nullptr; };
    Tensor z = branch_.forward(x, ctx, slot(0));
    if (has_projection()) {
        z.add(projection_.forward(x, ctx, slot(1)));
    } else {
        z.add(x);
    }
    return relu_.forward(z, ctx, slot(2));
}

Tensor Bottleneck::backward(const Tensor& gy, const Saved& saved) {
    const Tensor gz = relu_.backward(gy, saved.children.at(2));
    Tensor gx = branch_.backward(gz, saved.children.at(0));
    gx.add(has_projection() ? projection_.backward(gz, saved.children.at(1)) : gz);
    return gx;
}

void Bottleneck::parameters(std::vector<Parameter*>& out) {
    branch_.parameters(out);
    projection_.parameters(out);
}

void Bottleneck::set_names(const std::string& prefix) {
    branch_.set_names(prefix);
    projection_.set_names(prefix);
}

// ---------------------------------------------------------------- init

void he_init(Conv2d& conv, std::mt19937_64& rng) {
    std::normal_distribution<float> dist(0.f, std::sqrt(2.f / static_cast<float>(conv.fan_in())));
    for (float& v : conv.weight().value.values()) v = dist(rng);
    conv.bias().value.fill(0.f);
}

void he_init(Linear& linear, std::mt19937_64& rng) {
    std::normal_distribution<float> dist(0.f, std::sqrt(2.f / static_cast<float>(linear.in_features())));
    for (float& v : linear.weight().value.values()) v = dist(rng);
    linear.bias().value.fill(0.f);
}

}  // namespace gazezone::nn
