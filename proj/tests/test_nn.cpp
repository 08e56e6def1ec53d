#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "gazezone/nn/layers.hpp"
#include "support.hpp"

using namespace gazezone::nn;

namespace {

Tensor random_tensor(std::mt19937_64& rng, Shape s, float scale = 1.f) {
    Tensor t(s);
    std::normal_distribution<float> n(0.f, scale);
    for (auto& v : t.values()) v = n(rng);
    return t;
}

void randomize(Layer& layer, std::mt19937_64& rng, float scale = 0.5f) {
    std::normal_distribution<float> n(0.f, scale);
    for (Parameter* p : layer.collect_parameters()) {
        for (auto& v : p->value.values()) v = n(rng);
    }
}

double weighted_sum(const Tensor& out, const Tensor& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += static_cast<double>(out.data()[i]) * r.data()[i];
    return s;
}

/// Central differences of L = sum(forward(x) * r) against backward(),
/// for up to `samples` entries of x and of every parameter.
void gradcheck(Layer& layer, Tensor x, std::uint64_t seed, int samples = 25, float eps = 1e-2f, double tol = 2e-2) {
    std::mt19937_64 rng(seed);
    const Context ctx;
    Saved saved;
    const Tensor out = layer.forward(x, ctx, &saved);
    const Tensor r = random_tensor(rng, out.shape());
    for (Parameter* p : layer.collect_parameters()) p->zero_grad();
    const Tensor dx = layer.backward(r, saved);
    REQUIRE(dx.shape() == x.shape());

    auto loss = [&]() { return weighted_sum(layer.forward(x, ctx, nullptr), r); };
    auto check = [&](std::span<float> values, std::span<const float> analytic, const std::string& what) {
        for (int k = 0; k < samples; ++k) {
            const auto i = static_cast<std::size_t>(testing::uniform_int(rng, 0, static_cast<int>(values.size()) - 1));
            const float keep = values[i];
            values[i] = keep + eps;
            const double up = loss();
            values[i] = keep - eps;
            const double down = loss();
            values[i] = keep;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[i];
            INFO(layer.type() << " " << what << "[" << i << "] analytic " << a << " numeric " << numeric);
            CHECK(std::abs(a - numeric) <= tol * std::max({1.0, std::abs(a), std::abs(numeric)}));
        }
    };
    check(x.values(), dx.values(), "input");
    for (Parameter* p : layer.collect_parameters()) check(p->value.values(), p->grad.values(), p->name);
}

/// Direct convolution used as an independent forward oracle.
Tensor naive_conv(const Tensor& x, const Conv2d& conv, int stride, int pad) {
    const int k = conv.kernel(), g = conv.groups();
    const int cin_g = conv.in_channels() / g, cout_g = conv.out_channels() / g;
    const int oh = (x.h() + 2 * pad - k) / stride + 1, ow = (x.w() + 2 * pad - k) / stride + 1;
    Tensor y(x.n(), conv.out_channels(), oh, ow);
    for (int n = 0; n < x.n(); ++n)
        for (int o = 0; o < conv.out_channels(); ++o)
            for (int i = 0; i < oh; ++i)
                for (int j = 0; j < ow; ++j) {
                    double s = conv.bias().value.at(0, o, 0, 0);
                    const int grp = o / cout_g;
                    for (int c = 0; c < cin_g; ++c)
                        for (int u = 0; u < k; ++u)
                            for (int v = 0; v < k; ++v) {
                                const int yy = i * stride - pad + u, xx = j * stride - pad + v;
                                if (yy < 0 || xx < 0 || yy >= x.h() || xx >= x.w()) continue;
                                s += static_cast<double>(conv.weight().value.at(o, c, u, v)) *
                                     x.at(n, grp * cin_g + c, yy, xx);
                            }
                    y.at(n, o, i, j) = static_cast<float>(s);
                }
    return y;
}

}  // namespace

TEST_CASE("conv2d forward matches direct convolution") {
    std::mt19937_64 rng(1);
    struct Case {
        int in, out, k, s, p, g;
    };
    for (const Case c : {Case{3, 4, 3, 1, 1, 1}, Case{4, 6, 3, 2, 0, 2}, Case{2, 5, 1, 1, 0, 1}, Case{6, 4, 5, 3, 2, 2}}) {
        Conv2d conv(c.in, c.out, c.k, c.s, c.p, c.g);
        randomize(conv, rng);
        const Tensor x = random_tensor(rng, {2, c.in, 9, 11});
        const Tensor y = conv.forward(x, {}, nullptr);
        const Tensor ref = naive_conv(x, conv, c.s, c.p);
        REQUIRE(y.shape() == ref.shape());
        CHECK(y.shape() == conv.output_shape(x.shape()));
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-4));
    }
}

TEST_CASE("gradient checks") {
    std::mt19937_64 rng(2);
    SUBCASE("conv2d") {
        Conv2d conv(4, 6, 3, 2, 1, 2);
        randomize(conv, rng);
        conv.set_names("c.");
        gradcheck(conv, random_tensor(rng, {2, 4, 7, 6}), 10);
    }
    SUBCASE("linear") {
        Linear lin(12, 5);
        randomize(lin, rng);
        gradcheck(lin, random_tensor(rng, {3, 3, 2, 2}), 11);
    }
    SUBCASE("relu") {
        ReLU relu;
        Tensor x = random_tensor(rng, {2, 3, 4, 4});
        for (auto& v : x.values()) v += v >= 0 ? 0.1f : -0.1f;
        gradcheck(relu, x, 12);
    }
    SUBCASE("maxpool") {
        MaxPool2d pool(3, 2);
        Tensor x(1, 2, 7, 8);
        std::vector<float> vals(x.size());
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 0.1f * static_cast<float>(i);
        std::shuffle(vals.begin(), vals.end(), rng);
        std::copy(vals.begin(), vals.end(), x.data());
        CHECK(pool.output_shape(x.shape()) == Shape{1, 2, 3, 4});
        gradcheck(pool, x, 13, 25, 1e-2f);
    }
    SUBCASE("global average pool") {
        GlobalAvgPool gap;
        gradcheck(gap, random_tensor(rng, {2, 3, 5, 4}), 14);
    }
    SUBCASE("local response norm") {
        LocalResponseNorm lrn(5, 1e-1f, 0.75f, 1.f);
        gradcheck(lrn, random_tensor(rng, {1, 7, 3, 3}, 2.f), 15);
    }
    SUBCASE("channel affine") {
        ChannelAffine aff(3);
        randomize(aff, rng);
        gradcheck(aff, random_tensor(rng, {2, 3, 3, 3}), 16);
    }
    SUBCASE("fire") {
        Fire fire(4, 3, 4, 4);
        randomize(fire, rng);
        gradcheck(fire, random_tensor(rng, {1, 4, 5, 5}), 17, 25, 1e-3f, 3e-2);
    }
    SUBCASE("bottleneck with projection") {
        Bottleneck b(4, 2, 8, 2);
        randomize(b, rng);
        CHECK(b.has_projection());
        gradcheck(b, random_tensor(rng, {1, 4, 6, 6}), 18, 25, 1e-3f, 3e-2);
    }
    SUBCASE("sequential") {
        Sequential seq;
        seq.add("conv", std::make_unique<Conv2d>(3, 4, 3, 1, 1));
        seq.add("aff", std::make_unique<ChannelAffine>(4));
        seq.add("gap", std::make_unique<GlobalAvgPool>());
        seq.add("fc", std::make_unique<Linear>(4, 3));
        randomize(seq, rng);
        seq.set_names("");
        gradcheck(seq, random_tensor(rng, {2, 3, 5, 5}), 19);
    }
}

TEST_CASE("maxpool uses ceil-mode output size") {
    MaxPool2d pool(3, 2);
    CHECK(pool.output_shape({1, 1, 55, 55}) == Shape{1, 1, 27, 27});
    CHECK(pool.output_shape({1, 1, 112, 112}) == Shape{1, 1, 56, 56});
    CHECK(pool.output_shape({1, 1, 6, 6}) == Shape{1, 1, 3, 3});
}

TEST_CASE("dropout is identity at inference and inverted in training") {
    std::mt19937_64 rng(3);
    Dropout d(0.5f);
    const Tensor x = random_tensor(rng, {1, 1, 20, 20});
    CHECK(d.forward(x, {}, nullptr) == x);
    std::mt19937_64 drng(9);
    Context ctx{true, &drng};
    Saved saved;
    const Tensor y = d.forward(x, ctx, &saved);
    int kept = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (y.data()[i] != 0.f) {
            ++kept;
            CHECK(y.data()[i] == doctest::Approx(2.f * x.data()[i]));
        }
    }
    CHECK(kept > 120);
    CHECK(kept < 280);
    Tensor ones(x.shape(), 1.f);
    const Tensor g = d.backward(ones, saved);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(g.data()[i] == (y.data()[i] != 0.f ? 2.f : 0.f));
}

TEST_CASE("he_init variance follows fan-in") {
    std::mt19937_64 rng(4);
    Conv2d conv(64, 128, 3);
    he_init(conv, rng);
    double ss = 0.0;
    for (float v : conv.weight().value.values()) ss += static_cast<double>(v) * v;
    const double var = ss / conv.weight().value.size();
    CHECK(var == doctest::Approx(2.0 / conv.fan_in()).epsilon(0.05));
    for (float v : conv.bias().value.values()) CHECK(v == 0.f);
}

TEST_CASE("sequential clone is deep and names are prefixed") {
    Sequential seq;
    seq.add("conv1", std::make_unique<Conv2d>(3, 2, 1));
    seq.add("fire2", std::make_unique<Fire>(2, 1, 1, 1));
    seq.set_names("");
    std::vector<std::string> names;
    for (auto* p : seq.collect_parameters()) names.push_back(p->name);
    CHECK(names.front() == "conv1.weight");
    CHECK(std::find(names.begin(), names.end(), "fire2.squeeze1x1.weight") != names.end());
    Sequential copy(seq);
    copy.collect_parameters()[0]->value.fill(7.f);
    CHECK(seq.collect_parameters()[0]->value.data()[0] != 7.f);
    CHECK_THROWS_AS(seq.output_shape({1, 4, 3, 3}), gazezone::Error);
}
