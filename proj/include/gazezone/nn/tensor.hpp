#pragma once

#include <array>
#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace gazezone::nn {

/// Allocates on 64-byte boundaries so vectorised reductions see the same
/// alignment, and hence the same summation order, on every run.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept {
        return true;
    }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

/// N x C x H x W.
using Shape = std::array<int, 4>;

std::string to_string(const Shape& s);

/// Dense float tensor, always rank 4 in NCHW order.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(const Shape& shape, float fill = 0.f);
    Tensor(int n, int c, int h, int w, float fill = 0.f) : Tensor(Shape{n, c, h, w}, fill) {}

    const Shape& shape() const { return shape_; }
    int n() const { return shape_[0]; }
    int c() const { return shape_[1]; }
    int h() const { return shape_[2]; }
    int w() const { return shape_[3]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::span<float> values() { return data_; }
    std::span<const float> values() const { return data_; }

    /// Pointer to the start of sample i.
    float* sample(int i) { return data_.data() + static_cast<std::size_t>(i) * sample_size(); }
    const float* sample(int i) const { return data_.data() + static_cast<std::size_t>(i) * sample_size(); }
    std::size_t sample_size() const { return static_cast<std::size_t>(shape_[1]) * shape_[2] * shape_[3]; }

    float& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
    float at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

    void fill(float v);
    /// Element-wise this += other (shapes must match).
    void add(const Tensor& other);

    bool operator==(const Tensor&) const = default;

private:
    std::size_t index(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
    }

    Shape shape_{0, 0, 0, 0};
    FloatBuffer data_;
};

/// A learnable tensor and its accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    explicit Parameter(Shape shape = {0, 0, 0, 0}) : value(shape), grad(shape) {}
    void zero_grad() { grad.fill(0.f); }
};

}  // namespace gazezone::nn
