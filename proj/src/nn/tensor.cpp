#include "gazezone/nn/tensor.hpp"

#include <algorithm>

#include "gazezone/core/types.hpp"

namespace gazezone::nn {

std::string to_string(const Shape& s) {
    return std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" + std::to_string(s[2]) + "x" +
           std::to_string(s[3]);
}

Tensor::Tensor(const Shape& shape, float fill) : shape_(shape) {
    for (int d : shape) {
        if (d < 0) throw Error("negative tensor dimension in " + to_string(shape));
    }
    data_.assign(static_cast<std::size_t>(shape[0]) * shape[1] * shape[2] * shape[3], fill);
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add(const Tensor& other) {
    if (other.shape_ != shape_) throw Error("tensor add: shape " + to_string(other.shape_) + " vs " + to_string(shape_));
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

}  // namespace gazezone::nn
