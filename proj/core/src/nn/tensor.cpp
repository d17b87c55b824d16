#include "cfo/nn/tensor.hpp"

#include "cfo/error.hpp"

namespace cfo::nn {

std::string shape_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k) s += ",";
        s += std::to_string(shape[k]);
    }
    return s + ")";
}

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_shape(const Shape& actual, const Shape& expected, const std::string& what) {
    if (actual != expected)
        fail(ErrorKind::Shape, what + ": expected " + shape_string(expected) + ", got " + shape_string(actual));
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size())
        fail(ErrorKind::Shape, "tensor data length " + std::to_string(data_.size()) +
                                   " does not match shape " + shape_string(shape_));
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
    return Tensor(std::move(shape), data_);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace cfo::nn
