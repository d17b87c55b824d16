#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace cfo::nn {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major array. The element type selects the precision: float for
/// training and inference, double for gradient checks.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
    Tensor(Shape shape, std::vector<T> data);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    T& operator[](std::size_t k) { return data_[k]; }
    const T& operator[](std::size_t k) const { return data_[k]; }

    /// Rank-3 access (batch, channel, position).
    T& at(std::size_t b, std::size_t c, std::size_t n) { return data_[(b * shape_[1] + c) * shape_[2] + n]; }
    const T& at(std::size_t b, std::size_t c, std::size_t n) const {
        return data_[(b * shape_[1] + c) * shape_[2] + n];
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    /// Same data under a new shape of equal element count.
    Tensor reshaped(Shape shape) const;

    bool all_finite() const noexcept {
        for (T v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor<U>(shape_, std::move(out));
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

/// Throws Shape naming `what` unless the tensor has exactly `expected` shape.
void require_shape(const Shape& actual, const Shape& expected, const std::string& what);

}  // namespace cfo::nn
