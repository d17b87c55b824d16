#pragma once

#include <cstdint>

#include "cfo/nn/model.hpp"

namespace cfo::nn {

template <typename T>
struct AdamState {
    Model<T> first_moment;
    Model<T> second_moment;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState fresh(const Model<T>& params) { return {zeros_like(params), zeros_like(params)}; }
};

/// One bias-corrected Adam update over every learnable tensor; increments the
/// step counter and the model version. A non-finite gradient throws Divergence
/// before anything is modified.
template <typename T>
void adam_step(Model<T>& params, const Model<T>& grads, AdamState<T>& state, double lr);

}  // namespace cfo::nn
