#pragma once

#include <vector>

#include "cfo/nn/tensor.hpp"

namespace cfo::nn {

enum class Mode { Train, Eval };

// ---- 1-D convolution (cross-correlation, no kernel flip) ----

/// out[b,o,i] = bias[o] + sum_{c,k} kernels[o,c,k] * padded[b,c,i*stride+k]
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& bias,
                         int stride, int padding);

template <typename T>
struct ConvGrads {
    Tensor<T> input;
    Tensor<T> kernels;
    Tensor<T> bias;
};

template <typename T>
ConvGrads<T> conv1d_backward(const Tensor<T>& grad_out, const Tensor<T>& input, const Tensor<T>& kernels,
                             int stride, int padding);

// ---- batch normalization over (batch, position) per channel ----

template <typename T>
struct BatchNormParams {
    Tensor<T> gamma;
    Tensor<T> beta;
    Tensor<T> running_mean;
    Tensor<T> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    static BatchNormParams identity(std::size_t channels);
};

template <typename T>
struct BatchNormCache {
    Tensor<T> xhat;
    std::vector<double> inv_std;
};

/// TRAIN normalizes with biased batch statistics and updates the running
/// statistics; EVAL uses the running statistics only.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, BatchNormParams<T>& bn, Mode mode,
                            BatchNormCache<T>* cache = nullptr);

template <typename T>
struct BatchNormGrads {
    Tensor<T> input;
    Tensor<T> gamma;
    Tensor<T> beta;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormParams<T>& bn,
                                     const BatchNormCache<T>& cache);

// ---- ReLU ----

template <typename T>
Tensor<T> relu(const Tensor<T>& input);

/// Gradient passes where the forward input was strictly positive.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& forward_input);

// ---- loss ----

template <typename T>
struct LossResult {
    double loss = 0.0;
    Tensor<T> grad;
};

/// (1/B) sum (target - pred)^2 and its gradient (2/B)(pred - target).
template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target);

/// Fault injection for mutation tests: scales the kernel gradient returned by
/// conv1d_backward by (1 + value). Zero in normal operation.
namespace testing {
void set_conv_backward_fault(double value);
double conv_backward_fault();
}  // namespace testing

}  // namespace cfo::nn
