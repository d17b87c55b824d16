#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfo/nn/layers.hpp"
#include "cfo/nn/tensor.hpp"

namespace cfo::nn {

enum class Head : std::uint8_t { Flatten = 0, GlobalAvgPool = 1 };

/// IQ-ResNet architecture: 2-channel stem convolution, a chain of residual
/// blocks, and a linear regression head producing one offset per frame.
struct ModelConfig {
    std::size_t input_length = 1024;
    int stem_channels = 16;
    std::vector<int> block_channels{16, 32, 64};
    std::vector<int> block_strides{1, 2, 2};
    int kernel_size = 3;
    Head head = Head::Flatten;

    static constexpr int kInputChannels = 2;

    /// Throws Validation on inconsistent geometry.
    void validate() const;
    std::size_t total_stride() const;
    /// Input length of the head for Flatten (channels * L / total_stride), or the last channel count.
    std::size_t feature_size() const;

    /// Small geometry used by gradient checks: L = 16, channels 4/8/16.
    static ModelConfig tiny();

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename T>
struct ConvLayer {
    Tensor<T> kernels;  // (C_out, C_in, K)
    Tensor<T> bias;     // (C_out)
    int stride = 1;
    int padding = 0;
};

template <typename T>
struct ResidualBlock {
    ConvLayer<T> conv1;
    BatchNormParams<T> bn1;
    ConvLayer<T> conv2;
    BatchNormParams<T> bn2;
    bool has_projection = false;
    ConvLayer<T> proj;  // 1x1, used when stride != 1 or channels change
    BatchNormParams<T> proj_bn;
};

template <typename T>
struct Model {
    ModelConfig config;
    ConvLayer<T> stem;
    std::vector<ResidualBlock<T>> blocks;
    Tensor<T> head_weight;  // (1, F)
    Tensor<T> head_bias;    // (1)

    /// Incremented whenever parameters are updated; forward caches record it.
    std::uint64_t version = 0;
};

enum class ParamKind {
    ConvKernel,
    ConvBias,
    BnGamma,
    BnBeta,
    BnRunningMean,
    BnRunningVar,
    HeadWeight,
    HeadBias,
};

inline bool is_learnable(ParamKind k) { return k != ParamKind::BnRunningMean && k != ParamKind::BnRunningVar; }

/// Visits every tensor in the fixed serialization order:
/// stem kernels, stem bias, per block conv1 k/b, bn1 gamma/beta/mean/var,
/// conv2 k/b, bn2 gamma/beta/mean/var, [projection k/b, bn gamma/beta/mean/var],
/// head weight, head bias.
template <typename M, typename F>
void for_each_tensor(M& model, F&& fn) {
    auto conv = [&](auto& layer, const std::string& name) {
        fn(name + ".kernels", layer.kernels, ParamKind::ConvKernel);
        fn(name + ".bias", layer.bias, ParamKind::ConvBias);
    };
    auto norm = [&](auto& bn, const std::string& name) {
        fn(name + ".gamma", bn.gamma, ParamKind::BnGamma);
        fn(name + ".beta", bn.beta, ParamKind::BnBeta);
        fn(name + ".running_mean", bn.running_mean, ParamKind::BnRunningMean);
        fn(name + ".running_var", bn.running_var, ParamKind::BnRunningVar);
    };
    conv(model.stem, "stem");
    for (std::size_t k = 0; k < model.blocks.size(); ++k) {
        auto& blk = model.blocks[k];
        const std::string p = "res" + std::to_string(k + 1);
        conv(blk.conv1, p + ".conv1");
        norm(blk.bn1, p + ".bn1");
        conv(blk.conv2, p + ".conv2");
        norm(blk.bn2, p + ".bn2");
        if (blk.has_projection) {
            conv(blk.proj, p + ".proj");
            norm(blk.proj_bn, p + ".proj_bn");
        }
    }
    fn(std::string("head.weight"), model.head_weight, ParamKind::HeadWeight);
    fn(std::string("head.bias"), model.head_bias, ParamKind::HeadBias);
}

/// Total scalar count of all stored tensors (learnable and running statistics).
std::size_t parameter_count(const ModelConfig& config);

/// Allocates all tensors with the documented initial values: conv kernels from
/// N(0, 2/fan_in), biases zero, BN gamma 1 beta 0 mean 0 var 1, head weights
/// U(+-1/sqrt(fan_in)).
template <typename T>
Model<T> make_model(const ModelConfig& config, std::uint64_t seed);

/// Same structure as `model`, every tensor zero. Used to hold gradients.
template <typename T>
Model<T> zeros_like(const Model<T>& model);

template <typename To, typename From>
Model<To> cast_model(const Model<From>& model);

template <typename T>
struct BlockCache {
    Tensor<T> input;
    Tensor<T> pre_relu1;  // bn1 output
    Tensor<T> act1;       // relu(bn1 output), input to conv2
    BatchNormCache<T> bn1, bn2, proj_bn;
    Tensor<T> pre_relu_out;  // main + skip
};

template <typename T>
struct ForwardCache {
    bool filled = false;
    std::uint64_t model_version = 0;
    Tensor<T> input;
    std::vector<BlockCache<T>> blocks;
    Tensor<T> features;  // head input, (B, F)
};

/// Returns (B, 1). In TRAIN mode updates BN running statistics; pass a cache
/// to enable model_backward.
template <typename T>
Tensor<T> model_forward(Model<T>& model, const Tensor<T>& input, Mode mode, ForwardCache<T>* cache = nullptr);

/// Gradient of the loss w.r.t. every learnable tensor, given d loss / d output.
/// Running-statistic slots of the result are zero. Throws State if the cache is
/// missing or older than the model parameters.
template <typename T>
Model<T> model_backward(const Model<T>& model, const ForwardCache<T>& cache, const Tensor<T>& grad_output);

/// Single residual block, exposed for tests.
template <typename T>
Tensor<T> residual_block_forward(ResidualBlock<T>& block, const Tensor<T>& input, Mode mode,
                                 BlockCache<T>* cache = nullptr);

}  // namespace cfo::nn
