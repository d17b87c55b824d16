#include "cfo/nn/model.hpp"

#include <cmath>

#include "cfo/error.hpp"
#include "cfo/rng.hpp"
#include "nn/kernels.hpp"

namespace cfo::nn {

void ModelConfig::validate() const {
    std::string bad;
    if (input_length < 1) bad += " input_length";
    if (stem_channels < 1) bad += " stem_channels";
    if (block_channels.empty() || block_channels.size() != block_strides.size()) bad += " block_channels/block_strides";
    for (int c : block_channels)
        if (c < 1 || c > 65535) bad += " block_channels";
    for (int s : block_strides)
        if (s != 1 && s != 2) bad += " block_strides";
    if (kernel_size < 1 || kernel_size % 2 == 0 || kernel_size > 255) bad += " kernel_size";
    if (bad.empty() && input_length % total_stride() != 0) bad += " input_length (not divisible by total stride)";
    if (!bad.empty()) fail(ErrorKind::Validation, "invalid model config:" + bad);
}

std::size_t ModelConfig::total_stride() const {
    std::size_t s = 1;
    for (int v : block_strides) s *= static_cast<std::size_t>(v);
    return s;
}

std::size_t ModelConfig::feature_size() const {
    const auto last = static_cast<std::size_t>(block_channels.back());
    return head == Head::Flatten ? last * (input_length / total_stride()) : last;
}

ModelConfig ModelConfig::tiny() {
    ModelConfig c;
    c.input_length = 16;
    c.stem_channels = 4;
    c.block_channels = {4, 8, 16};
    c.block_strides = {1, 2, 2};
    return c;
}

namespace {

template <typename T>
ConvLayer<T> conv_layer(std::size_t out_ch, std::size_t in_ch, std::size_t k, int stride) {
    return {Tensor<T>({out_ch, in_ch, k}), Tensor<T>({out_ch}), stride, static_cast<int>(k / 2)};
}

template <typename T>
Model<T> allocate(const ModelConfig& config) {
    config.validate();
    Model<T> m;
    m.config = config;
    const auto k = static_cast<std::size_t>(config.kernel_size);
    m.stem = conv_layer<T>(static_cast<std::size_t>(config.stem_channels), ModelConfig::kInputChannels, k, 1);
    auto in_ch = static_cast<std::size_t>(config.stem_channels);
    for (std::size_t b = 0; b < config.block_channels.size(); ++b) {
        const auto out_ch = static_cast<std::size_t>(config.block_channels[b]);
        const int stride = config.block_strides[b];
        ResidualBlock<T> blk;
        blk.conv1 = conv_layer<T>(out_ch, in_ch, k, stride);
        blk.bn1 = BatchNormParams<T>::identity(out_ch);
        blk.conv2 = conv_layer<T>(out_ch, out_ch, k, 1);
        blk.bn2 = BatchNormParams<T>::identity(out_ch);
        blk.has_projection = stride != 1 || in_ch != out_ch;
        if (blk.has_projection) {
            blk.proj = conv_layer<T>(out_ch, in_ch, 1, stride);
            blk.proj.padding = 0;
            blk.proj_bn = BatchNormParams<T>::identity(out_ch);
        }
        m.blocks.push_back(std::move(blk));
        in_ch = out_ch;
    }
    m.head_weight = Tensor<T>({1, config.feature_size()});
    m.head_bias = Tensor<T>({1});
    return m;
}

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
}

template <typename T>
Tensor<T> conv_forward(const ConvLayer<T>& layer, const Tensor<T>& x) {
    return conv1d_forward(x, layer.kernels, layer.bias, layer.stride, layer.padding);
}

}  // namespace

std::size_t parameter_count(const ModelConfig& config) {
    auto m = allocate<float>(config);
    std::size_t n = 0;
    for_each_tensor(m, [&](const std::string&, const Tensor<float>& t, ParamKind) { n += t.size(); });
    return n;
}

template <typename T>
Model<T> make_model(const ModelConfig& config, std::uint64_t seed) {
    Model<T> m = allocate<T>(config);
    Rng rng(seed);
    for_each_tensor(m, [&](const std::string&, Tensor<T>& t, ParamKind kind) {
        switch (kind) {
            case ParamKind::ConvKernel: {
                const double fan_in = static_cast<double>(t.dim(1) * t.dim(2));
                const double sd = std::sqrt(2.0 / fan_in);
                for (auto& v : t.values()) v = static_cast<T>(sd * rng.normal());
                break;
            }
            case ParamKind::HeadWeight: {
                const double bound = 1.0 / std::sqrt(static_cast<double>(t.dim(1)));
                for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
                break;
            }
            default:
                break;  // biases 0, gamma 1, beta 0, running stats (0, 1) from allocate
        }
    });
    return m;
}

template <typename T>
Model<T> zeros_like(const Model<T>& model) {
    Model<T> z = allocate<T>(model.config);
    for_each_tensor(z, [](const std::string&, Tensor<T>& t, ParamKind) { t.fill(T(0)); });
    return z;
}

template <typename To, typename From>
Model<To> cast_model(const Model<From>& model) {
    Model<To> out = allocate<To>(model.config);
    std::vector<Tensor<To>*> dst;
    for_each_tensor(out, [&](const std::string&, Tensor<To>& t, ParamKind) { dst.push_back(&t); });
    std::size_t k = 0;
    for_each_tensor(model, [&](const std::string&, const Tensor<From>& t, ParamKind) { *dst[k++] = t.template cast<To>(); });
    out.version = model.version;
    return out;
}

template <typename T>
Tensor<T> residual_block_forward(ResidualBlock<T>& block, const Tensor<T>& input, Mode mode, BlockCache<T>* cache) {
    Tensor<T> z1 = conv_forward(block.conv1, input);
    Tensor<T> y1 = batchnorm_forward(z1, block.bn1, mode, cache ? &cache->bn1 : nullptr);
    Tensor<T> a1 = relu(y1);
    Tensor<T> z2 = conv_forward(block.conv2, a1);
    Tensor<T> out = batchnorm_forward(z2, block.bn2, mode, cache ? &cache->bn2 : nullptr);
    if (block.has_projection) {
        Tensor<T> zp = conv_forward(block.proj, input);
        add_inplace(out, batchnorm_forward(zp, block.proj_bn, mode, cache ? &cache->proj_bn : nullptr));
    } else {
        require_shape(input.shape(), out.shape(), "residual identity skip");
        add_inplace(out, input);
    }
    Tensor<T> result = relu(out);
    if (cache) {
        cache->input = input;
        cache->pre_relu1 = std::move(y1);
        cache->act1 = std::move(a1);
        cache->pre_relu_out = std::move(out);
    }
    return result;
}

template <typename T>
Tensor<T> model_forward(Model<T>& model, const Tensor<T>& input, Mode mode, ForwardCache<T>* cache) {
    const auto& cfg = model.config;
    if (input.rank() != 3 || input.dim(1) != ModelConfig::kInputChannels)
        fail(ErrorKind::Shape, "model input must be (B, 2, L), got " + shape_string(input.shape()));
    const std::size_t batch = input.dim(0), len = input.dim(2);
    if (cfg.head == Head::Flatten && len != cfg.input_length)
        fail(ErrorKind::Shape, "model expects frame length " + std::to_string(cfg.input_length) + ", got " +
                                   std::to_string(len));
    if (len % cfg.total_stride() != 0)
        fail(ErrorKind::Shape, "frame length " + std::to_string(len) + " not divisible by total stride");

    if (cache) {
        cache->filled = false;
        cache->input = input;
        cache->blocks.assign(model.blocks.size(), {});
    }
    Tensor<T> x = conv_forward(model.stem, input);
    for (std::size_t b = 0; b < model.blocks.size(); ++b)
        x = residual_block_forward(model.blocks[b], x, mode, cache ? &cache->blocks[b] : nullptr);

    Tensor<T> features;
    if (cfg.head == Head::Flatten) {
        features = x.reshaped({batch, x.dim(1) * x.dim(2)});
    } else {
        features = Tensor<T>({batch, x.dim(1)});
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < x.dim(1); ++c)
                features[b * x.dim(1) + c] = static_cast<T>(sum(&x.at(b, c, 0), x.dim(2)) / static_cast<double>(x.dim(2)));
    }
    const std::size_t f = features.dim(1);
    require_shape(model.head_weight.shape(), {1, f}, "head.weight");
    Tensor<T> out({batch, 1});
    for (std::size_t b = 0; b < batch; ++b)
        out[b] = static_cast<T>(dot(model.head_weight.data(), features.data() + b * f, f) + model.head_bias[0]);

    if (cache) {
        cache->features = std::move(features);
        cache->model_version = model.version;
        cache->filled = true;
    }
    return out;
}

namespace {

template <typename T>
void accumulate_conv(ConvLayer<T>& grad, const ConvGrads<T>& g) {
    grad.kernels = g.kernels;
    grad.bias = g.bias;
}

template <typename T>
void accumulate_bn(BatchNormParams<T>& grad, const BatchNormGrads<T>& g) {
    grad.gamma = g.gamma;
    grad.beta = g.beta;
}

template <typename T>
Tensor<T> block_backward(const ResidualBlock<T>& blk, const BlockCache<T>& c, const Tensor<T>& grad_out,
                         ResidualBlock<T>& grad) {
    Tensor<T> g_sum = relu_backward(grad_out, c.pre_relu_out);

    auto bn2 = batchnorm_backward(g_sum, blk.bn2, c.bn2);
    accumulate_bn(grad.bn2, bn2);
    auto conv2 = conv1d_backward(bn2.input, c.act1, blk.conv2.kernels, blk.conv2.stride, blk.conv2.padding);
    accumulate_conv(grad.conv2, conv2);
    Tensor<T> g_y1 = relu_backward(conv2.input, c.pre_relu1);
    auto bn1 = batchnorm_backward(g_y1, blk.bn1, c.bn1);
    accumulate_bn(grad.bn1, bn1);
    auto conv1 = conv1d_backward(bn1.input, c.input, blk.conv1.kernels, blk.conv1.stride, blk.conv1.padding);
    accumulate_conv(grad.conv1, conv1);

    Tensor<T> g_in = std::move(conv1.input);
    if (blk.has_projection) {
        auto pbn = batchnorm_backward(g_sum, blk.proj_bn, c.proj_bn);
        accumulate_bn(grad.proj_bn, pbn);
        auto pconv = conv1d_backward(pbn.input, c.input, blk.proj.kernels, blk.proj.stride, blk.proj.padding);
        accumulate_conv(grad.proj, pconv);
        add_inplace(g_in, pconv.input);
    } else {
        add_inplace(g_in, g_sum);
    }
    return g_in;
}

}  // namespace

template <typename T>
Model<T> model_backward(const Model<T>& model, const ForwardCache<T>& cache, const Tensor<T>& grad_output) {
    if (!cache.filled) fail(ErrorKind::State, "model_backward: forward cache is empty");
    if (cache.model_version != model.version)
        fail(ErrorKind::State, "model_backward: forward cache is stale (model version " +
                                   std::to_string(model.version) + ", cache " + std::to_string(cache.model_version) + ")");
    if (cache.blocks.size() != model.blocks.size())
        fail(ErrorKind::State, "model_backward: cache does not match model structure");
    const std::size_t batch = cache.features.dim(0), f = cache.features.dim(1);
    require_shape(grad_output.shape(), {batch, 1}, "model_backward grad_output");

    Model<T> grad = zeros_like(model);
    double gbias = 0.0;
    Tensor<T> g_feat({batch, f});
    for (std::size_t b = 0; b < batch; ++b) {
        const T g = grad_output[b];
        gbias += g;
        axpy_strided(g, cache.features.data() + b * f, 1, grad.head_weight.data(), f);
        axpy_strided(g, model.head_weight.data(), 1, g_feat.data() + b * f, f);
    }
    grad.head_bias[0] = static_cast<T>(gbias);

    // Shape of the last block's output.
    const Tensor<T>& last_pre = cache.blocks.back().pre_relu_out;
    Tensor<T> g_x;
    if (model.config.head == Head::Flatten) {
        g_x = g_feat.reshaped(last_pre.shape());
    } else {
        g_x = Tensor<T>(last_pre.shape());
        const std::size_t ch = last_pre.dim(1), len = last_pre.dim(2);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < ch; ++c) {
                const T v = static_cast<T>(g_feat[b * ch + c] / static_cast<double>(len));
                std::fill(&g_x.at(b, c, 0), &g_x.at(b, c, 0) + len, v);
            }
    }

    for (std::size_t k = model.blocks.size(); k-- > 0;)
        g_x = block_backward(model.blocks[k], cache.blocks[k], g_x, grad.blocks[k]);

    auto stem = conv1d_backward(g_x, cache.input, model.stem.kernels, model.stem.stride, model.stem.padding);
    accumulate_conv(grad.stem, stem);
    return grad;
}

#define CFO_INSTANTIATE_MODEL(T)                                                                       \
    template Model<T> make_model<T>(const ModelConfig&, std::uint64_t);                               \
    template Model<T> zeros_like(const Model<T>&);                                                     \
    template Tensor<T> residual_block_forward(ResidualBlock<T>&, const Tensor<T>&, Mode, BlockCache<T>*); \
    template Tensor<T> model_forward(Model<T>&, const Tensor<T>&, Mode, ForwardCache<T>*);             \
    template Model<T> model_backward(const Model<T>&, const ForwardCache<T>&, const Tensor<T>&);

CFO_INSTANTIATE_MODEL(float)
CFO_INSTANTIATE_MODEL(double)
template Model<float> cast_model<float, double>(const Model<double>&);
template Model<double> cast_model<double, float>(const Model<float>&);
template Model<float> cast_model<float, float>(const Model<float>&);
template Model<double> cast_model<double, double>(const Model<double>&);

#undef CFO_INSTANTIATE_MODEL

}  // namespace cfo::nn
