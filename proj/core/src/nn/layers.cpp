#include "cfo/nn/layers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "cfo/error.hpp"
#include "nn/kernels.hpp"

namespace cfo::nn {

namespace {

std::atomic<double> g_conv_backward_fault{0.0};

struct ConvGeometry {
    std::size_t batch, in_ch, out_ch, in_len, out_len, ksize;
};

template <typename T>
ConvGeometry check_conv(const Tensor<T>& input, const Tensor<T>& kernels, int stride, int padding) {
    if (input.rank() != 3) fail(ErrorKind::Shape, "conv1d: input must be (B, C, N), got " + shape_string(input.shape()));
    if (kernels.rank() != 3)
        fail(ErrorKind::Shape, "conv1d: kernels must be (C_out, C_in, K), got " + shape_string(kernels.shape()));
    if (kernels.dim(1) != input.dim(1))
        fail(ErrorKind::Shape, "conv1d: kernel input channels " + std::to_string(kernels.dim(1)) +
                                   " != input channels " + std::to_string(input.dim(1)));
    if (stride < 1 || padding < 0) fail(ErrorKind::Shape, "conv1d: stride must be >= 1 and padding >= 0");
    const auto n = static_cast<std::ptrdiff_t>(input.dim(2));
    const auto k = static_cast<std::ptrdiff_t>(kernels.dim(2));
    const std::ptrdiff_t span = n + 2 * padding - k;
    if (span < 0) fail(ErrorKind::Shape, "conv1d: kernel longer than padded input");
    return {input.dim(0), input.dim(1), kernels.dim(0), input.dim(2),
            static_cast<std::size_t>(span / stride + 1), kernels.dim(2)};
}

// Output positions i whose tap i*stride + offset falls inside [0, in_len).
struct Range {
    std::size_t lo, hi;
};

Range valid_range(std::ptrdiff_t offset, std::size_t stride, std::size_t in_len, std::size_t out_len) {
    const auto s = static_cast<std::ptrdiff_t>(stride);
    const std::ptrdiff_t lo = offset >= 0 ? 0 : (-offset + s - 1) / s;
    const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(in_len) - 1 - offset;
    std::ptrdiff_t hi = last < 0 ? 0 : last / s + 1;
    hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(out_len));
    if (hi < lo) hi = lo;
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

namespace testing {
void set_conv_backward_fault(double value) { g_conv_backward_fault.store(value); }
double conv_backward_fault() { return g_conv_backward_fault.load(); }
}  // namespace testing

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& bias, int stride,
                         int padding) {
    const auto g = check_conv(input, kernels, stride, padding);
    require_shape(bias.shape(), {g.out_ch}, "conv1d bias");
    Tensor<T> out({g.batch, g.out_ch, g.out_len});
    const auto s = static_cast<std::size_t>(stride);
    for (std::size_t b = 0; b < g.batch; ++b) {
        for (std::size_t o = 0; o < g.out_ch; ++o) {
            T* y = &out.at(b, o, 0);
            std::fill(y, y + g.out_len, bias[o]);
            for (std::size_t c = 0; c < g.in_ch; ++c) {
                const T* x = &input.at(b, c, 0);
                const T* w = &kernels.at(o, c, 0);
                for (std::size_t k = 0; k < g.ksize; ++k) {
                    const auto off = static_cast<std::ptrdiff_t>(k) - padding;
                    const auto r = valid_range(off, s, g.in_len, g.out_len);
                    axpy_strided(w[k], x + (static_cast<std::ptrdiff_t>(r.lo * s) + off), s, y + r.lo, r.hi - r.lo);
                }
            }
        }
    }
    return out;
}

template <typename T>
ConvGrads<T> conv1d_backward(const Tensor<T>& grad_out, const Tensor<T>& input, const Tensor<T>& kernels,
                             int stride, int padding) {
    const auto g = check_conv(input, kernels, stride, padding);
    require_shape(grad_out.shape(), {g.batch, g.out_ch, g.out_len}, "conv1d_backward grad_out");
    const auto s = static_cast<std::size_t>(stride);

    ConvGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(kernels.shape()), Tensor<T>({g.out_ch})};
    for (std::size_t o = 0; o < g.out_ch; ++o) {
        double acc = 0.0;
        for (std::size_t b = 0; b < g.batch; ++b) acc += sum(&grad_out.at(b, o, 0), g.out_len);
        grads.bias[o] = static_cast<T>(acc);
    }

    for (std::size_t o = 0; o < g.out_ch; ++o) {
        for (std::size_t c = 0; c < g.in_ch; ++c) {
            for (std::size_t k = 0; k < g.ksize; ++k) {
                const auto off = static_cast<std::ptrdiff_t>(k) - padding;
                const auto r = valid_range(off, s, g.in_len, g.out_len);
                double acc = 0.0;
                for (std::size_t b = 0; b < g.batch; ++b) {
                    const T* x = &input.at(b, c, 0) + (static_cast<std::ptrdiff_t>(r.lo * s) + off);
                    acc += dot_strided(&grad_out.at(b, o, r.lo), x, s, r.hi - r.lo);
                }
                grads.kernels.at(o, c, k) = static_cast<T>(acc);
            }
        }
    }

    for (std::size_t b = 0; b < g.batch; ++b) {
        for (std::size_t c = 0; c < g.in_ch; ++c) {
            T* gx = &grads.input.at(b, c, 0);
            for (std::size_t o = 0; o < g.out_ch; ++o) {
                const T* gy = &grad_out.at(b, o, 0);
                const T* w = &kernels.at(o, c, 0);
                for (std::size_t k = 0; k < g.ksize; ++k) {
                    const auto off = static_cast<std::ptrdiff_t>(k) - padding;
                    const auto r = valid_range(off, s, g.in_len, g.out_len);
                    scatter_strided(w[k], gy + r.lo, gx + (static_cast<std::ptrdiff_t>(r.lo * s) + off), s,
                                    r.hi - r.lo);
                }
            }
        }
    }

    if (const double fault = testing::conv_backward_fault(); fault != 0.0)
        for (auto& v : grads.kernels.values()) v = static_cast<T>(v * (1.0 + fault));
    return grads;
}

template <typename T>
BatchNormParams<T> BatchNormParams<T>::identity(std::size_t channels) {
    return {Tensor<T>({channels}, T(1)), Tensor<T>({channels}, T(0)), Tensor<T>({channels}, T(0)),
            Tensor<T>({channels}, T(1))};
}

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, BatchNormParams<T>& bn, Mode mode, BatchNormCache<T>* cache) {
    if (input.rank() != 3) fail(ErrorKind::Shape, "batchnorm: input must be (B, C, N)");
    const std::size_t batch = input.dim(0), channels = input.dim(1), len = input.dim(2);
    require_shape(bn.gamma.shape(), {channels}, "batchnorm gamma");
    require_shape(bn.beta.shape(), {channels}, "batchnorm beta");
    require_shape(bn.running_mean.shape(), {channels}, "batchnorm running_mean");
    require_shape(bn.running_var.shape(), {channels}, "batchnorm running_var");
    const std::size_t count = batch * len;

    Tensor<T> out(input.shape());
    if (mode == Mode::Eval) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double inv = 1.0 / std::sqrt(static_cast<double>(bn.running_var[c]) + bn.eps);
            const double mean = bn.running_mean[c];
            const double gamma = bn.gamma[c], beta = bn.beta[c];
            for (std::size_t b = 0; b < batch; ++b) {
                const T* x = &input.at(b, c, 0);
                T* y = &out.at(b, c, 0);
                for (std::size_t n = 0; n < len; ++n) y[n] = static_cast<T>(gamma * ((x[n] - mean) * inv) + beta);
            }
        }
        return out;
    }

    if (count < 2)
        fail(ErrorKind::Degenerate, "batchnorm: TRAIN mode needs at least 2 values per channel, got " +
                                        std::to_string(count));
    if (cache) {
        cache->xhat = Tensor<T>(input.shape());
        cache->inv_std.assign(channels, 0.0);
    }
    for (std::size_t c = 0; c < channels; ++c) {
        double mean = 0.0;
        for (std::size_t b = 0; b < batch; ++b) mean += sum(&input.at(b, c, 0), len);
        mean /= static_cast<double>(count);
        double var = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const T* x = &input.at(b, c, 0);
            for (std::size_t n = 0; n < len; ++n) {
                const double d = x[n] - mean;
                var += d * d;
            }
        }
        var /= static_cast<double>(count);
        const double inv = 1.0 / std::sqrt(var + bn.eps);
        const double gamma = bn.gamma[c], beta = bn.beta[c];
        for (std::size_t b = 0; b < batch; ++b) {
            const T* x = &input.at(b, c, 0);
            T* y = &out.at(b, c, 0);
            T* xh = cache ? &cache->xhat.at(b, c, 0) : nullptr;
            for (std::size_t n = 0; n < len; ++n) {
                const double h = (x[n] - mean) * inv;
                if (xh) xh[n] = static_cast<T>(h);
                y[n] = static_cast<T>(gamma * h + beta);
            }
        }
        if (cache) cache->inv_std[c] = inv;
        bn.running_mean[c] = static_cast<T>((1.0 - bn.momentum) * bn.running_mean[c] + bn.momentum * mean);
        bn.running_var[c] = static_cast<T>((1.0 - bn.momentum) * bn.running_var[c] + bn.momentum * var);
    }
    return out;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormParams<T>& bn,
                                     const BatchNormCache<T>& cache) {
    require_shape(grad_out.shape(), cache.xhat.shape(), "batchnorm_backward grad_out");
    const std::size_t batch = grad_out.dim(0), channels = grad_out.dim(1), len = grad_out.dim(2);
    const double count = static_cast<double>(batch * len);
    BatchNormGrads<T> grads{Tensor<T>(grad_out.shape()), Tensor<T>({channels}), Tensor<T>({channels})};
    for (std::size_t c = 0; c < channels; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            sum_dy += sum(&grad_out.at(b, c, 0), len);
            sum_dy_xhat += dot(&grad_out.at(b, c, 0), &cache.xhat.at(b, c, 0), len);
        }
        grads.gamma[c] = static_cast<T>(sum_dy_xhat);
        grads.beta[c] = static_cast<T>(sum_dy);
        const double scale = static_cast<double>(bn.gamma[c]) * cache.inv_std[c] / count;
        for (std::size_t b = 0; b < batch; ++b) {
            const T* dy = &grad_out.at(b, c, 0);
            const T* xh = &cache.xhat.at(b, c, 0);
            T* dx = &grads.input.at(b, c, 0);
            for (std::size_t n = 0; n < len; ++n)
                dx[n] = static_cast<T>(scale * (count * dy[n] - sum_dy - xh[n] * sum_dy_xhat));
        }
    }
    return grads;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
    Tensor<T> out(input.shape());
    const T* x = input.data();
    T* y = out.data();
    for (std::size_t k = 0; k < input.size(); ++k) y[k] = x[k] > T(0) ? x[k] : T(0);
    return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& forward_input) {
    require_shape(grad_out.shape(), forward_input.shape(), "relu_backward");
    Tensor<T> out(grad_out.shape());
    const T* g = grad_out.data();
    const T* x = forward_input.data();
    T* y = out.data();
    for (std::size_t k = 0; k < out.size(); ++k) y[k] = x[k] > T(0) ? g[k] : T(0);
    return out;
}

template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    require_shape(target.shape(), pred.shape(), "mse_loss target");
    if (pred.empty()) fail(ErrorKind::Shape, "mse_loss: empty batch");
    const double n = static_cast<double>(pred.size());
    LossResult<T> r{0.0, Tensor<T>(pred.shape())};
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double d = static_cast<double>(pred[k]) - static_cast<double>(target[k]);
        r.loss += d * d;
        r.grad[k] = static_cast<T>(2.0 * d / n);
    }
    r.loss /= n;
    return r;
}

#define CFO_INSTANTIATE_LAYERS(T)                                                                           \
    template Tensor<T> conv1d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);    \
    template ConvGrads<T> conv1d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int); \
    template struct BatchNormParams<T>;                                                                    \
    template Tensor<T> batchnorm_forward(const Tensor<T>&, BatchNormParams<T>&, Mode, BatchNormCache<T>*); \
    template BatchNormGrads<T> batchnorm_backward(const Tensor<T>&, const BatchNormParams<T>&,            \
                                                  const BatchNormCache<T>&);                               \
    template Tensor<T> relu(const Tensor<T>&);                                                             \
    template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                                  \
    template LossResult<T> mse_loss(const Tensor<T>&, const Tensor<T>&);

CFO_INSTANTIATE_LAYERS(float)
CFO_INSTANTIATE_LAYERS(double)

#undef CFO_INSTANTIATE_LAYERS

}  // namespace cfo::nn
