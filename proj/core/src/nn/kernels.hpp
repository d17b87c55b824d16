#pragma once

// Inner loops shared by the layer implementations. Reductions use eight
// fixed partial sums so they vectorize without reassociation and stay
// bit-reproducible.

#include <cstddef>

namespace cfo::nn {

template <typename T>
inline void axpy_strided(T a, const T* x, std::size_t stride, T* y, std::size_t n) {
    if (stride == 1) {
        for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
    } else {
        for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i * stride];
    }
}

template <typename T>
inline void scatter_strided(T a, const T* src, T* dst, std::size_t stride, std::size_t n) {
    if (stride == 1) {
        for (std::size_t i = 0; i < n; ++i) dst[i] += a * src[i];
    } else {
        for (std::size_t i = 0; i < n; ++i) dst[i * stride] += a * src[i];
    }
}

template <typename T>
inline double dot_strided(const T* a, const T* b, std::size_t stride, std::size_t n) {
    T lane[8] = {};
    std::size_t i = 0;
    if (stride == 1) {
        for (; i + 8 <= n; i += 8)
            for (std::size_t j = 0; j < 8; ++j) lane[j] += a[i + j] * b[i + j];
    } else {
        for (; i + 8 <= n; i += 8)
            for (std::size_t j = 0; j < 8; ++j) lane[j] += a[i + j] * b[(i + j) * stride];
    }
    double acc = ((double(lane[0]) + lane[1]) + (double(lane[2]) + lane[3])) +
                 ((double(lane[4]) + lane[5]) + (double(lane[6]) + lane[7]));
    for (; i < n; ++i) acc += double(a[i]) * double(b[i * stride]);
    return acc;
}

template <typename T>
inline double dot(const T* a, const T* b, std::size_t n) {
    return dot_strided(a, b, 1, n);
}

template <typename T>
inline double sum(const T* a, std::size_t n) {
    T lane[8] = {};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (std::size_t j = 0; j < 8; ++j) lane[j] += a[i + j];
    double acc = ((double(lane[0]) + lane[1]) + (double(lane[2]) + lane[3])) +
                 ((double(lane[4]) + lane[5]) + (double(lane[6]) + lane[7]));
    for (; i < n; ++i) acc += a[i];
    return acc;
}

}  // namespace cfo::nn
