#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cfo/waveform.hpp"

namespace cfo::est {

enum class Method { Kay, KayPow, Autocorr, PeriodogramMl };

struct EstimateResult {
    double cfo_hat = 0.0;  // cycles per sample
    Method method = Method::Kay;
};

enum class KayWeighting {
    Parabolic,  // classical smoothed phase-difference weights
    Uniform,    // plain mean of phase increments
};

/// Parabolic smoothing weights of length n - 1; sum to one. Throws Domain if n < 2.
std::vector<double> kay_weights(std::size_t n);

/// Weighted average of adjacent phase increments arg(conj(r_t) r_{t+1}) / 2pi.
/// Zero-magnitude products carry no phase and are left out, with the remaining
/// weights rescaled to their original total. An all-zero frame gives 0.
EstimateResult kay_estimate(const IQFrame& frame, KayWeighting weighting = KayWeighting::Parabolic);

/// Raises samples to `power` (power 2 strips BPSK), runs kay_estimate, divides by power.
EstimateResult power_kay_estimate(const IQFrame& frame, int power);

/// arg(sum conj(r_n) r_{n+lag}) / (2pi lag). Aliases once lag * |cfo| exceeds 0.5.
EstimateResult autocorr_estimate(const IQFrame& frame, int lag = 1);

/// Argmax of the zero-padded periodogram on L * zero_pad_factor bins, refined by
/// three-point parabolic interpolation; wrapped to (-0.5, 0.5].
EstimateResult periodogram_ml_estimate(const IQFrame& frame, int zero_pad_factor = 8);

/// Method plus its tuning knobs, as selected on the command line.
struct EstimatorSpec {
    Method method = Method::Kay;
    int power = 2;
    int lag = 1;
    int zero_pad = 8;
    KayWeighting weighting = KayWeighting::Parabolic;

    /// Report label: "kay", "kay2" (power 2), "kay<p>", "autocorr", "ml".
    std::string name() const;
};

/// Parses "kay", "kay2", "autocorr", "ml"; throws Usage otherwise.
EstimatorSpec parse_estimator(std::string_view name);

EstimateResult estimate(const IQFrame& frame, const EstimatorSpec& spec);

}  // namespace cfo::est
