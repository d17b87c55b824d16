#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "cfo/rng.hpp"

namespace cfo {

using Complex = std::complex<double>;

enum class Modulation : std::uint8_t { Bpsk = 0, Fsk2 = 1, Qam16 = 2, Pam4 = 3 };
enum class Channel : std::uint8_t { Awgn = 0, FlatRayleigh = 1 };

std::string_view to_string(Modulation m) noexcept;
std::string_view to_string(Channel c) noexcept;
/// Accepts the CLI spellings ("bpsk", "2fsk"/"fsk2", "16qam"/"qam16", "4pam"/"pam4").
Modulation parse_modulation(std::string_view name);
Channel parse_channel(std::string_view name);

/// Complex baseband burst stored as parallel in-phase and quadrature sequences.
struct IQFrame {
    std::vector<double> i;
    std::vector<double> q;

    IQFrame() = default;
    explicit IQFrame(std::size_t n) : i(n, 0.0), q(n, 0.0) {}

    static IQFrame from_complex(std::span<const Complex> samples);
    std::vector<Complex> to_complex() const;

    std::size_t size() const noexcept { return i.size(); }
    Complex operator[](std::size_t n) const { return {i[n], q[n]}; }
    void set(std::size_t n, Complex v) {
        i[n] = v.real();
        q[n] = v.imag();
    }

    /// Sum of i^2 + q^2.
    double energy() const noexcept;
    double mean_power() const noexcept { return size() ? energy() / static_cast<double>(size()) : 0.0; }

    friend bool operator==(const IQFrame&, const IQFrame&) = default;
};

inline constexpr double kNoiseDisabled = std::numeric_limits<double>::infinity();

struct SynthesisParams {
    Modulation modulation = Modulation::Bpsk;
    double rolloff = 0.35;
    int oversampling = 8;
    double cfo_norm = 0.0;  // cycles per output sample
    double phase = 0.0;     // radians
    double snr_db = kNoiseDisabled;
    Channel channel = Channel::Awgn;
    std::size_t length = 1024;
};

/// Ground truth of a synthesized frame: the parameters used plus the drawn
/// fading coefficient ((1,0) on AWGN).
struct FrameLabel {
    SynthesisParams params;
    Complex fading{1.0, 0.0};
};

/// Throws Validation if any field violates its range.
void validate(const SynthesisParams& params);

int bits_per_symbol(Modulation m);

struct RrcFilter {
    std::vector<double> taps;  // length span * oversampling + 1
    double rolloff = 0.0;
    int oversampling = 0;

    std::size_t center() const noexcept { return taps.size() / 2; }
};

/// Unit-average-power constellation mapping (BPSK 0 -> +1; Gray PAM4 and QAM16).
std::vector<Complex> map_symbols(std::span<const std::uint8_t> bits, Modulation modulation);

/// Root raised-cosine taps truncated to `span_symbols` symbols, unit energy.
RrcFilter design_rrc(double rolloff, int oversampling, int span_symbols = 6);

/// Zero-stuffs by R and filters with "same" alignment: symbol m lands on index m*R
/// and the output holds exactly R * symbols.size() samples.
std::vector<Complex> pulse_shape(std::span<const Complex> symbols, const RrcFilter& filter);

/// Continuous-phase binary FSK. Each bit contributes R phase increments of
/// +-pi*h/R (bit 1 -> +, bit 0 -> -); sample n carries the phase accumulated
/// through increment n inclusive.
std::vector<Complex> modulate_cpfsk(std::span<const std::uint8_t> bits, int oversampling,
                                    double mod_index = 0.5);

/// Multiplies sample n by exp(j(2*pi*cfo_norm*n + phase)).
IQFrame apply_cfo(const IQFrame& frame, double cfo_norm, double phase);

enum class NoiseReference {
    /// Scale the frame to unit mean power, then add noise of variance 10^(-snr/10).
    NormalizeFirst,
    /// Frame is already at nominal unit power (e.g. after fading); no rescale.
    Nominal,
};

/// Adds circular complex Gaussian noise. `snr_db == kNoiseDisabled` adds nothing.
IQFrame apply_awgn(const IQFrame& frame, double snr_db, Rng& rng,
                   NoiseReference reference = NoiseReference::NormalizeFirst);

struct FadedFrame {
    IQFrame frame;
    Complex coefficient;
};

/// One unit-variance circular complex Gaussian coefficient for the whole burst.
FadedFrame apply_flat_rayleigh(const IQFrame& frame, Rng& rng);
/// Test hook: applies a caller-chosen flat coefficient.
FadedFrame apply_flat_gain(const IQFrame& frame, Complex coefficient);

struct SynthesizedFrame {
    IQFrame frame;
    FrameLabel label;
};

/// Full received-signal pipeline: symbols/shaping (or CPFSK) -> unit power ->
/// channel -> CFO and phase rotation -> AWGN at nominal unit signal power.
SynthesizedFrame synthesize(const SynthesisParams& params, Rng& rng);

/// Noiseless unit tone exp(j*2*pi*f*n); handy for estimator and plumbing tests.
IQFrame make_tone(double cfo_norm, std::size_t length, double phase = 0.0);

}  // namespace cfo
