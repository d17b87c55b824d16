#include "cfo/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cfo/error.hpp"

namespace cfo {

namespace {

constexpr double kPi = std::numbers::pi;

// Gray order 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3, first bit most significant.
double gray_pam4_level(std::uint8_t b0, std::uint8_t b1) {
    static constexpr double kLevels[4] = {-3.0, -1.0, 3.0, 1.0};  // indexed by (b0 << 1) | b1
    return kLevels[(b0 << 1) | b1];
}

// Continuous-time RRC impulse response at t (in symbol periods), unnormalized.
double rrc_value(double t, double beta) {
    if (t == 0.0) return 1.0 - beta + 4.0 * beta / kPi;
    const double x = 4.0 * beta * t;
    if (std::abs(1.0 - x * x) < 1e-10) {
        const double a = kPi / (4.0 * beta);
        return beta / std::numbers::sqrt2 *
               ((1.0 + 2.0 / kPi) * std::sin(a) + (1.0 - 2.0 / kPi) * std::cos(a));
    }
    const double num = std::sin(kPi * t * (1.0 - beta)) + x * std::cos(kPi * t * (1.0 + beta));
    return num / (kPi * t * (1.0 - x * x));
}

}  // namespace

std::string_view to_string(Modulation m) noexcept {
    switch (m) {
        case Modulation::Bpsk: return "bpsk";
        case Modulation::Fsk2: return "2fsk";
        case Modulation::Qam16: return "16qam";
        case Modulation::Pam4: return "4pam";
    }
    return "?";
}

std::string_view to_string(Channel c) noexcept {
    return c == Channel::Awgn ? "awgn" : "rayleigh";
}

Modulation parse_modulation(std::string_view name) {
    if (name == "bpsk") return Modulation::Bpsk;
    if (name == "2fsk" || name == "fsk2" || name == "fsk") return Modulation::Fsk2;
    if (name == "16qam" || name == "qam16") return Modulation::Qam16;
    if (name == "4pam" || name == "pam4") return Modulation::Pam4;
    fail(ErrorKind::Usage, "unknown modulation '" + std::string(name) + "'");
}

Channel parse_channel(std::string_view name) {
    if (name == "awgn") return Channel::Awgn;
    if (name == "rayleigh" || name == "flat-rayleigh") return Channel::FlatRayleigh;
    fail(ErrorKind::Usage, "unknown channel '" + std::string(name) + "'");
}

IQFrame IQFrame::from_complex(std::span<const Complex> samples) {
    IQFrame f(samples.size());
    for (std::size_t n = 0; n < samples.size(); ++n) f.set(n, samples[n]);
    return f;
}

std::vector<Complex> IQFrame::to_complex() const {
    std::vector<Complex> out(size());
    for (std::size_t n = 0; n < size(); ++n) out[n] = (*this)[n];
    return out;
}

double IQFrame::energy() const noexcept {
    double e = 0.0;
    for (std::size_t n = 0; n < size(); ++n) e += i[n] * i[n] + q[n] * q[n];
    return e;
}

void validate(const SynthesisParams& p) {
    std::string bad;
    if (!(p.rolloff >= 0.2 && p.rolloff <= 0.7)) bad += " rolloff";
    if (p.oversampling != 4 && p.oversampling != 8 && p.oversampling != 16) bad += " oversampling";
    if (!(std::abs(p.cfo_norm) <= 0.2)) bad += " cfo_norm";
    if (!std::isfinite(p.phase)) bad += " phase";
    if (std::isnan(p.snr_db)) bad += " snr_db";
    if (p.length < 4 || p.length % 4 != 0) bad += " length";
    if (!bad.empty()) fail(ErrorKind::Validation, "invalid synthesis parameters:" + bad);
}

int bits_per_symbol(Modulation m) {
    switch (m) {
        case Modulation::Bpsk: return 1;
        case Modulation::Fsk2: return 1;
        case Modulation::Qam16: return 4;
        case Modulation::Pam4: return 2;
    }
    return 1;
}

std::vector<Complex> map_symbols(std::span<const std::uint8_t> bits, Modulation modulation) {
    if (modulation == Modulation::Fsk2)
        fail(ErrorKind::Unsupported, "2FSK is not a linear constellation; use modulate_cpfsk");
    const auto bps = static_cast<std::size_t>(bits_per_symbol(modulation));
    if (bits.size() % bps != 0)
        fail(ErrorKind::Length, "bit count " + std::to_string(bits.size()) +
                                    " not divisible by " + std::to_string(bps));

    std::vector<Complex> out;
    out.reserve(bits.size() / bps);
    const double pam_scale = 1.0 / std::sqrt(5.0);
    const double qam_scale = 1.0 / std::sqrt(10.0);
    for (std::size_t k = 0; k < bits.size(); k += bps) {
        switch (modulation) {
            case Modulation::Bpsk:
                out.emplace_back(bits[k] ? -1.0 : 1.0, 0.0);
                break;
            case Modulation::Pam4:
                out.emplace_back(gray_pam4_level(bits[k], bits[k + 1]) * pam_scale, 0.0);
                break;
            case Modulation::Qam16:
                out.emplace_back(gray_pam4_level(bits[k], bits[k + 1]) * qam_scale,
                                 gray_pam4_level(bits[k + 2], bits[k + 3]) * qam_scale);
                break;
            case Modulation::Fsk2:
                break;
        }
    }
    return out;
}

RrcFilter design_rrc(double rolloff, int oversampling, int span_symbols) {
    if (!(rolloff > 0.0 && rolloff <= 1.0))
        fail(ErrorKind::Domain, "rolloff must lie in (0, 1], got " + std::to_string(rolloff));
    if (oversampling < 2) fail(ErrorKind::Domain, "oversampling must be >= 2");
    if (span_symbols < 1 || (span_symbols * oversampling) % 2 != 0)
        fail(ErrorKind::Domain, "span * oversampling must be a positive even number");

    const int half = span_symbols * oversampling / 2;
    RrcFilter f;
    f.rolloff = rolloff;
    f.oversampling = oversampling;
    f.taps.assign(static_cast<std::size_t>(2 * half + 1), 0.0);
    for (int k = 0; k <= half; ++k) {
        const double v = rrc_value(static_cast<double>(k) / oversampling, rolloff);
        f.taps[static_cast<std::size_t>(half + k)] = v;
        f.taps[static_cast<std::size_t>(half - k)] = v;
    }
    double energy = 0.0;
    for (double t : f.taps) energy += t * t;
    const double scale = 1.0 / std::sqrt(energy);
    for (double& t : f.taps) t *= scale;
    return f;
}

std::vector<Complex> pulse_shape(std::span<const Complex> symbols, const RrcFilter& filter) {
    if (symbols.empty()) fail(ErrorKind::Length, "pulse_shape: empty symbol sequence");
    const auto r = static_cast<std::ptrdiff_t>(filter.oversampling);
    const auto c = static_cast<std::ptrdiff_t>(filter.center());
    const auto n_out = static_cast<std::ptrdiff_t>(symbols.size()) * r;
    std::vector<Complex> out(static_cast<std::size_t>(n_out));
    for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(symbols.size()); ++m) {
        const Complex s = symbols[static_cast<std::size_t>(m)];
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(-c, -m * r);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(c, n_out - 1 - m * r);
        for (std::ptrdiff_t d = lo; d <= hi; ++d)
            out[static_cast<std::size_t>(m * r + d)] += s * filter.taps[static_cast<std::size_t>(c + d)];
    }
    return out;
}

std::vector<Complex> modulate_cpfsk(std::span<const std::uint8_t> bits, int oversampling,
                                    double mod_index) {
    if (!(mod_index > 0.0)) fail(ErrorKind::Domain, "modulation index must be positive");
    if (oversampling < 1) fail(ErrorKind::Domain, "oversampling must be >= 1");
    const double step = kPi * mod_index / oversampling;
    std::vector<Complex> out;
    out.reserve(bits.size() * static_cast<std::size_t>(oversampling));
    double phase = 0.0;
    for (auto b : bits) {
        const double inc = b ? step : -step;
        for (int k = 0; k < oversampling; ++k) {
            phase += inc;
            out.push_back(std::polar(1.0, phase));
        }
    }
    return out;
}

IQFrame apply_cfo(const IQFrame& frame, double cfo_norm, double phase) {
    IQFrame out(frame.size());
    for (std::size_t n = 0; n < frame.size(); ++n) {
        // Reduce cycles before scaling by 2*pi to keep the angle small for long frames.
        double cycles = cfo_norm * static_cast<double>(n);
        cycles -= std::round(cycles);
        const double angle = 2.0 * kPi * cycles + phase;
        out.set(n, frame[n] * Complex(std::cos(angle), std::sin(angle)));
    }
    return out;
}

IQFrame apply_awgn(const IQFrame& frame, double snr_db, Rng& rng, NoiseReference reference) {
    IQFrame out = frame;
    if (reference == NoiseReference::NormalizeFirst) {
        const double p = frame.mean_power();
        if (!(p > 0.0)) fail(ErrorKind::Degenerate, "apply_awgn: zero-power frame");
        const double scale = 1.0 / std::sqrt(p);
        for (std::size_t n = 0; n < out.size(); ++n) {
            out.i[n] *= scale;
            out.q[n] *= scale;
        }
    }
    if (snr_db == kNoiseDisabled) return out;
    const double sigma = std::sqrt(std::pow(10.0, -snr_db / 10.0) / 2.0);
    for (std::size_t n = 0; n < out.size(); ++n) {
        out.i[n] += sigma * rng.normal();
        out.q[n] += sigma * rng.normal();
    }
    return out;
}

FadedFrame apply_flat_gain(const IQFrame& frame, Complex coefficient) {
    IQFrame out(frame.size());
    for (std::size_t n = 0; n < frame.size(); ++n) out.set(n, frame[n] * coefficient);
    return {std::move(out), coefficient};
}

FadedFrame apply_flat_rayleigh(const IQFrame& frame, Rng& rng) {
    const double re = rng.normal();
    const double im = rng.normal();
    return apply_flat_gain(frame, Complex(re, im) / std::numbers::sqrt2);
}

SynthesizedFrame synthesize(const SynthesisParams& params, Rng& rng) {
    validate(params);
    const std::size_t length = params.length;
    const auto r = static_cast<std::size_t>(params.oversampling);
    const std::size_t symbols_to_fill = (length + r - 1) / r;
    constexpr int kSpan = 6;

    IQFrame frame(length);
    if (params.modulation == Modulation::Fsk2) {
        std::vector<std::uint8_t> bits(symbols_to_fill);
        for (auto& b : bits) b = static_cast<std::uint8_t>(rng.bit());
        const auto wave = modulate_cpfsk(bits, params.oversampling);
        for (std::size_t n = 0; n < length; ++n) frame.set(n, wave[n]);
    } else {
        const std::size_t n_sym = symbols_to_fill + kSpan;
        std::vector<std::uint8_t> bits(n_sym * static_cast<std::size_t>(bits_per_symbol(params.modulation)));
        for (auto& b : bits) b = static_cast<std::uint8_t>(rng.bit());
        const auto symbols = map_symbols(bits, params.modulation);
        const auto filter = design_rrc(params.rolloff, params.oversampling, kSpan);
        const auto wave = pulse_shape(symbols, filter);
        // Drop the filter transient so every kept sample sees a full span of symbols.
        const std::size_t head = filter.center();
        for (std::size_t n = 0; n < length; ++n) frame.set(n, wave[head + n]);
    }

    const double scale = 1.0 / std::sqrt(frame.mean_power());
    for (std::size_t n = 0; n < length; ++n) {
        frame.i[n] *= scale;
        frame.q[n] *= scale;
    }

    FrameLabel label{params, Complex(1.0, 0.0)};
    if (params.channel == Channel::FlatRayleigh) {
        auto faded = apply_flat_rayleigh(frame, rng);
        frame = std::move(faded.frame);
        label.fading = faded.coefficient;
    }
    frame = apply_cfo(frame, params.cfo_norm, params.phase);
    frame = apply_awgn(frame, params.snr_db, rng, NoiseReference::Nominal);
    return {std::move(frame), label};
}

IQFrame make_tone(double cfo_norm, std::size_t length, double phase) {
    IQFrame ones(length);
    std::fill(ones.i.begin(), ones.i.end(), 1.0);
    return apply_cfo(ones, cfo_norm, phase);
}

}  // namespace cfo
