#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "cfo/waveform.hpp"
#include "support.hpp"

namespace cfo {
namespace {

using test::expect_error;
constexpr double kPi = std::numbers::pi;

// Closed-form root raised cosine, unnormalized, written independently of the library.
double rrc_reference(double t, double beta) {
    if (t == 0.0) return 1.0 - beta + 4.0 * beta / kPi;
    if (std::abs(std::abs(4.0 * beta * t) - 1.0) < 1e-12)
        return beta / std::sqrt(2.0) *
               ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * beta)) + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * beta)));
    return (std::sin(kPi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(kPi * t * (1.0 + beta))) /
           (kPi * t * (1.0 - 16.0 * beta * beta * t * t));
}

TEST(Modulation, NamesRoundTrip) {
    for (auto m : {Modulation::Bpsk, Modulation::Fsk2, Modulation::Qam16, Modulation::Pam4})
        EXPECT_EQ(parse_modulation(to_string(m)), m);
    EXPECT_EQ(parse_modulation("qam16"), Modulation::Qam16);
    EXPECT_EQ(parse_channel("rayleigh"), Channel::FlatRayleigh);
    expect_error(ErrorKind::Usage, [] { parse_modulation("8psk"); });
    expect_error(ErrorKind::Usage, [] { parse_channel("rician"); });
}

TEST(MapSymbols, BpskZeroMapsToPlusOne) {
    const std::vector<std::uint8_t> bits{0, 1, 1, 0};
    const auto s = map_symbols(bits, Modulation::Bpsk);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(s[0], Complex(1.0, 0.0));
    EXPECT_EQ(s[1], Complex(-1.0, 0.0));
    EXPECT_EQ(s[2], Complex(-1.0, 0.0));
    EXPECT_EQ(s[3], Complex(1.0, 0.0));
}

TEST(MapSymbols, Pam4GrayLevels) {
    const double a = 1.0 / std::sqrt(5.0);
    const std::vector<std::uint8_t> bits{0, 0, 0, 1, 1, 1, 1, 0};
    const auto s = map_symbols(bits, Modulation::Pam4);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_DOUBLE_EQ(s[0].real(), -3 * a);
    EXPECT_DOUBLE_EQ(s[1].real(), -1 * a);
    EXPECT_DOUBLE_EQ(s[2].real(), 1 * a);
    EXPECT_DOUBLE_EQ(s[3].real(), 3 * a);
    for (auto v : s) EXPECT_EQ(v.imag(), 0.0);
}

TEST(MapSymbols, UnitAveragePowerOverFullAlphabet) {
    for (auto m : {Modulation::Bpsk, Modulation::Pam4, Modulation::Qam16}) {
        const int k = bits_per_symbol(m);
        std::vector<std::uint8_t> bits;
        for (int word = 0; word < (1 << k); ++word)
            for (int b = k - 1; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((word >> b) & 1));
        const auto s = map_symbols(bits, m);
        ASSERT_EQ(s.size(), static_cast<std::size_t>(1 << k));
        double p = 0.0;
        for (auto v : s) p += std::norm(v);
        EXPECT_NEAR(p / static_cast<double>(s.size()), 1.0, 1e-12) << to_string(m);
    }
}

TEST(MapSymbols, Qam16AdjacentPointsDifferInOneBit) {
    std::vector<std::uint8_t> bits;
    for (int word = 0; word < 16; ++word)
        for (int b = 3; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((word >> b) & 1));
    const auto s = map_symbols(bits, Modulation::Qam16);
    const double step = 2.0 / std::sqrt(10.0);
    for (int a = 0; a < 16; ++a)
        for (int b = a + 1; b < 16; ++b)
            if (std::abs(std::abs(s[a] - s[b]) - step) < 1e-12) {
                EXPECT_EQ(std::popcount(static_cast<unsigned>(a ^ b)), 1) << a << " " << b;
            }
}

TEST(MapSymbols, Errors) {
    const std::vector<std::uint8_t> three{0, 1, 1};
    expect_error(ErrorKind::Length, [&] { map_symbols(three, Modulation::Qam16); });
    expect_error(ErrorKind::Unsupported, [&] { map_symbols(three, Modulation::Fsk2); });
}

TEST(Rrc, LengthSymmetryAndUnitEnergy) {
    for (double beta : {0.2, 0.35, 0.7})
        for (int r : {4, 8, 16}) {
            const auto f = design_rrc(beta, r);
            ASSERT_EQ(f.taps.size(), static_cast<std::size_t>(6 * r + 1));
            for (std::size_t k = 0; k < f.taps.size(); ++k) EXPECT_EQ(f.taps[k], f.taps[f.taps.size() - 1 - k]);
            double e = 0.0;
            for (double t : f.taps) e += t * t;
            EXPECT_NEAR(e, 1.0, 1e-12);
        }
}

TEST(Rrc, MatchesClosedFormIncludingSingularPoint) {
    // beta = 0.25, R = 8 puts t = 1/(4 beta) = 1 exactly on tap center + 8.
    for (double beta : {0.25, 0.35, 0.5}) {
        const int r = 8;
        const auto f = design_rrc(beta, r);
        const std::size_t c = f.center();
        const double ref0 = rrc_reference(0.0, beta);
        for (int k = 1; k <= 3 * r; ++k)
            EXPECT_NEAR(f.taps[c + k] / f.taps[c], rrc_reference(static_cast<double>(k) / r, beta) / ref0, 1e-12)
                << "beta " << beta << " k " << k;
    }
}

TEST(Rrc, SelfConvolutionIsNyquist) {
    for (double beta : {0.2, 0.35, 0.7}) {
        const int r = 8;
        const auto f = design_rrc(beta, r);
        const auto n = static_cast<int>(f.taps.size());
        auto rc = [&](int lag) {
            double s = 0.0;
            for (int j = 0; j + lag < n; ++j) s += f.taps[j] * f.taps[j + lag];
            return s;
        };
        EXPECT_NEAR(rc(0), 1.0, 1e-12);
        // Truncating to six symbols leaves a few percent of ISI at the smallest roll-off.
        const double bound = beta < 0.3 ? 6e-2 : 2e-2;
        for (int m = 1; m * r < n; ++m) EXPECT_LT(std::abs(rc(m * r)), bound) << "beta " << beta << " m " << m;
    }
}

TEST(Rrc, DomainErrors) {
    expect_error(ErrorKind::Domain, [] { design_rrc(0.0, 8); });
    expect_error(ErrorKind::Domain, [] { design_rrc(1.5, 8); });
    expect_error(ErrorKind::Domain, [] { design_rrc(0.3, 1); });
    expect_error(ErrorKind::Domain, [] { design_rrc(0.3, 3, 3); });
}

TEST(PulseShape, MatchesDirectConvolution) {
    Rng rng(3);
    std::vector<Complex> sym(20);
    for (auto& s : sym) s = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const auto f = design_rrc(0.4, 4);
    const auto out = pulse_shape(sym, f);
    ASSERT_EQ(out.size(), sym.size() * 4);

    // Zero-stuff, full linear convolution, then take the centred window.
    std::vector<Complex> up(sym.size() * 4);
    for (std::size_t m = 0; m < sym.size(); ++m) up[m * 4] = sym[m];
    std::vector<Complex> full(up.size() + f.taps.size() - 1);
    for (std::size_t a = 0; a < up.size(); ++a)
        for (std::size_t b = 0; b < f.taps.size(); ++b) full[a + b] += up[a] * f.taps[b];
    for (std::size_t n = 0; n < out.size(); ++n) {
        EXPECT_NEAR(out[n].real(), full[n + f.center()].real(), 1e-13);
        EXPECT_NEAR(out[n].imag(), full[n + f.center()].imag(), 1e-13);
    }
}

TEST(PulseShape, ImpulsePlacesPeakAtSymbolIndex) {
    std::vector<Complex> sym(10);
    sym[4] = 1.0;
    const auto f = design_rrc(0.35, 8);
    const auto out = pulse_shape(sym, f);
    std::size_t peak = 0;
    for (std::size_t n = 0; n < out.size(); ++n)
        if (std::abs(out[n]) > std::abs(out[peak])) peak = n;
    EXPECT_EQ(peak, 32u);
    EXPECT_EQ(out[32].real(), f.taps[f.center()]);
    expect_error(ErrorKind::Length, [&] { pulse_shape(std::vector<Complex>{}, f); });
}

TEST(Cpfsk, ConstantEnvelopeAndPhaseSteps) {
    const std::vector<std::uint8_t> bits{1, 0, 0, 1, 1};
    const int r = 8;
    const auto x = modulate_cpfsk(bits, r);
    ASSERT_EQ(x.size(), bits.size() * r);
    for (auto v : x) EXPECT_NEAR(std::abs(v), 1.0, 1e-14);
    for (std::size_t n = 0; n + 1 < x.size(); ++n) {
        const double step = std::arg(x[n + 1] * std::conj(x[n]));
        const double sign = bits[(n + 1) / r] ? 1.0 : -1.0;
        EXPECT_NEAR(step, sign * 0.5 * kPi / r, 1e-12) << n;
    }
    // First sample already carries one increment.
    EXPECT_NEAR(std::arg(x[0]), 0.5 * kPi / r, 1e-14);
}

TEST(ApplyCfo, MatchesPerSampleRotation) {
    Rng rng(9);
    IQFrame f(64);
    for (std::size_t n = 0; n < 64; ++n) f.set(n, Complex(rng.normal(), rng.normal()));
    const double df = 0.137, th = 0.9;
    const auto g = apply_cfo(f, df, th);
    for (std::size_t n = 0; n < 64; ++n) {
        const Complex want = f[n] * std::polar(1.0, 2.0 * kPi * df * static_cast<double>(n) + th);
        EXPECT_NEAR(g[n].real(), want.real(), 1e-11);
        EXPECT_NEAR(g[n].imag(), want.imag(), 1e-11);
    }
}

TEST(ApplyAwgn, MeasuredSnrWithinTwoTenthsDb) {
    for (double snr : {-10.0, 0.0, 10.0, 20.0}) {
        Rng rng(static_cast<std::uint64_t>(snr + 100));
        const auto clean = make_tone(0.05, 100000, 0.3);
        const auto noisy = apply_awgn(clean, snr, rng);
        double noise = 0.0;
        for (std::size_t n = 0; n < clean.size(); ++n) noise += std::norm(noisy[n] - clean[n]);
        noise /= static_cast<double>(clean.size());
        EXPECT_NEAR(10.0 * std::log10(1.0 / noise), snr, 0.2);
    }
}

TEST(ApplyAwgn, DisabledAndDegenerate) {
    Rng rng(1);
    const auto tone = make_tone(0.1, 32);
    EXPECT_EQ(apply_awgn(tone, kNoiseDisabled, rng), tone);
    expect_error(ErrorKind::Degenerate, [&] { apply_awgn(IQFrame(16), 10.0, rng); });
}

TEST(ApplyAwgn, NormalizeFirstRescalesSignal) {
    Rng rng(4);
    IQFrame f(8);
    for (std::size_t n = 0; n < 8; ++n) f.set(n, Complex(3.0, 0.0));
    const auto g = apply_awgn(f, 300.0, rng);
    EXPECT_NEAR(g.mean_power(), 1.0, 1e-12);
}

TEST(Rayleigh, UnitMeanSquareCoefficient) {
    Rng rng(77);
    const auto tone = make_tone(0.0, 4);
    double acc = 0.0;
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) acc += std::norm(apply_flat_rayleigh(tone, rng).coefficient);
    EXPECT_NEAR(acc / trials, 1.0, 0.02);
}

TEST(Rayleigh, FlatGainMultipliesEverySample) {
    const auto tone = make_tone(0.07, 16, 0.2);
    const Complex h(0.3, -0.4);
    const auto faded = apply_flat_gain(tone, h);
    EXPECT_EQ(faded.coefficient, h);
    for (std::size_t n = 0; n < 16; ++n) EXPECT_LT(std::abs(faded.frame[n] - h * tone[n]), 1e-15);
}

TEST(Synthesize, UnitPowerAndLength) {
    for (auto m : {Modulation::Bpsk, Modulation::Fsk2, Modulation::Qam16, Modulation::Pam4}) {
        Rng rng(5);
        SynthesisParams p;
        p.modulation = m;
        p.cfo_norm = 0.11;
        p.length = 1000;
        const auto s = synthesize(p, rng);
        EXPECT_EQ(s.frame.size(), 1000u);
        EXPECT_NEAR(s.frame.mean_power(), 1.0, 1e-12) << to_string(m);
    }
}

TEST(Synthesize, RayleighScalesPowerByFade) {
    Rng rng(6);
    SynthesisParams p;
    p.channel = Channel::FlatRayleigh;
    const auto s = synthesize(p, rng);
    EXPECT_NEAR(s.frame.mean_power(), std::norm(s.label.fading), 1e-12);
}

TEST(Synthesize, DeterministicPerSeed) {
    SynthesisParams p;
    p.modulation = Modulation::Qam16;
    p.snr_db = 5.0;
    p.channel = Channel::FlatRayleigh;
    Rng a(42), b(42), c(43);
    const auto x = synthesize(p, a), y = synthesize(p, b), z = synthesize(p, c);
    EXPECT_EQ(x.frame, y.frame);
    EXPECT_NE(x.frame, z.frame);
}

TEST(Synthesize, ValidationErrors) {
    auto bad = [](auto mutate) {
        SynthesisParams p;
        mutate(p);
        Rng rng(0);
        expect_error(ErrorKind::Validation, [&] { synthesize(p, rng); });
    };
    bad([](SynthesisParams& p) { p.rolloff = 0.1; });
    bad([](SynthesisParams& p) { p.rolloff = 0.8; });
    bad([](SynthesisParams& p) { p.oversampling = 6; });
    bad([](SynthesisParams& p) { p.cfo_norm = 0.25; });
    bad([](SynthesisParams& p) { p.length = 1022; });
    bad([](SynthesisParams& p) { p.length = 0; });
}

TEST(IqFrame, ComplexRoundTrip) {
    const std::vector<Complex> v{{1, 2}, {-3, 0.5}};
    const auto f = IQFrame::from_complex(v);
    EXPECT_EQ(f.to_complex(), v);
    EXPECT_DOUBLE_EQ(f.energy(), 1 + 4 + 9 + 0.25);
}

}  // namespace
}  // namespace cfo

namespace cfo {
namespace {

TEST(WaveformExamples, RrcCenterIsMaximum) {
    const auto f = design_rrc(0.35, 8);
    ASSERT_EQ(f.taps.size(), 49u);
    for (std::size_t k = 0; k < 49; ++k) {
        EXPECT_LE(f.taps[k], f.taps[24]);
        EXPECT_EQ(f.taps[k], f.taps[48 - k]);
    }
}

TEST(WaveformExamples, RrcHalfRolloffRate4IsNyquist) {
    const auto f = design_rrc(0.5, 4);
    const auto n = static_cast<int>(f.taps.size());
    std::vector<double> rc(2 * n - 1);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) rc[a + b] += f.taps[a] * f.taps[n - 1 - b];
    const int peak = n - 1;
    for (int m = 1; peak + 4 * m < 2 * n - 1; ++m) {
        EXPECT_LT(std::abs(rc[peak + 4 * m]) / rc[peak], 2e-2);
        EXPECT_LT(std::abs(rc[peak - 4 * m]) / rc[peak], 2e-2);
    }
}

TEST(WaveformExamples, ConstantSymbolsFlatAtSymbolInstants) {
    const std::vector<Complex> sym(64, Complex(1.0, 0.0));
    const auto out = pulse_shape(sym, design_rrc(0.2, 8));
    const double ref = out[32 * 8].real();
    for (std::size_t k = 6; k + 6 < 64; ++k) EXPECT_NEAR(out[k * 8].real(), ref, 1e-3) << k;
}

TEST(WaveformExamples, PulseShapeIsLinear) {
    const auto f = design_rrc(0.3, 8);
    const auto both = pulse_shape(std::vector<Complex>{1.0, -1.0}, f);
    const auto first = pulse_shape(std::vector<Complex>{1.0, 0.0}, f);
    const auto second = pulse_shape(std::vector<Complex>{0.0, -1.0}, f);
    for (std::size_t n = 0; n < both.size(); ++n) EXPECT_NEAR(std::abs(both[n] - first[n] - second[n]), 0.0, 1e-12);
}

TEST(WaveformExamples, CpfskPhaseTotals) {
    const auto zero = modulate_cpfsk(std::vector<std::uint8_t>{0}, 4);
    ASSERT_EQ(zero.size(), 4u);
    EXPECT_NEAR(std::arg(zero.back()), -kPi / 2, 1e-12);
    const auto ones = modulate_cpfsk(std::vector<std::uint8_t>{1, 1}, 8);
    EXPECT_NEAR(std::abs(std::arg(ones.back())), kPi, 1e-12);
    EXPECT_NEAR(ones.back().real(), -1.0, 1e-12);
    Rng rng(21);
    std::vector<std::uint8_t> bits(300);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.bit());
    for (auto v : modulate_cpfsk(bits, 16)) EXPECT_NEAR(std::abs(v), 1.0, 1e-12);
}

TEST(WaveformExamples, CfoIdentityQuarterCycleAndComposition) {
    Rng rng(31);
    IQFrame x(50);
    for (std::size_t n = 0; n < 50; ++n) x.set(n, Complex(rng.normal(), rng.normal()));
    const auto id = apply_cfo(x, 0.0, 0.0);
    for (std::size_t n = 0; n < 50; ++n) EXPECT_LE(std::abs(id[n] - x[n]), 1e-15);

    IQFrame ones(4);
    std::fill(ones.i.begin(), ones.i.end(), 1.0);
    const auto q = apply_cfo(ones, 0.25, 0.0);
    const Complex want[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    for (std::size_t n = 0; n < 4; ++n) EXPECT_LE(std::abs(q[n] - want[n]), 1e-15) << n;

    for (int trial = 0; trial < 20; ++trial) {
        const double f1 = rng.uniform(-0.2, 0.2), f2 = rng.uniform(-0.2, 0.2);
        const double t1 = rng.uniform(0, 6), t2 = rng.uniform(0, 6);
        const auto two = apply_cfo(apply_cfo(x, f1, t1), f2, t2);
        const auto one = apply_cfo(x, f1 + f2, t1 + t2);
        for (std::size_t n = 0; n < 50; ++n) EXPECT_LE(std::abs(two[n] - one[n]), 1e-12);
        EXPECT_NEAR(two.energy(), x.energy(), 1e-9 * x.energy());
    }
}

TEST(WaveformExamples, AwgnSameSeedSameNoise) {
    const auto tone = make_tone(0.1, 256);
    Rng a(5), b(5);
    EXPECT_EQ(apply_awgn(tone, 3.0, a), apply_awgn(tone, 3.0, b));
}

TEST(WaveformExamples, FlatGainIdentityAndQuarterTurn) {
    const auto tone = make_tone(0.04, 32, 0.1);
    EXPECT_EQ(apply_flat_gain(tone, Complex(1.0, 0.0)).frame, tone);
    const auto turned = apply_flat_gain(tone, Complex(0.0, 1.0)).frame;
    for (std::size_t n = 0; n < 32; ++n) {
        EXPECT_NEAR(std::abs(turned[n]), std::abs(tone[n]), 1e-15);
        EXPECT_NEAR(std::arg(turned[n] * std::conj(tone[n])), kPi / 2, 1e-12);
    }
}

TEST(WaveformExamples, RayleighMomentOverHundredThousandDraws) {
    Rng rng(1234);
    const auto tone = make_tone(0.0, 4);
    double acc = 0.0;
    for (int t = 0; t < 100000; ++t) acc += std::norm(apply_flat_rayleigh(tone, rng).coefficient);
    EXPECT_NEAR(acc / 100000, 1.0, 0.02);
}

}  // namespace
}  // namespace cfo
