#include "cfo/estimators.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "cfo/error.hpp"

namespace cfo::est {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW planning is not thread-safe; plans are cached per size behind a mutex and
// executed with the new-array interface, which is.
class FftPlans {
public:
    ~FftPlans() {
        for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan forward(int n) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        auto* buf = fftw_alloc_complex(static_cast<std::size_t>(n));
        fftw_plan plan = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buf);
        plans_.emplace(n, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<int, fftw_plan> plans_;
};

FftPlans& plans() {
    static FftPlans instance;
    return instance;
}

}  // namespace

std::vector<double> kay_weights(std::size_t n) {
    if (n < 2) fail(ErrorKind::Domain, "kay_weights: n must be >= 2");
    const double nd = static_cast<double>(n);
    const double scale = 1.5 * nd / (nd * nd - 1.0);
    const double mid = nd / 2.0 - 1.0;
    const double half = nd / 2.0;
    std::vector<double> w(n - 1);
    for (std::size_t t = 0; t + 1 < n; ++t) {
        const double u = (static_cast<double>(t) - mid) / half;
        w[t] = scale * (1.0 - u * u);
    }
    return w;
}

EstimateResult kay_estimate(const IQFrame& frame, KayWeighting weighting) {
    const std::size_t n = frame.size();
    if (n < 2) fail(ErrorKind::Length, "kay_estimate: need at least 2 samples");
    std::vector<double> w = weighting == KayWeighting::Parabolic ? kay_weights(n) : std::vector<double>(n - 1, 1.0);
    // A zero product has no phase; its weight is dropped and the rest renormalised.
    double acc = 0.0, total = 0.0, dropped = 0.0;
    for (std::size_t t = 0; t + 1 < n; ++t) {
        const Complex z = std::conj(frame[t]) * frame[t + 1];
        total += w[t];
        if (z == Complex(0.0, 0.0)) {
            dropped += w[t];
            continue;
        }
        acc += w[t] * std::arg(z);
    }
    if (dropped == total) return {0.0, Method::Kay};
    if (dropped > 0.0) acc *= total / (total - dropped);
    if (weighting == KayWeighting::Uniform) acc /= total;
    return {acc / kTwoPi, Method::Kay};
}

EstimateResult power_kay_estimate(const IQFrame& frame, int power) {
    if (power < 1) fail(ErrorKind::Domain, "power_kay_estimate: power must be >= 1");
    if (power == 1) return {kay_estimate(frame).cfo_hat, Method::KayPow};
    IQFrame raised(frame.size());
    for (std::size_t n = 0; n < frame.size(); ++n) {
        const Complex z = frame[n];
        Complex acc = z;
        for (int p = 1; p < power; ++p) acc *= z;
        raised.set(n, acc);
    }
    return {kay_estimate(raised).cfo_hat / power, Method::KayPow};
}

EstimateResult autocorr_estimate(const IQFrame& frame, int lag) {
    if (lag < 1 || static_cast<std::size_t>(lag) >= frame.size())
        fail(ErrorKind::Domain, "autocorr_estimate: lag " + std::to_string(lag) + " out of range");
    const auto d = static_cast<std::size_t>(lag);
    Complex acc(0.0, 0.0);
    for (std::size_t n = 0; n + d < frame.size(); ++n) acc += std::conj(frame[n]) * frame[n + d];
    if (acc == Complex(0.0, 0.0)) fail(ErrorKind::Degenerate, "autocorr_estimate: zero correlation");
    return {std::arg(acc) / (kTwoPi * lag), Method::Autocorr};
}

EstimateResult periodogram_ml_estimate(const IQFrame& frame, int zero_pad_factor) {
    if (zero_pad_factor < 1) fail(ErrorKind::Domain, "periodogram_ml_estimate: zero_pad_factor must be >= 1");
    if (frame.size() < 2) fail(ErrorKind::Length, "periodogram_ml_estimate: need at least 2 samples");
    const int n = static_cast<int>(frame.size()) * zero_pad_factor;
    const auto nu = static_cast<std::size_t>(n);

    std::vector<Complex> buf(nu, Complex(0.0, 0.0));
    for (std::size_t k = 0; k < frame.size(); ++k) buf[k] = frame[k];
    auto* io = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_execute_dft(plans().forward(n), io, io);

    std::vector<double> power(nu);
    std::size_t best = 0;
    for (std::size_t k = 0; k < nu; ++k) {
        power[k] = std::norm(buf[k]);
        if (power[k] > power[best]) best = k;
    }
    const double left = power[(best + nu - 1) % nu];
    const double mid = power[best];
    const double right = power[(best + 1) % nu];
    const double denom = left - 2.0 * mid + right;
    double delta = 0.0;
    if (denom < 0.0) delta = 0.5 * (left - right) / denom;

    double f = (static_cast<double>(best) + delta) / n;
    f -= std::floor(f);  // [0, 1)
    if (f > 0.5) f -= 1.0;
    return {f, Method::PeriodogramMl};
}

std::string EstimatorSpec::name() const {
    switch (method) {
        case Method::Kay: return weighting == KayWeighting::Uniform ? "kay-uniform" : "kay";
        case Method::KayPow: return "kay" + std::to_string(power);
        case Method::Autocorr: return "autocorr";
        case Method::PeriodogramMl: return "ml";
    }
    return "?";
}

EstimatorSpec parse_estimator(std::string_view name) {
    EstimatorSpec s;
    if (name == "kay") {
        s.method = Method::Kay;
    } else if (name == "kay-uniform") {
        s.method = Method::Kay;
        s.weighting = KayWeighting::Uniform;
    } else if (name == "kay2") {
        s.method = Method::KayPow;
        s.power = 2;
    } else if (name == "autocorr") {
        s.method = Method::Autocorr;
    } else if (name == "ml") {
        s.method = Method::PeriodogramMl;
    } else {
        fail(ErrorKind::Usage, "unknown estimator '" + std::string(name) + "'");
    }
    return s;
}

EstimateResult estimate(const IQFrame& frame, const EstimatorSpec& spec) {
    switch (spec.method) {
        case Method::Kay: return kay_estimate(frame, spec.weighting);
        case Method::KayPow: return power_kay_estimate(frame, spec.power);
        case Method::Autocorr: return autocorr_estimate(frame, spec.lag);
        case Method::PeriodogramMl: return periodogram_ml_estimate(frame, spec.zero_pad);
    }
    return {};
}

}  // namespace cfo::est
