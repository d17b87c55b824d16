#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cfo {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Folds a list of integers into one seed. Order-sensitive.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept;

/// Seeded random stream. The engine is mt19937_64 (fully specified by the
/// standard); the real-valued draws are computed here rather than through
/// <random> distributions so streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; caches the second variate.
    double normal();

    int bit() { return static_cast<int>(engine_() >> 63); }

    /// Uniform integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace cfo
