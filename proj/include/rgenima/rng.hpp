#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rgenima {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Combine a base seed with a stream index (replicate, subject, column ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Derive a per-purpose seed from a label, e.g. derive_seed(seed, "synth").
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) noexcept;

/// Seeded 64-bit generator with portable uniform/normal draws. The standard
/// library distributions are implementation-defined, so every draw used by
/// the pipeline goes through these members instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n) by rejection; n must be positive.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller (one value per call, no caching).
    double normal();

    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace rgenima
