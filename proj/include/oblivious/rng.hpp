#pragma once

#include <cstdint>
#include <random>

namespace oblivious {

/// Seeded random source. Output is bit-identical across platforms: the
/// engine is fully specified by the standard and the uniform mapping is done
/// here rather than by an implementation-defined distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// True with probability p. Always consumes exactly one variate.
    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace oblivious
