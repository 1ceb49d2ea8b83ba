#pragma once

#include <cstdint>
#include <random>

namespace spillway::sim {

/// Seeded random stream. Each simulation entity owns one, derived from the
/// scenario seed and a stream id, so draws do not depend on event interleaving.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Uniform double in [0, 1).
    double uniform01();

    /// Bernoulli draw with probability p.
    bool bernoulli(double p) { return p > 0.0 && uniform01() < p; }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

/// Stable 64-bit mix used to derive per-stream seeds and flow hashes.
std::uint64_t mix64(std::uint64_t x);

}  // namespace spillway::sim
