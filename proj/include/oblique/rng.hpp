#pragma once

// Seeded random source shared by the ensembles, the optimizer and the search.
//
// The generator is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Uniform doubles take the top 53 bits of one draw; normal deviates
// use the Box-Muller transform, so no implementation-defined std::*_distribution
// is involved and a seed gives the same stream on every conforming platform.

#include <cstdint>
#include <random>

namespace oblique {

using Seed = std::uint64_t;

/// SplitMix64 finalizer.
Seed mix64(Seed x) noexcept;

/// Child seed for an independent stream (restart, sample, shard...).
Seed derive_seed(Seed parent, std::uint64_t stream) noexcept;

class Rng {
public:
    explicit Rng(Seed seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform();

    /// Standard normal.
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace oblique
