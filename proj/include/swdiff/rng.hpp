#pragma once

#include <cstdint>

namespace swdiff {

/// Counter-based random stream: the whole sequence is a pure function of
/// (seed, path_index). Distinct path indices give statistically independent
/// streams, so paths may be generated in any order on any number of workers.
///
/// All distributions consume a fixed number of raw draws per call (one
/// uniform per normal/exponential/poisson call), which keeps replayed
/// streams aligned with the original consumer.
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t path_index);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t path_index() const { return path_index_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();

    /// Uniform on [0, 1).
    double uniform01();
    /// Uniform on (0, 1), both ends excluded.
    double uniform_open();
    /// Standard normal via inverse CDF (one uniform consumed).
    double normal();
    /// Exponential with the given rate (one uniform consumed).
    double exponential(double rate);
    /// Poisson by inversion; intended for small means (one uniform consumed).
    int poisson(double mean);

private:
    std::uint64_t seed_;
    std::uint64_t path_index_;
    std::uint64_t state_;
    std::uint64_t counter_ = 0;
};

/// Inverse of the standard normal CDF (Wichura's AS241, double precision).
double normal_icdf(double p);

/// Handle with which a per-path estimator derives its own noise stream(s).
/// Two estimators given the same context see identical draws, which is what
/// makes common-random-number comparisons exact.
struct PathContext {
    std::uint64_t seed = 0;
    std::uint64_t index = 0;

    NoiseStream stream() const { return NoiseStream(seed, index); }
};

}  // namespace swdiff
