#pragma once

#include "swdiff/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace swdiff {

/// Monte Carlo mean with standard error. Diverged paths are excluded from
/// the mean and counted in `aborted`.
struct McEstimate {
    std::int64_t n = 0;  // contributing samples
    double mean = 0.0;
    double stderror = 0.0;  // sample sd / sqrt(n)
    std::int64_t aborted = 0;
};

/// Least-squares line through (log delta, log value) pairs.
struct PowerLawFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::vector<std::pair<double, double>> points;  // (log delta, log value)
};

/// Per-path estimator: a value, or nothing when the path diverged.
using PerPath = std::function<std::optional<double>(const PathContext&)>;

/// Evaluates per_path on substreams derived from (seed, index) for
/// index = 0..n-1, in parallel over `threads` workers, and reduces in
/// ascending index order. The result is a pure function of
/// (per_path, n, seed) regardless of the worker count.
McEstimate mc_estimate(const PerPath& per_path, std::int64_t n, std::uint64_t seed, int threads = 1);

/// Parallel map over path indices with deterministic output placement.
/// fn(index, out[index]) is called exactly once per index.
void parallel_for_indices(std::int64_t n, int threads,
                          const std::function<void(std::int64_t)>& fn);

/// Least squares on (log delta, log value); entries must be positive.
PowerLawFit loglog_fit(const std::vector<std::pair<double, double>>& pairs);

/// Thread count from the SWDIFF_THREADS environment variable, default 1.
int default_threads();

}  // namespace swdiff
