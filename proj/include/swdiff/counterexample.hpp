#pragma once

#include "swdiff/mc.hpp"
#include "swdiff/model.hpp"
#include "swdiff/rng.hpp"

#include <cstdint>
#include <utility>

namespace swdiff {

/// The three competing exponential clocks of the two-regime drift example:
/// y0 ~ Exp(1) (marks in [0,1)), y1, y2 ~ Exp(1/n) (marks in the two
/// adjacent strips of width 1/n).
struct CxDraw {
    double y0 = 0.0;
    double y1 = 0.0;
    double y2 = 0.0;

    double tau_1() const { return y0; }
    double tau_1_1n() const { return std::min(y0, y1); }
    double tau_1_2n() const { return std::min(std::min(y0, y1), y2); }
};

CxDraw cx_sample(int n, NoiseStream& stream);

/// Difference quotients Z^{1+1/n} and Z^{1+2/n} at horizon T:
/// Z^{1+x} = 1 + (T ^ tau^1 - T ^ tau^{1+x}) / x.
std::pair<double, double> cx_quotients(const CxDraw& draw, int n, double T);

/// Monte Carlo estimate of E|Z^{1+2/n} - Z^{1+1/n}| from the exact sampler.
McEstimate cx_gap_estimate(int n, double T, std::int64_t n_paths, std::uint64_t seed,
                           int threads = 1);

/// Closed-form lower bound (T/6)(1 - e^{-(1+2/n)T/3})(e^{-2T/3} - e^{-T}).
double cx_lower_bound(int n, double T);

/// Deterministic tensor-product quadrature value of E|Z^{1+2/n} - Z^{1+1/n}|
/// over the joint exponential law of (y0, y1, y2); node counts are doubled
/// until successive values agree to 1e-4 relative. Throws on
/// non-convergence.
double cx_gap_oracle(int n, double T);

/// Smooth positive extension of f(x) = x beyond [1, 2], compactly supported
/// on [0.5, 2.5] (C2 quintic blends). All of the section's quantities only
/// see f on [1, 2], so the extension shape is immaterial.
double cx_rate_fn(double x);

/// The example as a generic ModelSpec: m0 = 2, b(.,1) = 0, b(.,2) = 1,
/// sigma = 0, q_12(x) = cx_rate_fn(x), q_21 = 0. Lets the grid-based
/// engine be cross-validated against the exact sampler.
ModelSpec cx_model();

}  // namespace swdiff
