#pragma once

#include "swdiff/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace swdiff {

/// Full definition of a switching diffusion: drift b(x,i), diffusion
/// sigma(x,i), state-dependent rate matrix Q(x) with a uniform bound M on
/// the off-diagonal entries, plus optional coefficient derivatives used by
/// tangent processes and gradient estimators.
struct ModelSpec {
    int r = 1;  // state dimension
    int d = 1;  // Brownian dimension
    RegimeSpace regimes{1};

    std::function<Vec(const Vec&, int)> drift;      // b(x,i), length r
    std::function<Mat(const Vec&, int)> diffusion;  // sigma(x,i), r x d
    std::function<Mat(const Vec&)> rates;           // Q(x), m0 x m0
    double rate_bound = 1.0;                        // M with |q_ij(x)| < M, i != j

    // Optional derivatives, caller supplied; checked against finite
    // differences in tests rather than derived internally.
    std::function<Mat(const Vec&, int)> drift_jac;                   // b_x, r x r
    std::function<std::vector<Mat>(const Vec&, int)> diffusion_jac;  // d matrices r x r
    std::function<std::vector<Mat>(const Vec&)> rates_jac;           // r matrices m0 x m0

    std::optional<double> holder_exponent;  // declared lambda for exponent studies
    std::string name = "model";

    int m0() const { return regimes.m0; }
    bool has_jacobians() const { return static_cast<bool>(drift_jac) && static_cast<bool>(diffusion_jac); }
    bool has_rate_jacobian() const { return static_cast<bool>(rates_jac); }
    /// Marks in [0, m0^2 M) cover every partition interval.
    double mark_space() const { return static_cast<double>(m0()) * m0() * rate_bound; }
};

/// Result of validating a rate matrix: either ok or a list of named defects.
struct RateValidation {
    bool ok = true;
    std::vector<std::string> violations;
};

/// Half-open mark interval [lo, hi) mapping Poisson marks to a jump
/// from regime `from` to regime `to`.
struct MarkInterval {
    int from = 1;
    int to = 1;
    double lo = 0.0;
    double hi = 0.0;
};

/// The thinning partition {Delta_ij(x)} built at a fixed state x:
/// Delta_ij(x) = [((i-1) m0 + j) M, ((i-1) m0 + j) M + q_ij(x)).
struct MarkPartition {
    Vec x;
    int m0 = 1;
    double bound = 1.0;  // M
    std::vector<MarkInterval> entries;
};

/// One joint regime move of the coupled pair process.
struct CoupledMove {
    int to_first = 1;
    int to_second = 1;
    double rate = 0.0;
};

/// Row sums must vanish and off-diagonal entries must be nonnegative,
/// both up to tol.
RateValidation validate_rate_matrix(const Mat& Qx, double tol);

inline constexpr double kRateTolDefault = 1e-10;

MarkPartition build_partition(const ModelSpec& model, const Vec& x);

/// Displacement h(x,i,z): j - i when z lies in Delta_ij(x), else 0.
int eval_h(const MarkPartition& partition, int i, double z);

/// Interval-free equivalent of build_partition + eval_h: target regime for a
/// mark z given the row-i rates, or i itself when z hits no interval.
int mark_target(const Mat& Qx, int m0, double bound, int i, double z);

/// rho(x, xt, k) = sum_{j != k} |q_kj(x) - q_kj(xt)|: the total decoupling
/// rate of the basic coupling at equal regimes.
double rho(const ModelSpec& model, const Vec& x, const Vec& xt, int k);

/// The basic-coupling move list at pair state ((x,k), (xt,l)): moves (j,l)
/// at rate [q_kj(x) - q_lj(xt)]^+, (k,j) at rate [q_lj(xt) - q_kj(x)]^+,
/// and (j,j) at rate q_kj(x) ^ q_lj(xt). Zero-rate moves and the no-move
/// pair are omitted; diagonal rate entries enter as zero (no self-jump).
/// The order of the returned list is deterministic.
std::vector<CoupledMove> coupled_rates(const ModelSpec& model, const Vec& x, const Vec& xt,
                                       int k, int l);
std::vector<CoupledMove> coupled_rates(const Mat& Qx, const Mat& Qxt, int m0, int k, int l);

/// Generator application: grad f . b + 1/2 tr(hess f . sigma sigma') +
/// sum_j q_ij(x) f(x,j). Derivatives are supplied by the caller.
double apply_generator(const ModelSpec& model, const std::function<double(const Vec&, int)>& f,
                       const std::function<Vec(const Vec&, int)>& fgrad,
                       const std::function<Mat(const Vec&, int)>& fhess, const HybridState& s);

/// C2 cutoff in |x|: 1 on [0, H], 0 on [H + w, inf), quintic smoothstep
/// between.
double cutoff_psi(double s, double H, double w);
double cutoff_psi_deriv(double s, double H, double w);

/// Model with drift and diffusion multiplied by cutoff_psi(|x|); rates are
/// unchanged. Jacobians are rewritten with the product rule when present.
ModelSpec truncate_model(const ModelSpec& model, double H, double w);

}  // namespace swdiff
