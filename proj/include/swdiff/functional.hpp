#pragma once

#include "swdiff/mc.hpp"
#include "swdiff/model.hpp"
#include "swdiff/paths.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace swdiff {

/// One auxiliary-chain path: the Z process driven by the uniform chain chi,
/// stored on the union of the simulation grid and the exact jump times,
/// together with the Radon-Nikodym weight and (optionally) the tangent
/// process eta sharing Z's Brownian increments.
struct WeightedPath {
    std::vector<double> times;  // union grid, times[0] = 0, back() = T
    Mat states;                 // r x times.size(), the Z path
    std::vector<Mat> eta;       // tangent along Z; empty when not requested
    ChainPath chain;
    double weight = 0.0;      // exp((m0-1)T) exp(-int q) prod q, >= 0
    double q_integral = 0.0;  // trapezoid of q_chi(Z) over [0, T]

    Vec terminal_state() const { return states.col(states.cols() - 1); }
};

/// phi(x, i) and its x-gradient.
using Functional = std::function<double(const Vec&, int)>;
using FunctionalGrad = std::function<Vec(const Vec&, int)>;

/// q_i(x) = sum_{j != i} q_ij(x), the holding rate of the true chain.
double holding_rate(const Mat& Qx, int i);

/// The change-of-measure factor of a realized chain path:
/// exp((m0-1)T) exp(-int_0^T q_chi(Z) ds) prod_k q_{i_k i_{k+1}}(Z(theta_{k+1})),
/// time integral by the trapezoid rule on the union grid. Paths through a
/// forbidden transition (zero rate) get weight 0.
double path_weight(const ModelSpec& model, const std::vector<double>& times, const Mat& states,
                   const ChainPath& chain, double T);

/// Simulates the chain, the Z process and its weight; with_eta also runs
/// the tangent process (requires Jacobians).
WeightedPath simulate_weighted_path(const ModelSpec& model, const Vec& x0, int i0, double T,
                                    int n_steps, NoiseStream& stream, bool with_eta);

/// u(T,x,i) = E[phi(X,alpha)] as a weighted expectation under the
/// auxiliary chain: E[phi(Z_T, chi_T) weight].
McEstimate functional_value_cm(const ModelSpec& model, const Functional& phi, const Vec& x, int i,
                               double T, int n_steps, std::int64_t n_paths, std::uint64_t seed,
                               int threads = 1);

/// The per-path gradient term: eta(T) phi_x W + sum_j phi W_{-j} eta(theta_{j+1}) q'_{i_j i_{j+1}}
/// - phi W int_0^T eta(s) q'_chi(Z) ds, all weights carrying the exp((m0-1)T)
/// prefactor so the expectation is the x-derivative of u directly.
double zeta_hat(const ModelSpec& model, const Functional& phi, const FunctionalGrad& phi_x,
                const WeightedPath& wp, double T, const Vec& direction);

struct GradientEstimate {
    McEstimate value;          // u(T,x,i)
    McEstimate gradient;       // du/dx in the requested direction
    int n_max = 0;             // series truncation depth
    double truncated_mass = 0.0;  // fraction of paths with more than n_max jumps
};

/// Smallest n with Poisson((m0-1)T) tail mass below `tail`.
int default_series_depth(int m0, double T, double tail = 1e-6);

/// Value and gradient in one pass; paths with more than n_max jumps
/// contribute zero to the gradient sum and are counted in truncated_mass.
GradientEstimate gradient_cm(const ModelSpec& model, const Functional& phi,
                             const FunctionalGrad& phi_x, const Vec& x, int i, double T,
                             int n_steps, std::int64_t n_paths, std::uint64_t seed,
                             int threads = 1, int n_max = -1, const Vec& direction = Vec());

/// Central-difference oracle for du/dx from direct simulation under common
/// random numbers.
McEstimate fd_gradient_oracle(const ModelSpec& model, const Functional& phi, const Vec& x, int i,
                              double T, int n_steps, double h, std::int64_t n_paths,
                              std::uint64_t seed, int threads = 1, const Vec& direction = Vec());

}  // namespace swdiff
