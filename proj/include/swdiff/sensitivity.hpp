#pragma once

#include "swdiff/mc.hpp"
#include "swdiff/model.hpp"
#include "swdiff/paths.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace swdiff {

/// Shared parameters of the perturbation studies.
struct StudyConfig {
    double T = 1.0;
    int n_steps = 200;
    std::int64_t n_paths = 1000;
    std::vector<double> deltas;  // strictly decreasing, positive
    double p = 2.0;              // moment order
    Vec direction;               // unit perturbation direction; default e_1
    std::uint64_t seed = 1;
    int threads = 1;

    void validate(int r) const;
    Vec unit_direction(int r) const;
};

struct StudyRow {
    double delta = 0.0;
    McEstimate est;
};

struct StudyReport {
    std::string model;
    std::string study;
    StudyConfig config;  // echoed so any row is independently re-runnable
    std::vector<StudyRow> rows;
    std::optional<PowerLawFit> fit;
    std::vector<std::string> notes;
};

/// E |(X^{x+de}(T) - X^x(T))/d - xi(T) e|^p per delta, from coupled paths
/// with the tangent process run along the first marginal under the same
/// Brownian increments.
StudyReport lp_error_study(const ModelSpec& model, const Vec& x, int i, const StudyConfig& cfg);

/// Empirical P(tau^Delta <= T) per delta with binomial standard errors and
/// a log-log exponent fit. Deltas with fewer than `min_events` observed
/// decouplings are excluded from the fit (and reported).
StudyReport decoupling_probability_study(const ModelSpec& model, const Vec& x, int i,
                                         const StudyConfig& cfg, int min_events = 25);

/// E sup_k |X^{x+de}(t_k) - X^x(t_k)| per delta over the full horizon,
/// including post-decoupling segments, with a log-log fit.
StudyReport sup_distance_study(const ModelSpec& model, const Vec& x, int i, const StudyConfig& cfg);

struct DynkinRow {
    double dt = 0.0;
    double residual = 0.0;   // |E[f(X_T,a_T) - int_0^T Lf ds] - f(x,i)|
    double stderror = 0.0;   // Monte Carlo error of the combined estimator
    std::int64_t n = 0;
    std::int64_t aborted = 0;
};

/// Dynkin-formula residual, time integral by the left-point rule on the
/// grid, one row per requested dt.
std::vector<DynkinRow> dynkin_residual(const ModelSpec& model,
                                       const std::function<double(const Vec&, int)>& f,
                                       const std::function<Vec(const Vec&, int)>& fgrad,
                                       const std::function<Mat(const Vec&, int)>& fhess,
                                       const Vec& x, int i, double T,
                                       const std::vector<double>& dt_list, std::int64_t n_paths,
                                       std::uint64_t seed, int threads = 1);

struct FellerRow {
    double offset = 0.0;   // |x_n - x|
    double gap = 0.0;      // |E f(X^{x_n}, a^{x_n}) - E f(X^x, a^x)|
    double stderror = 0.0; // combined error of the two mean estimates
    std::int64_t n = 0;
    std::int64_t aborted = 0;
};

/// Gap table for a sequence x_n -> x; the gap estimate shares random numbers
/// between the two starts, while stderror combines the two runs' errors.
/// Callers should keep |f| <= 1 so gaps of different studies are comparable.
std::vector<FellerRow> feller_gap(const ModelSpec& model,
                                  const std::function<double(const Vec&, int)>& f, const Vec& x,
                                  const std::vector<Vec>& xs, int i, double t, int n_steps,
                                  std::int64_t n_paths, std::uint64_t seed, int threads = 1);

}  // namespace swdiff
