#pragma once

#include "swdiff/lotka.hpp"
#include "swdiff/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace swdiff {

using ParamMap = std::map<std::string, double>;

/// Geometric regimes with constant rates: b(x,i) = a_i x, sigma(x,i) = s_i x.
/// Params: m0 (1 or 2), a1, a2, s1, s2, q12, q21.
ModelSpec make_markovian_linear(const ParamMap& params = {});

/// Constant rates with smooth nonlinear coefficients:
/// b = -kappa_i x + c_i sin x, sigma = s_i + u_i cos x.
/// Params: kappa1, kappa2, c1, c2, s1, s2, u1, u2, q12, q21.
ModelSpec make_markovian_smooth(const ParamMap& params = {});

/// Smooth Lipschitz state-dependent rates with full derivatives:
/// b = -x + c_i, sigma = s_i, q12 = 0.6 + 0.4 tanh x, q21 = 0.6 - 0.4 tanh x.
/// Params: c1, c2, s1, s2.
ModelSpec make_smooth_q(const ParamMap& params = {});

/// Frozen dynamics with a Holder-lambda kink in the rates:
/// b = sigma = 0, q12 = q21 = c min(|x - xstar|^lambda, 1) + eps.
/// The continuous component never moves, so the coupled pair sits exactly at
/// the kink and the decoupling probability scales as Delta^lambda (a
/// diffusing pair would smear the kink and recover exponent one).
/// Params: lambda, c, eps, xstar.
ModelSpec make_holder_rate(const ParamMap& params = {});

/// Additive noise with two-state constant switching: b = 0, sigma = 1.
/// Params: q.
ModelSpec make_brownian_switch(const ParamMap& params = {});

/// Locally (not globally) Lipschitz drift with smooth state-dependent rates:
/// b = a_i x - x^3, sigma = s, rates as in smooth-q. Params: a1, a2, s.
ModelSpec make_cubic_well(const ParamMap& params = {});

/// Rates that are piecewise linear in x_1 between table knots, clamped at
/// the ends.
struct RateTable {
    std::vector<double> knots;           // ascending abscissae
    std::vector<Mat> values;             // Q at each knot
    Mat operator()(const Vec& x) const;  // linear interpolation in x[0]
};

/// Two-species two-regime default used by the lotka subcommands.
LVSpec default_lv_spec();

/// Rate families for [lotka] config: "constant" | "logistic" | "table".
/// logistic scales a base matrix by 0.25 + 0.75 / (1 + |x|_1).
std::function<Mat(const Vec&)> make_lv_rates(const std::string& family, const Mat& base,
                                             const RateTable& table);

/// Builds a builtin by name: markovian-linear | markovian-smooth | smooth-q |
/// holder-rate | brownian | cubic-well | counterexample. Throws on unknown
/// names or unknown params.
ModelSpec make_builtin_model(const std::string& name, const ParamMap& params = {});

}  // namespace swdiff
