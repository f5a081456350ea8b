#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace swdiff {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Set of discrete regimes {1, ..., m0}.
struct RegimeSpace {
    int m0 = 1;

    explicit RegimeSpace(int m0_) : m0(m0_) {
        if (m0 < 1) throw std::invalid_argument("RegimeSpace: m0 must be >= 1");
    }
    bool contains(int i) const { return i >= 1 && i <= m0; }
};

/// A point (x, i) of the hybrid state space R^r x {1..m0}.
struct HybridState {
    Vec x;
    int i = 1;
};

/// Uniform partition of [0, T] into n_steps steps.
struct TimeGrid {
    double T = 1.0;
    int n_steps = 1;

    TimeGrid(double T_, int n_steps_) : T(T_), n_steps(n_steps_) {
        if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: T must be positive");
        if (n_steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
    }
    double dt() const { return T / n_steps; }
    double time(int k) const { return T * static_cast<double>(k) / n_steps; }
};

/// A trajectory left the tracked region (norm above the blow-up threshold)
/// or produced a non-finite coordinate. Carries the offending step index.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int step, const std::string& what_)
        : std::runtime_error(what_ + " at step " + std::to_string(step)), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

/// Requested operation needs model data (Jacobians, rate derivatives)
/// that the model does not carry.
class CapabilityError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kBlowupNorm = 1e12;

}  // namespace swdiff
