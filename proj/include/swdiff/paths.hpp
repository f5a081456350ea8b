#pragma once

#include "swdiff/model.hpp"
#include "swdiff/rng.hpp"
#include "swdiff/types.hpp"

#include <optional>
#include <ostream>
#include <vector>

namespace swdiff {

struct SwitchEvent {
    double t = 0.0;
    int from = 1;
    int to = 1;
};

/// Discretized trajectory of (X(t), alpha(t)). Column k of `states` is the
/// state at grid time k.
struct PathSample {
    TimeGrid grid;
    Mat states;  // r x (n_steps + 1)
    std::vector<int> regimes;
    std::vector<SwitchEvent> switch_times;

    Vec state(int k) const { return states.col(k); }
    int regime(int k) const { return regimes[static_cast<std::size_t>(k)]; }
};

/// Pair of trajectories driven by shared Brownian noise with regimes moved
/// jointly by the basic coupling. tau_delta is the first grid time at which
/// the regimes differ, if any.
struct CoupledPathSample {
    TimeGrid grid;
    Mat states;   // first component
    Mat states2;  // second component
    std::vector<int> regimes;
    std::vector<int> regimes2;
    std::optional<double> tau_delta;

    Vec state(int k) const { return states.col(k); }
    Vec state2(int k) const { return states2.col(k); }
};

/// First-variation process along a base path; values[k] is the r x r
/// matrix xi at grid time k (1 x 1 when r = 1), values[0] = identity.
struct TangentPath {
    TimeGrid grid;
    std::vector<Mat> values;
};

/// Exact-time realization of a continuous-time chain: jump_times strictly
/// increasing, regimes[j] the regime on [jump_times[j-1], jump_times[j]).
struct ChainPath {
    double horizon = 0.0;
    std::vector<double> jump_times;
    std::vector<int> regimes;  // size jump_times.size() + 1, consecutive entries differ

    int n_jumps() const { return static_cast<int>(jump_times.size()); }
    int regime_at(double t) const;
    int final_regime() const { return regimes.back(); }
};

/// One Euler-Maruyama + Poisson-thinning step of a single path. The per-step
/// stream layout is fixed: d Gaussians, one Poisson count, then the mark
/// coordinates; at most one regime change is accepted per step.
class PathStepper {
public:
    PathStepper(const ModelSpec& model, Vec x0, int i0, const TimeGrid& grid);

    void step(NoiseStream& stream);

    const Vec& x() const { return x_; }
    int alpha() const { return alpha_; }
    int index() const { return k_; }
    double t() const { return grid_.time(k_); }
    const Vec& last_dw() const { return dw_; }
    const std::optional<SwitchEvent>& last_switch() const { return last_switch_; }

private:
    const ModelSpec* model_;
    TimeGrid grid_;
    Vec x_;
    int alpha_;
    int k_ = 0;
    Vec dw_;
    std::optional<SwitchEvent> last_switch_;
};

/// One step of the coupled pair: shared Brownian increments, joint regime
/// moves thinned against the bound 3 m0^2 M from the basic-coupling rates
/// frozen at the step-start pair of states.
class CoupledStepper {
public:
    CoupledStepper(const ModelSpec& model, Vec x0, Vec xt0, int i0, const TimeGrid& grid);

    void step(NoiseStream& stream);

    const Vec& x() const { return x_; }
    const Vec& xt() const { return xt_; }
    int alpha() const { return alpha_; }
    int alpha2() const { return alpha2_; }
    int index() const { return k_; }
    const Vec& last_dw() const { return dw_; }
    const std::optional<double>& tau_delta() const { return tau_delta_; }

private:
    const ModelSpec* model_;
    TimeGrid grid_;
    Vec x_, xt_;
    int alpha_, alpha2_;
    int k_ = 0;
    Vec dw_;
    std::optional<double> tau_delta_;
};

/// Single tangent-process Euler update sharing the base step's increments.
Mat tangent_step(const ModelSpec& model, const Vec& x, int alpha, const Mat& xi, double dt,
                 const Vec& dw);

PathSample simulate_path(const ModelSpec& model, const Vec& x0, int i0, const TimeGrid& grid,
                         NoiseStream& stream);

CoupledPathSample simulate_coupled(const ModelSpec& model, const Vec& x0, const Vec& xt0, int i0,
                                   const TimeGrid& grid, NoiseStream& stream);

/// First-variation process along `base`. `stream` must be a fresh stream
/// with the same (seed, path_index) as the one that generated `base`; the
/// Brownian increments are replayed by consuming the identical layout.
TangentPath simulate_tangent(const ModelSpec& model, const PathSample& base, NoiseStream& stream);

/// Constant-rate auxiliary chain: q_ij = 1 for i != j, holding rate m0 - 1,
/// exact jump times (no grid).
ChainPath simulate_aux_chain(const RegimeSpace& regimes, int i0, double T, NoiseStream& stream);

/// Trajectory dump, one row per grid point: t,x_1..x_r,alpha.
void write_path_csv(const PathSample& path, std::ostream& os);
/// Coupled dump adds the second component: ...,xt_1..xt_r,alpha2,decoupled.
void write_coupled_csv(const CoupledPathSample& path, std::ostream& os);

}  // namespace swdiff
