#include "swdiff/paths.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace swdiff {
namespace {

void check_state(const Vec& x, int step) {
    if (!x.allFinite() || x.norm() > kBlowupNorm) throw DivergenceError(step, "state diverged");
}

void check_rate_bound(const Mat& Qx, int m0, double M, int step) {
    for (int i = 0; i < m0; ++i) {
        for (int j = 0; j < m0; ++j) {
            if (i != j && Qx(i, j) >= M) {
                std::ostringstream os;
                os << "rate bound violated at step " << step << ": q(" << i + 1 << "," << j + 1
                   << ") = " << Qx(i, j) << " >= M = " << M;
                throw std::runtime_error(os.str());
            }
        }
    }
}

void format_double(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

int ChainPath::regime_at(double t) const {
    // index of the first jump strictly after t
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    return regimes[static_cast<std::size_t>(it - jump_times.begin())];
}

PathStepper::PathStepper(const ModelSpec& model, Vec x0, int i0, const TimeGrid& grid)
    : model_(&model), grid_(grid), x_(std::move(x0)), alpha_(i0), dw_(Vec::Zero(model.d)) {
    if (!model.regimes.contains(i0)) throw std::invalid_argument("PathStepper: invalid initial regime");
    check_state(x_, 0);
}

void PathStepper::step(NoiseStream& stream) {
    const double dt = grid_.dt();
    const double sqdt = std::sqrt(dt);
    for (int c = 0; c < model_->d; ++c) dw_[c] = stream.normal() * sqdt;

    const Vec b = model_->drift(x_, alpha_);
    const Mat sigma = model_->diffusion(x_, alpha_);
    const Mat Qx = model_->rates(x_);
    check_rate_bound(Qx, model_->m0(), model_->rate_bound, k_);

    // thinning: marks over [0, m0^2 M); first hit wins, rest discarded
    const double space = model_->mark_space();
    const int count = stream.poisson(dt * space);
    int next_alpha = alpha_;
    for (int c = 0; c < count; ++c) {
        const double z = stream.uniform01() * space;
        if (next_alpha == alpha_) {
            const int j = mark_target(Qx, model_->m0(), model_->rate_bound, alpha_, z);
            if (j != alpha_) next_alpha = j;
        }
    }

    x_ += b * dt + sigma * dw_;
    ++k_;
    check_state(x_, k_);
    if (next_alpha != alpha_) {
        last_switch_ = SwitchEvent{grid_.time(k_), alpha_, next_alpha};
        alpha_ = next_alpha;
    } else {
        last_switch_.reset();
    }
}

CoupledStepper::CoupledStepper(const ModelSpec& model, Vec x0, Vec xt0, int i0, const TimeGrid& grid)
    : model_(&model),
      grid_(grid),
      x_(std::move(x0)),
      xt_(std::move(xt0)),
      alpha_(i0),
      alpha2_(i0),
      dw_(Vec::Zero(model.d)) {
    if (!model.regimes.contains(i0)) throw std::invalid_argument("CoupledStepper: invalid initial regime");
    check_state(x_, 0);
    check_state(xt_, 0);
}

void CoupledStepper::step(NoiseStream& stream) {
    const double dt = grid_.dt();
    const double sqdt = std::sqrt(dt);
    for (int c = 0; c < model_->d; ++c) dw_[c] = stream.normal() * sqdt;

    const Vec b1 = model_->drift(x_, alpha_);
    const Mat s1 = model_->diffusion(x_, alpha_);
    const Vec b2 = model_->drift(xt_, alpha2_);
    const Mat s2 = model_->diffusion(xt_, alpha2_);

    const int m0 = model_->m0();
    const Mat Qx = model_->rates(x_);
    const Mat Qxt = model_->rates(xt_);
    check_rate_bound(Qx, m0, model_->rate_bound, k_);
    check_rate_bound(Qxt, m0, model_->rate_bound, k_);
    const auto moves = coupled_rates(Qx, Qxt, m0, alpha_, alpha2_);
    double total = 0.0;
    for (const auto& mv : moves) total += mv.rate;

    const double space = 3.0 * m0 * m0 * model_->rate_bound;
    const int count = stream.poisson(dt * space);
    int next1 = alpha_, next2 = alpha2_;
    bool moved = false;
    for (int c = 0; c < count; ++c) {
        const double z = stream.uniform01() * space;
        if (!moved && z < total) {
            double acc = 0.0;
            for (const auto& mv : moves) {
                acc += mv.rate;
                if (z < acc) {
                    next1 = mv.to_first;
                    next2 = mv.to_second;
                    break;
                }
            }
            moved = true;
        }
    }

    x_ += b1 * dt + s1 * dw_;
    xt_ += b2 * dt + s2 * dw_;
    ++k_;
    check_state(x_, k_);
    check_state(xt_, k_);
    alpha_ = next1;
    alpha2_ = next2;
    if (!tau_delta_ && alpha_ != alpha2_) tau_delta_ = grid_.time(k_);
}

Mat tangent_step(const ModelSpec& model, const Vec& x, int alpha, const Mat& xi, double dt,
                 const Vec& dw) {
    Mat out = xi + model.drift_jac(x, alpha) * xi * dt;
    const std::vector<Mat> sj = model.diffusion_jac(x, alpha);
    for (int c = 0; c < model.d; ++c) out += sj[static_cast<std::size_t>(c)] * xi * dw[c];
    return out;
}

PathSample simulate_path(const ModelSpec& model, const Vec& x0, int i0, const TimeGrid& grid,
                         NoiseStream& stream) {
    PathSample out{grid, Mat(model.r, grid.n_steps + 1), {}, {}};
    out.regimes.reserve(static_cast<std::size_t>(grid.n_steps) + 1);
    PathStepper st(model, x0, i0, grid);
    out.states.col(0) = st.x();
    out.regimes.push_back(st.alpha());
    for (int k = 0; k < grid.n_steps; ++k) {
        st.step(stream);
        out.states.col(k + 1) = st.x();
        out.regimes.push_back(st.alpha());
        if (st.last_switch()) out.switch_times.push_back(*st.last_switch());
    }
    return out;
}

CoupledPathSample simulate_coupled(const ModelSpec& model, const Vec& x0, const Vec& xt0, int i0,
                                   const TimeGrid& grid, NoiseStream& stream) {
    CoupledPathSample out{grid, Mat(model.r, grid.n_steps + 1), Mat(model.r, grid.n_steps + 1),
                          {},   {},
                          {}};
    out.regimes.reserve(static_cast<std::size_t>(grid.n_steps) + 1);
    out.regimes2.reserve(static_cast<std::size_t>(grid.n_steps) + 1);
    CoupledStepper st(model, x0, xt0, i0, grid);
    out.states.col(0) = st.x();
    out.states2.col(0) = st.xt();
    out.regimes.push_back(st.alpha());
    out.regimes2.push_back(st.alpha2());
    for (int k = 0; k < grid.n_steps; ++k) {
        st.step(stream);
        out.states.col(k + 1) = st.x();
        out.states2.col(k + 1) = st.xt();
        out.regimes.push_back(st.alpha());
        out.regimes2.push_back(st.alpha2());
    }
    out.tau_delta = st.tau_delta();
    return out;
}

TangentPath simulate_tangent(const ModelSpec& model, const PathSample& base, NoiseStream& stream) {
    if (!model.has_jacobians())
        throw CapabilityError("simulate_tangent: model lacks drift/diffusion Jacobians");
    const TimeGrid& grid = base.grid;
    const double dt = grid.dt();
    const double sqdt = std::sqrt(dt);
    TangentPath out{grid, {}};
    out.values.reserve(static_cast<std::size_t>(grid.n_steps) + 1);
    Mat xi = Mat::Identity(model.r, model.r);
    out.values.push_back(xi);
    Vec dw(model.d);
    const double space = model.mark_space();
    for (int k = 0; k < grid.n_steps; ++k) {
        // replay the base path's layout: d Gaussians, count, mark coords
        for (int c = 0; c < model.d; ++c) dw[c] = stream.normal() * sqdt;
        const int count = stream.poisson(dt * space);
        for (int c = 0; c < count; ++c) stream.uniform01();
        xi = tangent_step(model, base.state(k), base.regime(k), xi, dt, dw);
        if (!xi.allFinite()) throw DivergenceError(k + 1, "tangent diverged");
        out.values.push_back(xi);
    }
    return out;
}

ChainPath simulate_aux_chain(const RegimeSpace& regimes, int i0, double T, NoiseStream& stream) {
    if (!regimes.contains(i0)) throw std::invalid_argument("simulate_aux_chain: invalid initial regime");
    ChainPath chain{T, {}, {i0}};
    const int m0 = regimes.m0;
    if (m0 == 1) return chain;
    const double rate = static_cast<double>(m0 - 1);
    double t = 0.0;
    int current = i0;
    for (;;) {
        t += stream.exponential(rate);
        if (t > T) break;
        // uniform over the other m0 - 1 regimes
        int pick = static_cast<int>(stream.uniform01() * (m0 - 1));
        if (pick >= m0 - 1) pick = m0 - 2;
        const int target = (pick + 1 <= current - 1) ? pick + 1 : pick + 2;
        chain.jump_times.push_back(t);
        chain.regimes.push_back(target);
        current = target;
    }
    return chain;
}

void write_path_csv(const PathSample& path, std::ostream& os) {
    const int r = static_cast<int>(path.states.rows());
    os << "t";
    for (int c = 1; c <= r; ++c) os << ",x_" << c;
    os << ",alpha\n";
    for (int k = 0; k <= path.grid.n_steps; ++k) {
        format_double(os, path.grid.time(k));
        for (int c = 0; c < r; ++c) {
            os << ',';
            format_double(os, path.states(c, k));
        }
        os << ',' << path.regime(k) << '\n';
    }
}

void write_coupled_csv(const CoupledPathSample& path, std::ostream& os) {
    const int r = static_cast<int>(path.states.rows());
    os << "t";
    for (int c = 1; c <= r; ++c) os << ",x_" << c;
    os << ",alpha";
    for (int c = 1; c <= r; ++c) os << ",xt_" << c;
    os << ",alpha2,decoupled\n";
    for (int k = 0; k <= path.grid.n_steps; ++k) {
        const double t = path.grid.time(k);
        format_double(os, t);
        for (int c = 0; c < r; ++c) {
            os << ',';
            format_double(os, path.states(c, k));
        }
        os << ',' << path.regimes[static_cast<std::size_t>(k)];
        for (int c = 0; c < r; ++c) {
            os << ',';
            format_double(os, path.states2(c, k));
        }
        const bool dec = path.tau_delta && t >= *path.tau_delta;
        os << ',' << path.regimes2[static_cast<std::size_t>(k)] << ',' << (dec ? 1 : 0) << '\n';
    }
}

}  // namespace swdiff
