#include "swdiff/functional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace swdiff {
namespace {

void check_state(const Vec& x, int step) {
    if (!x.allFinite() || x.norm() > kBlowupNorm) throw DivergenceError(step, "state diverged");
}

std::vector<double> union_times(const TimeGrid& grid, const ChainPath& chain) {
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(grid.n_steps) + chain.jump_times.size() + 1);
    std::size_t j = 0;
    for (int k = 0; k <= grid.n_steps; ++k) {
        const double t = grid.time(k);
        while (j < chain.jump_times.size() && chain.jump_times[j] < t) {
            if (chain.jump_times[j] > times.back()) times.push_back(chain.jump_times[j]);
            ++j;
        }
        times.push_back(t);
    }
    return times;
}

// index of t in times (exact jump times are nodes by construction)
std::size_t node_index(const std::vector<double>& times, double t) {
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end() || *it != t) throw std::logic_error("node_index: time is not a grid node");
    return static_cast<std::size_t>(it - times.begin());
}

Vec resolve_direction(const Vec& direction, int r) {
    if (direction.size() == 0) {
        Vec e = Vec::Zero(r);
        e[0] = 1.0;
        return e;
    }
    if (direction.size() != r) throw std::invalid_argument("direction has wrong dimension");
    return direction;
}

struct GradReduce {
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<unsigned char> truncated;
    std::vector<unsigned char> ok;
};

McEstimate reduce(const std::vector<double>& values, const std::vector<unsigned char>& ok) {
    McEstimate est;
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (ok[i]) {
            sum += values[i];
            ++est.n;
        } else {
            ++est.aborted;
        }
    }
    if (est.n == 0) throw std::runtime_error("all paths aborted");
    est.mean = sum / static_cast<double>(est.n);
    double ss = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (ok[i]) ss += (values[i] - est.mean) * (values[i] - est.mean);
    }
    if (est.n > 1)
        est.stderror =
            std::sqrt(ss / static_cast<double>(est.n - 1) / static_cast<double>(est.n));
    return est;
}

}  // namespace

double holding_rate(const Mat& Qx, int i) {
    double q = 0.0;
    for (int j = 0; j < Qx.cols(); ++j) {
        if (j != i - 1) q += Qx(i - 1, j);
    }
    return q;
}

namespace {

struct WeightParts {
    double integral = 0.0;  // trapezoid of q_chi(Z) on the union grid
    double product = 1.0;   // prod_k q_{i_k i_{k+1}}(Z(theta_{k+1}))
};

WeightParts weight_parts(const ModelSpec& model, const std::vector<double>& times,
                         const Mat& states, const ChainPath& chain) {
    WeightParts parts;
    // the regime on [a, b) is chain.regime_at(a)
    for (std::size_t k = 1; k < times.size(); ++k) {
        const int regime = chain.regime_at(times[k - 1]);
        const double qa = holding_rate(model.rates(states.col(static_cast<int>(k) - 1)), regime);
        const double qb = holding_rate(model.rates(states.col(static_cast<int>(k))), regime);
        parts.integral += 0.5 * (qa + qb) * (times[k] - times[k - 1]);
    }
    for (int j = 0; j < chain.n_jumps(); ++j) {
        const std::size_t node = node_index(times, chain.jump_times[static_cast<std::size_t>(j)]);
        const Mat Q = model.rates(states.col(static_cast<int>(node)));
        parts.product *= Q(chain.regimes[static_cast<std::size_t>(j)] - 1,
                           chain.regimes[static_cast<std::size_t>(j) + 1] - 1);
    }
    return parts;
}

}  // namespace

double path_weight(const ModelSpec& model, const std::vector<double>& times, const Mat& states,
                   const ChainPath& chain, double T) {
    const WeightParts parts = weight_parts(model, times, states, chain);
    return std::exp(static_cast<double>(model.m0() - 1) * T - parts.integral) * parts.product;
}

WeightedPath simulate_weighted_path(const ModelSpec& model, const Vec& x0, int i0, double T,
                                    int n_steps, NoiseStream& stream, bool with_eta) {
    if (with_eta && !model.has_jacobians())
        throw CapabilityError("simulate_weighted_path: eta requires Jacobians");
    WeightedPath wp;
    wp.chain = simulate_aux_chain(model.regimes, i0, T, stream);
    const TimeGrid grid(T, n_steps);
    wp.times = union_times(grid, wp.chain);
    const std::size_t nodes = wp.times.size();
    wp.states = Mat(model.r, static_cast<int>(nodes));
    wp.states.col(0) = x0;
    if (with_eta) {
        wp.eta.reserve(nodes);
        wp.eta.push_back(Mat::Identity(model.r, model.r));
    }
    Vec x = x0;
    Mat eta = Mat::Identity(model.r, model.r);
    Vec dw(model.d);
    for (std::size_t k = 1; k < nodes; ++k) {
        const double dt = wp.times[k] - wp.times[k - 1];
        const int regime = wp.chain.regime_at(wp.times[k - 1]);
        const double sqdt = std::sqrt(dt);
        for (int c = 0; c < model.d; ++c) dw[c] = stream.normal() * sqdt;
        const Vec b = model.drift(x, regime);
        const Mat sigma = model.diffusion(x, regime);
        if (with_eta) eta = tangent_step(model, x, regime, eta, dt, dw);
        x += b * dt + sigma * dw;
        check_state(x, static_cast<int>(k));
        wp.states.col(static_cast<int>(k)) = x;
        if (with_eta) wp.eta.push_back(eta);
    }
    const WeightParts parts = weight_parts(model, wp.times, wp.states, wp.chain);
    wp.q_integral = parts.integral;
    wp.weight = std::exp(static_cast<double>(model.m0() - 1) * T - parts.integral) * parts.product;
    return wp;
}

McEstimate functional_value_cm(const ModelSpec& model, const Functional& phi, const Vec& x, int i,
                               double T, int n_steps, std::int64_t n_paths, std::uint64_t seed,
                               int threads) {
    return mc_estimate(
        [&](const PathContext& ctx) -> std::optional<double> {
            NoiseStream stream = ctx.stream();
            try {
                const WeightedPath wp =
                    simulate_weighted_path(model, x, i, T, n_steps, stream, false);
                return phi(wp.terminal_state(), wp.chain.final_regime()) * wp.weight;
            } catch (const DivergenceError&) {
                return std::nullopt;
            }
        },
        n_paths, seed, threads);
}

double zeta_hat(const ModelSpec& model, const Functional& phi, const FunctionalGrad& phi_x,
                const WeightedPath& wp, double T, const Vec& direction) {
    if (!model.has_rate_jacobian())
        throw CapabilityError("zeta_hat: model lacks rate derivatives");
    if (wp.eta.empty()) throw CapabilityError("zeta_hat: weighted path lacks eta");
    const Vec e = resolve_direction(direction, model.r);
    const int n = wp.chain.n_jumps();
    const Vec zT = wp.terminal_state();
    const int in = wp.chain.final_regime();
    const Vec eta_T_e = wp.eta.back() * e;

    const double w_full = wp.weight;
    double out = phi_x(zT, in).dot(eta_T_e) * w_full;

    if (n > 0) {
        // exp factor and per-jump transition rates, for the W_{-j} products
        const double exp_factor =
            std::exp(static_cast<double>(model.m0() - 1) * T - wp.q_integral);
        std::vector<double> trans(static_cast<std::size_t>(n));
        std::vector<std::size_t> jump_nodes(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            const std::size_t node = node_index(wp.times, wp.chain.jump_times[static_cast<std::size_t>(j)]);
            jump_nodes[static_cast<std::size_t>(j)] = node;
            const Mat Q = model.rates(wp.states.col(static_cast<int>(node)));
            trans[static_cast<std::size_t>(j)] =
                Q(wp.chain.regimes[static_cast<std::size_t>(j)] - 1,
                  wp.chain.regimes[static_cast<std::size_t>(j) + 1] - 1);
        }
        const double phi_T = phi(zT, in);
        for (int j = 0; j < n; ++j) {
            double w_minus_j = exp_factor;
            for (int k = 0; k < n; ++k) {
                if (k != j) w_minus_j *= trans[static_cast<std::size_t>(k)];
            }
            const std::size_t node = jump_nodes[static_cast<std::size_t>(j)];
            const std::vector<Mat> qjac = model.rates_jac(wp.states.col(static_cast<int>(node)));
            const Vec eta_e = wp.eta[node] * e;
            double dq = 0.0;
            for (int c = 0; c < model.r; ++c)
                dq += qjac[static_cast<std::size_t>(c)](
                          wp.chain.regimes[static_cast<std::size_t>(j)] - 1,
                          wp.chain.regimes[static_cast<std::size_t>(j) + 1] - 1) *
                      eta_e[c];
            out += phi_T * w_minus_j * dq;
        }
    }

    // - phi W int_0^T eta(s) . grad q_chi(Z_s) ds, trapezoid on the union grid
    {
        const double phi_T = phi(zT, in);
        auto integrand = [&](std::size_t node, int regime) {
            const std::vector<Mat> qjac = model.rates_jac(wp.states.col(static_cast<int>(node)));
            const Vec eta_e = wp.eta[node] * e;
            double v = 0.0;
            for (int c = 0; c < model.r; ++c) {
                double dq_holding = 0.0;
                for (int j = 1; j <= model.m0(); ++j) {
                    if (j != regime) dq_holding += qjac[static_cast<std::size_t>(c)](regime - 1, j - 1);
                }
                v += dq_holding * eta_e[c];
            }
            return v;
        };
        double integral = 0.0;
        for (std::size_t k = 1; k < wp.times.size(); ++k) {
            const int regime = wp.chain.regime_at(wp.times[k - 1]);
            integral += 0.5 * (integrand(k - 1, regime) + integrand(k, regime)) *
                        (wp.times[k] - wp.times[k - 1]);
        }
        out -= phi_T * w_full * integral;
    }
    return out;
}

int default_series_depth(int m0, double T, double tail) {
    const double lam = static_cast<double>(m0 - 1) * T;
    if (lam == 0.0) return 0;
    double p = std::exp(-lam);
    double cum = p;
    int n = 0;
    while (1.0 - cum >= tail && n < 10000) {
        ++n;
        p *= lam / n;
        cum += p;
    }
    return n;
}

GradientEstimate gradient_cm(const ModelSpec& model, const Functional& phi,
                             const FunctionalGrad& phi_x, const Vec& x, int i, double T,
                             int n_steps, std::int64_t n_paths, std::uint64_t seed, int threads,
                             int n_max, const Vec& direction) {
    if (!model.has_jacobians() || !model.has_rate_jacobian())
        throw CapabilityError("gradient_cm: model lacks coefficient or rate derivatives");
    const Vec e = resolve_direction(direction, model.r);
    GradientEstimate out;
    out.n_max = (n_max >= 0) ? n_max : default_series_depth(model.m0(), T);

    GradReduce red;
    red.value.resize(static_cast<std::size_t>(n_paths));
    red.grad.resize(static_cast<std::size_t>(n_paths));
    red.truncated.assign(static_cast<std::size_t>(n_paths), 0);
    red.ok.assign(static_cast<std::size_t>(n_paths), 0);
    parallel_for_indices(n_paths, threads, [&](std::int64_t idx) {
        const std::size_t u = static_cast<std::size_t>(idx);
        NoiseStream stream = NoiseStream(seed, static_cast<std::uint64_t>(idx));
        try {
            const WeightedPath wp = simulate_weighted_path(model, x, i, T, n_steps, stream, true);
            red.value[u] = phi(wp.terminal_state(), wp.chain.final_regime()) * wp.weight;
            if (wp.chain.n_jumps() <= out.n_max) {
                red.grad[u] = zeta_hat(model, phi, phi_x, wp, T, e);
            } else {
                red.grad[u] = 0.0;
                red.truncated[u] = 1;
            }
            red.ok[u] = 1;
        } catch (const DivergenceError&) {
        }
    });
    out.value = reduce(red.value, red.ok);
    out.gradient = reduce(red.grad, red.ok);
    std::int64_t truncated = 0;
    for (unsigned char t : red.truncated) truncated += t;
    out.truncated_mass = static_cast<double>(truncated) / static_cast<double>(out.value.n);
    return out;
}

McEstimate fd_gradient_oracle(const ModelSpec& model, const Functional& phi, const Vec& x, int i,
                              double T, int n_steps, double h, std::int64_t n_paths,
                              std::uint64_t seed, int threads, const Vec& direction) {
    if (!(h > 0.0)) throw std::invalid_argument("fd_gradient_oracle: h must be positive");
    const Vec e = resolve_direction(direction, model.r);
    const TimeGrid grid(T, n_steps);
    return mc_estimate(
        [&](const PathContext& ctx) -> std::optional<double> {
            try {
                NoiseStream s1 = ctx.stream();
                PathStepper plus(model, x + h * e, i, grid);
                for (int k = 0; k < grid.n_steps; ++k) plus.step(s1);
                NoiseStream s2 = ctx.stream();
                PathStepper minus(model, x - h * e, i, grid);
                for (int k = 0; k < grid.n_steps; ++k) minus.step(s2);
                return (phi(plus.x(), plus.alpha()) - phi(minus.x(), minus.alpha())) / (2.0 * h);
            } catch (const DivergenceError&) {
                return std::nullopt;
            }
        },
        n_paths, seed, threads);
}

}  // namespace swdiff
