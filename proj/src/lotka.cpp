#include "swdiff/lotka.hpp"

#include <cmath>
#include <stdexcept>

namespace swdiff {
namespace {

Vec log_vec(const Vec& x) {
    Vec y(x.size());
    for (int c = 0; c < x.size(); ++c) {
        if (!(x[c] > 0.0)) throw std::invalid_argument("lotka: state must be strictly positive");
        y[c] = std::log(x[c]);
    }
    return y;
}

Vec exp_vec(const Vec& y) {
    Vec x(y.size());
    for (int c = 0; c < y.size(); ++c) x[c] = std::exp(y[c]);
    return x;
}

double l1_norm(const Vec& x) { return x.cwiseAbs().sum(); }

}  // namespace

void LVSpec::validate() const {
    const std::size_t m0 = static_cast<std::size_t>(regimes.m0);
    if (growth.size() != m0 || interaction.size() != m0 || noise.size() != m0)
        throw std::invalid_argument("LVSpec: need one b, A, sigma per regime");
    for (std::size_t k = 0; k < m0; ++k) {
        if (growth[k].size() != r || noise[k].size() != r || interaction[k].rows() != r ||
            interaction[k].cols() != r)
            throw std::invalid_argument("LVSpec: coefficient dimensions must match r");
        for (int a = 0; a < r; ++a) {
            if (!(interaction[k](a, a) > 0.0))
                throw std::invalid_argument("LVSpec: diagonal interaction must be positive");
            for (int b = 0; b < r; ++b) {
                if (interaction[k](a, b) < 0.0)
                    throw std::invalid_argument("LVSpec: interactions must be nonnegative");
            }
        }
    }
    if (!rates) throw std::invalid_argument("LVSpec: rates function required");
}

ModelSpec lv_as_model(const LVSpec& spec) {
    spec.validate();
    ModelSpec m;
    m.name = "lotka-log";
    m.r = spec.r;
    m.d = spec.r;
    m.regimes = spec.regimes;
    m.rate_bound = spec.rate_bound;
    const auto growth = spec.growth;
    const auto interaction = spec.interaction;
    const auto noise = spec.noise;
    const auto rates = spec.rates;
    m.drift = [growth, interaction, noise](const Vec& y, int k) -> Vec {
        const std::size_t u = static_cast<std::size_t>(k - 1);
        return growth[u] - 0.5 * noise[u].cwiseProduct(noise[u]) - interaction[u] * exp_vec(y);
    };
    m.diffusion = [noise](const Vec&, int k) -> Mat {
        return Mat(noise[static_cast<std::size_t>(k - 1)].asDiagonal());
    };
    m.rates = [rates](const Vec& y) -> Mat { return rates(exp_vec(y)); };
    m.drift_jac = [interaction](const Vec& y, int k) -> Mat {
        const std::size_t u = static_cast<std::size_t>(k - 1);
        return -interaction[u] * Mat(exp_vec(y).asDiagonal());
    };
    const int r = spec.r;
    m.diffusion_jac = [r](const Vec&, int) -> std::vector<Mat> {
        return std::vector<Mat>(static_cast<std::size_t>(r), Mat::Zero(r, r));
    };
    return m;
}

PathSample lv_simulate(const LVSpec& spec, const Vec& x0, int i0, const TimeGrid& grid,
                       NoiseStream& stream) {
    const ModelSpec model = lv_as_model(spec);
    PathSample path = simulate_path(model, log_vec(x0), i0, grid, stream);
    for (int k = 0; k <= grid.n_steps; ++k) path.states.col(k) = exp_vec(path.states.col(k));
    return path;
}

MomentReport lv_moment_check(const LVSpec& spec, const Vec& x0, int i0, double m, double T,
                             int n_checks, int n_steps, std::int64_t n_paths, std::uint64_t seed,
                             int threads) {
    if (!(m > 0.0)) throw std::invalid_argument("lv_moment_check: m must be positive");
    if (n_checks < 1) throw std::invalid_argument("lv_moment_check: n_checks must be >= 1");
    const ModelSpec model = lv_as_model(spec);
    const Vec y0 = log_vec(x0);
    const TimeGrid grid(2.0 * T, 2 * n_steps);
    const int rows_n = 2 * n_checks;
    const int stride = grid.n_steps / rows_n;
    if (stride * rows_n != grid.n_steps)
        throw std::invalid_argument("lv_moment_check: n_steps must be a multiple of n_checks");

    std::vector<std::vector<double>> samples(
        static_cast<std::size_t>(rows_n) + 1,
        std::vector<double>(static_cast<std::size_t>(n_paths)));
    std::vector<unsigned char> ok(static_cast<std::size_t>(n_paths), 0);
    parallel_for_indices(n_paths, threads, [&](std::int64_t idx) {
        NoiseStream stream(seed, static_cast<std::uint64_t>(idx));
        try {
            PathStepper st(model, y0, i0, grid);
            samples[0][static_cast<std::size_t>(idx)] = std::pow(l1_norm(exp_vec(st.x())), m);
            for (int row = 1; row <= rows_n; ++row) {
                for (int k = 0; k < stride; ++k) st.step(stream);
                samples[static_cast<std::size_t>(row)][static_cast<std::size_t>(idx)] =
                    std::pow(l1_norm(exp_vec(st.x())), m);
            }
            ok[static_cast<std::size_t>(idx)] = 1;
        } catch (const DivergenceError&) {
        }
    });

    MomentReport report;
    for (int row = 0; row <= rows_n; ++row) {
        McEstimate est;
        double sum = 0.0;
        const auto& vals = samples[static_cast<std::size_t>(row)];
        for (std::int64_t idx = 0; idx < n_paths; ++idx) {
            if (ok[static_cast<std::size_t>(idx)]) {
                sum += vals[static_cast<std::size_t>(idx)];
                ++est.n;
            } else {
                ++est.aborted;
            }
        }
        if (est.n == 0) throw std::runtime_error("lv_moment_check: all paths aborted");
        est.mean = sum / static_cast<double>(est.n);
        double ss = 0.0;
        for (std::int64_t idx = 0; idx < n_paths; ++idx) {
            if (!ok[static_cast<std::size_t>(idx)]) continue;
            const double dv = vals[static_cast<std::size_t>(idx)] - est.mean;
            ss += dv * dv;
        }
        if (est.n > 1)
            est.stderror =
                std::sqrt(ss / static_cast<double>(est.n - 1) / static_cast<double>(est.n));
        report.rows.push_back({grid.time(row * stride), est});
    }
    double sup_first = 0.0, sup_second = 0.0;
    bool finite = true;
    for (const auto& row : report.rows) {
        if (!std::isfinite(row.est.mean)) finite = false;
        if (row.t <= T) sup_first = std::max(sup_first, row.est.mean);
        else sup_second = std::max(sup_second, row.est.mean);
    }
    report.bounded = finite && sup_second <= 1.3 * sup_first;
    return report;
}

LvCoupledReport lv_coupled_distance(const LVSpec& spec, const Vec& x0, const Vec& y0, int i0,
                                    double T, int n_steps, int n_offsets, std::int64_t n_paths,
                                    std::uint64_t seed, int threads) {
    if (n_offsets < 2) throw std::invalid_argument("lv_coupled_distance: need at least 2 offsets");
    const ModelSpec model = lv_as_model(spec);
    const TimeGrid grid(T, n_steps);
    LvCoupledReport report;
    std::vector<std::pair<double, double>> fit_pts;
    for (int level = 0; level < n_offsets; ++level) {
        const double scale = std::pow(2.0, -level);
        const Vec yk = x0 + (y0 - x0) * scale;
        const double offset = (yk - x0).norm();  // zero offsets are reported but never fitted
        std::vector<double> values(static_cast<std::size_t>(n_paths));
        std::vector<unsigned char> ok(static_cast<std::size_t>(n_paths), 0);
        parallel_for_indices(n_paths, threads, [&](std::int64_t idx) {
            NoiseStream stream(seed, static_cast<std::uint64_t>(idx));
            try {
                CoupledStepper st(model, log_vec(x0), log_vec(yk), i0, grid);
                double sup = (exp_vec(st.xt()) - exp_vec(st.x())).norm();
                for (int k = 0; k < grid.n_steps && !st.tau_delta(); ++k) {
                    st.step(stream);
                    sup = std::max(sup, (exp_vec(st.xt()) - exp_vec(st.x())).norm());
                }
                values[static_cast<std::size_t>(idx)] = sup * sup;
                ok[static_cast<std::size_t>(idx)] = 1;
            } catch (const DivergenceError&) {
            }
        });
        McEstimate est;
        double sum = 0.0;
        for (std::int64_t idx = 0; idx < n_paths; ++idx) {
            if (ok[static_cast<std::size_t>(idx)]) {
                sum += values[static_cast<std::size_t>(idx)];
                ++est.n;
            } else {
                ++est.aborted;
            }
        }
        if (est.n == 0) throw std::runtime_error("lv_coupled_distance: all paths aborted");
        est.mean = sum / static_cast<double>(est.n);
        double ss = 0.0;
        for (std::int64_t idx = 0; idx < n_paths; ++idx) {
            if (!ok[static_cast<std::size_t>(idx)]) continue;
            const double dv = values[static_cast<std::size_t>(idx)] - est.mean;
            ss += dv * dv;
        }
        if (est.n > 1)
            est.stderror =
                std::sqrt(ss / static_cast<double>(est.n - 1) / static_cast<double>(est.n));
        report.rows.push_back({offset, est});
        if (est.mean > 0.0) fit_pts.emplace_back(offset, est.mean);
    }
    if (fit_pts.size() >= 2) report.fit = loglog_fit(fit_pts);
    return report;
}

}  // namespace swdiff
