#include "swdiff/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace swdiff {
namespace {

struct Reduction {
    McEstimate est;
    std::vector<double> values;  // kept for secondary reductions
};

// Deterministic in-order reduction over per-path values; nan marks an abort.
Reduction reduce_paths(std::int64_t n, int threads,
                       const std::function<double(const PathContext&)>& per_path,
                       std::uint64_t seed) {
    std::vector<double> values(static_cast<std::size_t>(n));
    parallel_for_indices(n, threads, [&](std::int64_t idx) {
        double v;
        try {
            v = per_path(PathContext{seed, static_cast<std::uint64_t>(idx)});
        } catch (const DivergenceError&) {
            v = std::numeric_limits<double>::quiet_NaN();
        }
        values[static_cast<std::size_t>(idx)] = v;
    });
    Reduction red;
    double sum = 0.0;
    for (double v : values) {
        if (std::isnan(v)) {
            ++red.est.aborted;
        } else {
            sum += v;
            ++red.est.n;
        }
    }
    if (red.est.n == 0) throw std::runtime_error("study: all paths aborted");
    red.est.mean = sum / static_cast<double>(red.est.n);
    double ss = 0.0;
    for (double v : values) {
        if (!std::isnan(v)) ss += (v - red.est.mean) * (v - red.est.mean);
    }
    if (red.est.n > 1)
        red.est.stderror = std::sqrt(ss / static_cast<double>(red.est.n - 1) /
                                     static_cast<double>(red.est.n));
    red.values = std::move(values);
    return red;
}

double mean_power(const std::vector<double>& values, double p) {
    double sum = 0.0;
    std::int64_t n = 0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        sum += std::pow(v, p);
        ++n;
    }
    return sum / static_cast<double>(n);
}

}  // namespace

void StudyConfig::validate(int) const {
    if (!(T > 0.0)) throw std::invalid_argument("StudyConfig: T must be positive");
    if (n_steps < 1) throw std::invalid_argument("StudyConfig: n_steps must be >= 1");
    if (n_paths < 100) throw std::invalid_argument("StudyConfig: n_paths must be >= 100");
    if (!(p > 0.0)) throw std::invalid_argument("StudyConfig: p must be positive");
    if (deltas.size() < 1) throw std::invalid_argument("StudyConfig: deltas must be nonempty");
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        if (!(deltas[k] > 0.0)) throw std::invalid_argument("StudyConfig: deltas must be positive");
        if (k > 0 && !(deltas[k] < deltas[k - 1]))
            throw std::invalid_argument("StudyConfig: deltas must be strictly decreasing");
    }
}

Vec StudyConfig::unit_direction(int r) const {
    if (direction.size() == 0) {
        Vec e = Vec::Zero(r);
        e[0] = 1.0;
        return e;
    }
    if (direction.size() != r) throw std::invalid_argument("StudyConfig: direction has wrong dimension");
    const double nrm = direction.norm();
    if (!(nrm > 0.0)) throw std::invalid_argument("StudyConfig: direction must be nonzero");
    return direction / nrm;
}

StudyReport lp_error_study(const ModelSpec& model, const Vec& x, int i, const StudyConfig& cfg) {
    cfg.validate(model.r);
    if (!model.has_jacobians()) throw CapabilityError("lp_error_study: model lacks Jacobians");
    StudyReport report{model.name, "lp-study", cfg, {}, {}, {}};
    if (model.holder_exponent && cfg.p >= *model.holder_exponent) {
        std::ostringstream os;
        os << "warning: p=" << cfg.p << " is not below the declared Holder exponent "
           << *model.holder_exponent;
        report.notes.push_back(os.str());
    }
    const Vec e = cfg.unit_direction(model.r);
    const TimeGrid grid(cfg.T, cfg.n_steps);
    std::vector<std::pair<double, double>> fit_pts;
    for (double delta : cfg.deltas) {
        auto per_path = [&](const PathContext& ctx) -> double {
            NoiseStream stream = ctx.stream();
            CoupledStepper st(model, x, x + delta * e, i, grid);
            Mat xi = Mat::Identity(model.r, model.r);
            for (int k = 0; k < grid.n_steps; ++k) {
                const Vec xk = st.x();
                const int ak = st.alpha();
                st.step(stream);
                xi = tangent_step(model, xk, ak, xi, grid.dt(), st.last_dw());
                if (!xi.allFinite()) throw DivergenceError(k + 1, "tangent diverged");
            }
            const Vec z = (st.xt() - st.x()) / delta;
            return (z - xi * e).norm();
        };
        Reduction red = reduce_paths(cfg.n_paths, cfg.threads, per_path, cfg.seed);
        // report the p-th moment of the per-path error
        McEstimate est = red.est;
        est.mean = mean_power(red.values, cfg.p);
        {
            double ss = 0.0;
            for (double v : red.values) {
                if (std::isnan(v)) continue;
                const double dv = std::pow(v, cfg.p) - est.mean;
                ss += dv * dv;
            }
            est.stderror = (est.n > 1) ? std::sqrt(ss / static_cast<double>(est.n - 1) /
                                                   static_cast<double>(est.n))
                                       : 0.0;
        }
        // power-mean sanity: E|D|^{p/2} <= (E|D|^p)^{1/2}
        const double half_moment = mean_power(red.values, cfg.p / 2.0);
        if (half_moment > std::sqrt(est.mean) * (1.0 + 1e-12)) {
            throw std::logic_error("lp_error_study: power-mean inequality violated");
        }
        report.rows.push_back({delta, est});
        if (est.mean > 0.0) fit_pts.emplace_back(delta, est.mean);
    }
    if (fit_pts.size() >= 2) {
        report.fit = loglog_fit(fit_pts);
        if (fit_pts.size() < cfg.deltas.size())
            report.notes.push_back("fit excludes deltas with exactly zero error");
    } else {
        report.notes.push_back("fit skipped: not enough nonzero error levels");
    }
    return report;
}

StudyReport decoupling_probability_study(const ModelSpec& model, const Vec& x, int i,
                                         const StudyConfig& cfg, int min_events) {
    cfg.validate(model.r);
    StudyReport report{model.name, "decouple", cfg, {}, {}, {}};
    const Vec e = cfg.unit_direction(model.r);
    const TimeGrid grid(cfg.T, cfg.n_steps);
    std::vector<std::pair<double, double>> fit_pts;
    bool any_event = false;
    for (double delta : cfg.deltas) {
        auto per_path = [&](const PathContext& ctx) -> double {
            NoiseStream stream = ctx.stream();
            CoupledStepper st(model, x, x + delta * e, i, grid);
            for (int k = 0; k < grid.n_steps; ++k) {
                st.step(stream);
                if (st.tau_delta()) return 1.0;
            }
            return 0.0;
        };
        Reduction red = reduce_paths(cfg.n_paths, cfg.threads, per_path, cfg.seed);
        McEstimate est = red.est;
        // binomial standard error
        est.stderror = std::sqrt(std::max(est.mean * (1.0 - est.mean), 0.0) /
                                 static_cast<double>(est.n));
        report.rows.push_back({delta, est});
        const double events = est.mean * static_cast<double>(est.n);
        if (events > 0.0) any_event = true;
        if (events >= static_cast<double>(min_events)) {
            fit_pts.emplace_back(delta, est.mean);
        } else {
            std::ostringstream os;
            os << "delta=" << delta << " excluded from fit (" << static_cast<std::int64_t>(events + 0.5)
               << " events < " << min_events << ")";
            report.notes.push_back(os.str());
        }
    }
    if (!any_event) {
        report.notes.push_back("Markovian: no decoupling");
    } else if (fit_pts.size() >= 2) {
        report.fit = loglog_fit(fit_pts);
        std::ostringstream os;
        os << "fit uses deltas with >= " << min_events << " events";
        report.notes.push_back(os.str());
    }
    return report;
}

StudyReport sup_distance_study(const ModelSpec& model, const Vec& x, int i, const StudyConfig& cfg) {
    cfg.validate(model.r);
    StudyReport report{model.name, "supdist", cfg, {}, {}, {}};
    const Vec e = cfg.unit_direction(model.r);
    const TimeGrid grid(cfg.T, cfg.n_steps);
    std::vector<std::pair<double, double>> fit_pts;
    for (double delta : cfg.deltas) {
        auto per_path = [&](const PathContext& ctx) -> double {
            NoiseStream stream = ctx.stream();
            CoupledStepper st(model, x, x + delta * e, i, grid);
            double sup = (st.xt() - st.x()).norm();
            for (int k = 0; k < grid.n_steps; ++k) {
                st.step(stream);
                sup = std::max(sup, (st.xt() - st.x()).norm());
            }
            return sup;
        };
        Reduction red = reduce_paths(cfg.n_paths, cfg.threads, per_path, cfg.seed);
        report.rows.push_back({delta, red.est});
        if (red.est.mean > 0.0) fit_pts.emplace_back(delta, red.est.mean);
    }
    if (fit_pts.size() >= 2) report.fit = loglog_fit(fit_pts);
    return report;
}

std::vector<DynkinRow> dynkin_residual(const ModelSpec& model,
                                       const std::function<double(const Vec&, int)>& f,
                                       const std::function<Vec(const Vec&, int)>& fgrad,
                                       const std::function<Mat(const Vec&, int)>& fhess,
                                       const Vec& x, int i, double T,
                                       const std::vector<double>& dt_list, std::int64_t n_paths,
                                       std::uint64_t seed, int threads) {
    std::vector<DynkinRow> rows;
    const double f0 = f(x, i);
    for (double dt : dt_list) {
        const int n_steps = std::max(1, static_cast<int>(std::lround(T / dt)));
        const TimeGrid grid(T, n_steps);
        auto per_path = [&](const PathContext& ctx) -> double {
            NoiseStream stream = ctx.stream();
            PathStepper st(model, x, i, grid);
            double lf_integral = 0.0;
            for (int k = 0; k < grid.n_steps; ++k) {
                lf_integral +=
                    apply_generator(model, f, fgrad, fhess, HybridState{st.x(), st.alpha()}) *
                    grid.dt();
                st.step(stream);
            }
            return f(st.x(), st.alpha()) - lf_integral;
        };
        Reduction red = reduce_paths(n_paths, threads, per_path, seed);
        rows.push_back({grid.dt(), std::abs(red.est.mean - f0), red.est.stderror,
                        red.est.n, red.est.aborted});
    }
    return rows;
}

std::vector<FellerRow> feller_gap(const ModelSpec& model,
                                  const std::function<double(const Vec&, int)>& f, const Vec& x,
                                  const std::vector<Vec>& xs, int i, double t, int n_steps,
                                  std::int64_t n_paths, std::uint64_t seed, int threads) {
    std::vector<FellerRow> rows;
    const TimeGrid grid(t, n_steps);
    for (const Vec& xn : xs) {
        // the gap estimate itself uses common random numbers; its acceptance
        // radius combines the two runs' independent-estimator errors, which
        // stays well defined even when no path decouples in the sample
        std::vector<double> va(static_cast<std::size_t>(n_paths));
        std::vector<double> vb(static_cast<std::size_t>(n_paths));
        std::vector<unsigned char> ok(static_cast<std::size_t>(n_paths), 0);
        parallel_for_indices(n_paths, threads, [&](std::int64_t idx) {
            const PathContext ctx{seed, static_cast<std::uint64_t>(idx)};
            try {
                NoiseStream s1 = ctx.stream();
                PathStepper a(model, xn, i, grid);
                for (int k = 0; k < grid.n_steps; ++k) a.step(s1);
                NoiseStream s2 = ctx.stream();
                PathStepper b(model, x, i, grid);
                for (int k = 0; k < grid.n_steps; ++k) b.step(s2);
                va[static_cast<std::size_t>(idx)] = f(a.x(), a.alpha());
                vb[static_cast<std::size_t>(idx)] = f(b.x(), b.alpha());
                ok[static_cast<std::size_t>(idx)] = 1;
            } catch (const DivergenceError&) {
            }
        });
        FellerRow row;
        row.offset = (xn - x).norm();
        double sum_a = 0.0, sum_b = 0.0;
        for (std::int64_t idx = 0; idx < n_paths; ++idx) {
            if (ok[static_cast<std::size_t>(idx)]) {
                sum_a += va[static_cast<std::size_t>(idx)];
                sum_b += vb[static_cast<std::size_t>(idx)];
                ++row.n;
            } else {
                ++row.aborted;
            }
        }
        if (row.n == 0) throw std::runtime_error("feller_gap: all paths aborted");
        const double mean_a = sum_a / static_cast<double>(row.n);
        const double mean_b = sum_b / static_cast<double>(row.n);
        row.gap = std::abs(mean_a - mean_b);
        double ss_a = 0.0, ss_b = 0.0;
        for (std::int64_t idx = 0; idx < n_paths; ++idx) {
            if (!ok[static_cast<std::size_t>(idx)]) continue;
            ss_a += (va[static_cast<std::size_t>(idx)] - mean_a) *
                    (va[static_cast<std::size_t>(idx)] - mean_a);
            ss_b += (vb[static_cast<std::size_t>(idx)] - mean_b) *
                    (vb[static_cast<std::size_t>(idx)] - mean_b);
        }
        if (row.n > 1) {
            const double denom = static_cast<double>(row.n - 1) * static_cast<double>(row.n);
            row.stderror = std::sqrt(ss_a / denom + ss_b / denom);
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace swdiff
