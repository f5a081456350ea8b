#include "swdiff/cli.hpp"

#include "swdiff/config.hpp"
#include "swdiff/counterexample.hpp"
#include "swdiff/csv.hpp"
#include "swdiff/functional.hpp"
#include "swdiff/lotka.hpp"
#include "swdiff/mc.hpp"
#include "swdiff/models.hpp"
#include "swdiff/paths.hpp"
#include "swdiff/sensitivity.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

namespace swdiff::cli {
namespace {

struct CommonOpts {
    std::string config_path;
    std::string out = "-";
    std::string model = "smooth-q";
    std::uint64_t seed = 1;
    int threads = default_threads();
    std::int64_t paths = 10000;
    int steps = 200;
    double T = 1.0;
    std::string x0 = "0.5";
    int i0 = 1;
    bool check = false;
};

struct StudyOpts {
    std::string deltas = "0.1,0.01,0.001";
    double p = 2.0;
    std::string dt_list = "0.01,0.005";
    double h = 1e-3;
    std::string n_values = "10";
    double moment = 2.0;
    int n_checks = 10;
    int offsets = 8;
    std::string y0;
};

struct Outcome {
    bool check_failed = false;
    bool divergence_dominated = false;
};

class OutputFile {
public:
    explicit OutputFile(const std::string& path) {
        if (path != "-") {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw ConfigError("cannot open output file: " + path);
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

Vec parse_point(const std::string& text) {
    const std::vector<double> vals = parse_double_list(text);
    Vec out(static_cast<int>(vals.size()));
    for (std::size_t c = 0; c < vals.size(); ++c) out[static_cast<int>(c)] = vals[c];
    return out;
}

std::map<std::string, std::string> base_echo(const std::string& study, const CommonOpts& common) {
    std::map<std::string, std::string> echo;
    echo["study"] = study;
    echo["model"] = common.model;
    echo["T"] = CsvWriter::format_double(common.T);
    echo["steps"] = std::to_string(common.steps);
    echo["paths"] = std::to_string(common.paths);
    // the thread count is execution detail, not experiment identity; output
    // must be byte-identical for any value, so it is not echoed
    echo["seed"] = std::to_string(common.seed);
    echo["x0"] = common.x0;
    echo["i0"] = std::to_string(common.i0);
    return echo;
}

ModelSpec build_model(const CommonOpts& common, const Config& cfg) {
    ParamMap params = cfg.model_params;
    return make_builtin_model(common.model, params);
}

void write_rows(CsvWriter& csv, const StudyReport& report, const char* delta_col = "delta") {
    for (const auto& note : report.notes) csv.comment(note);
    csv.header({delta_col, "n", "mean", "stderr", "aborted"});
    for (const auto& row : report.rows) {
        csv.field(row.delta)
            .field(row.est.n)
            .field(row.est.mean)
            .field(row.est.stderror)
            .field(row.est.aborted);
        csv.end_row();
    }
    if (report.fit) {
        std::ostringstream os;
        os << "slope=" << CsvWriter::format_double(report.fit->slope)
           << ",intercept=" << CsvWriter::format_double(report.fit->intercept)
           << ",r2=" << CsvWriter::format_double(report.fit->r2);
        csv.comment(os.str());
    }
}

double abort_fraction(const StudyReport& report) {
    std::int64_t total = 0, aborted = 0;
    for (const auto& row : report.rows) {
        total += row.est.n + row.est.aborted;
        aborted += row.est.aborted;
    }
    return total ? static_cast<double>(aborted) / static_cast<double>(total) : 0.0;
}

// exact regime law of the thinning scheme for the symmetric two-state chain
double scheme_two_state_p2(double q, double T, int n_steps) {
    const double dt = T / n_steps;
    const double stay = 2.0 * std::exp(-q * dt) - 1.0;  // 1 - 2 (1 - e^{-q dt})
    return 0.5 * (1.0 - std::pow(stay, n_steps));
}

int run_validate(const CommonOpts& common, const Config& cfg) {
    // rate-table rows are validated directly; builtin models at probe points
    if (!cfg.table_values.empty()) {
        for (std::size_t k = 0; k < cfg.table_values.size(); ++k) {
            const RateValidation v = validate_rate_matrix(cfg.table_values[k], kRateTolDefault);
            if (!v.ok) {
                std::cerr << "validate: [table] q" << k + 1 << " invalid: " << v.violations.front()
                          << "\n";
                return 2;
            }
        }
    }
    const ModelSpec model = build_model(common, cfg);
    const Vec x0 = parse_point(common.x0);
    for (double scale : {1.0, 0.5, 2.0, -1.0}) {
        const Vec probe = scale * x0;
        const RateValidation v = validate_rate_matrix(model.rates(probe), kRateTolDefault);
        if (!v.ok) {
            std::cerr << "validate: model " << common.model << " invalid at x=" << scale * x0[0]
                      << ": " << v.violations.front() << "\n";
            return 2;
        }
    }
    std::cout << "ok\n";
    return 0;
}

Outcome run_simulate(const CommonOpts& common, const Config& cfg, std::ostream& os) {
    const ModelSpec model = build_model(common, cfg);
    CsvWriter csv(os);
    csv.preamble(base_echo("simulate", common), common.seed);
    NoiseStream stream(common.seed, 0);
    const PathSample path =
        simulate_path(model, parse_point(common.x0), common.i0, TimeGrid(common.T, common.steps), stream);
    write_path_csv(path, os);
    return {};
}

Outcome run_coupled(const CommonOpts& common, const StudyOpts& study, const Config& cfg,
                    std::ostream& os) {
    const ModelSpec model = build_model(common, cfg);
    CsvWriter csv(os);
    auto echo = base_echo("coupled", common);
    const double delta = parse_double_list(study.deltas).front();
    echo["delta"] = CsvWriter::format_double(delta);
    csv.preamble(echo, common.seed);
    NoiseStream stream(common.seed, 0);
    const Vec x0 = parse_point(common.x0);
    Vec e = Vec::Zero(x0.size());
    e[0] = 1.0;
    const CoupledPathSample path = simulate_coupled(model, x0, x0 + delta * e, common.i0,
                                                    TimeGrid(common.T, common.steps), stream);
    write_coupled_csv(path, os);
    return {};
}

Outcome run_lp_study(const CommonOpts& common, const StudyOpts& study, const Config& cfg,
                     std::ostream& os) {
    const ModelSpec model = build_model(common, cfg);
    StudyConfig sc;
    sc.T = common.T;
    sc.n_steps = common.steps;
    sc.n_paths = common.paths;
    sc.deltas = parse_double_list(study.deltas);
    sc.p = study.p;
    sc.seed = common.seed;
    sc.threads = common.threads;
    const StudyReport report = lp_error_study(model, parse_point(common.x0), common.i0, sc);
    CsvWriter csv(os);
    auto echo = base_echo("lp-study", common);
    echo["deltas"] = study.deltas;
    echo["p"] = CsvWriter::format_double(study.p);
    csv.preamble(echo, common.seed);
    write_rows(csv, report);
    Outcome out;
    out.divergence_dominated = abort_fraction(report) > 0.01;
    if (common.check) {
        bool pass = true;
        for (std::size_t k = 1; k < report.rows.size(); ++k)
            pass = pass && report.rows[k].est.mean < report.rows[k - 1].est.mean;
        if (sc.p == 2.0 && report.rows.size() >= 2)
            pass = pass && report.rows.back().est.mean <= 0.1 * report.rows.front().est.mean;
        out.check_failed = !pass;
    }
    return out;
}

Outcome run_decouple(const CommonOpts& common, const StudyOpts& study, const Config& cfg,
                     std::ostream& os) {
    const ModelSpec model = build_model(common, cfg);
    StudyConfig sc;
    sc.T = common.T;
    sc.n_steps = common.steps;
    sc.n_paths = common.paths;
    sc.deltas = parse_double_list(study.deltas);
    sc.seed = common.seed;
    sc.threads = common.threads;
    const StudyReport report = decoupling_probability_study(model, parse_point(common.x0), common.i0, sc);
    CsvWriter csv(os);
    auto echo = base_echo("decouple", common);
    echo["deltas"] = study.deltas;
    csv.preamble(echo, common.seed);
    write_rows(csv, report);
    Outcome out;
    out.divergence_dominated = abort_fraction(report) > 0.01;
    if (common.check) {
        bool pass = true;
        if (common.model == "counterexample") {
            // exact law: P = (d/(1+d)) (1 - e^{-(1+d)T})
            for (const auto& row : report.rows) {
                const double exact =
                    row.delta / (1.0 + row.delta) * (-std::expm1(-(1.0 + row.delta) * common.T));
                pass = pass && std::abs(row.est.mean - exact) <= 3.0 * row.est.stderror;
            }
            pass = pass && report.fit && std::abs(report.fit->slope - 1.0) <= 0.1;
        } else if (common.model == "holder-rate") {
            const double lam = model.holder_exponent.value_or(0.5);
            pass = pass && report.fit && report.fit->slope >= lam - 0.15 &&
                   report.fit->slope <= lam + 0.25;
        } else {
            pass = report.fit.has_value() || !report.notes.empty();
        }
        out.check_failed = !pass;
    }
    return out;
}

Outcome run_supdist(const CommonOpts& common, const StudyOpts& study, const Config& cfg,
                    std::ostream& os) {
    const ModelSpec model = build_model(common, cfg);
    StudyConfig sc;
    sc.T = common.T;
    sc.n_steps = common.steps;
    sc.n_paths = common.paths;
    sc.deltas = parse_double_list(study.deltas);
    sc.seed = common.seed;
    sc.threads = common.threads;
    const StudyReport report = sup_distance_study(model, parse_point(common.x0), common.i0, sc);
    CsvWriter csv(os);
    auto echo = base_echo("supdist", common);
    echo["deltas"] = study.deltas;
    csv.preamble(echo, common.seed);
    write_rows(csv, report);
    Outcome out;
    out.divergence_dominated = abort_fraction(report) > 0.01;
    if (common.check) {
        out.check_failed = !(report.fit && report.fit->slope >= 0.85);
    }
    return out;
}

Outcome run_dynkin(const CommonOpts& common, const StudyOpts& study, const Config& cfg,
                   std::ostream& os) {
    const ModelSpec model = build_model(common, cfg);
    const auto f = [](const Vec& x, int) { return x.squaredNorm(); };
    const auto fgrad = [](const Vec& x, int) -> Vec { return 2.0 * x; };
    const auto fhess = [](const Vec& x, int) -> Mat {
        return 2.0 * Mat::Identity(x.size(), x.size());
    };
    const std::vector<double> dts = parse_double_list(study.dt_list);
    const auto rows = dynkin_residual(model, f, fgrad, fhess, parse_point(common.x0), common.i0,
                                      common.T, dts, common.paths, common.seed, common.threads);
    Outcome out;
    CsvWriter csv(os);
    auto echo = base_echo("dynkin", common);
    echo["dt_list"] = study.dt_list;
    csv.preamble(echo, common.seed);
    csv.header({"dt", "n", "residual", "stderr", "aborted"});
    std::int64_t total = 0, aborted = 0;
    for (const auto& row : rows) {
        csv.field(row.dt).field(row.n).field(row.residual).field(row.stderror).field(row.aborted);
        csv.end_row();
        total += row.n + row.aborted;
        aborted += row.aborted;
    }
    out.divergence_dominated = total > 0 && aborted > total / 100;
    if (common.check) {
        bool pass = true;
        for (const auto& row : rows) pass = pass && row.residual <= 3.0 * row.stderror + 2.0 * row.dt;
        if (common.model == "brownian") {
            // two-state chain law, checked against the closed form with the
            // exact law of the thinning scheme as the O(dt) term
            const double q = cfg.model_params.count("q") ? cfg.model_params.at("q") : 1.0;
            const double closed = 0.5 * (-std::expm1(-2.0 * q * common.T));
            const auto indicator = [](const Vec&, int i) { return i == 2 ? 1.0 : 0.0; };
            for (double dt : dts) {
                const int n_steps = std::max(1, static_cast<int>(std::lround(common.T / dt)));
                const McEstimate est = mc_estimate(
                    [&](const PathContext& ctx) -> std::optional<double> {
                        NoiseStream stream = ctx.stream();
                        PathStepper st(model, parse_point(common.x0), 1, TimeGrid(common.T, n_steps));
                        for (int k = 0; k < n_steps; ++k) st.step(stream);
                        return indicator(st.x(), st.alpha());
                    },
                    common.paths, common.seed + 1, common.threads);
                const double scheme_gap =
                    std::abs(scheme_two_state_p2(q, common.T, n_steps) - closed);
                pass = pass && std::abs(est.mean - closed) <= 3.0 * est.stderror + scheme_gap;
            }
            // weak order one: the deterministic part of the scheme law halves
            if (dts.size() >= 2) {
                const int n1 = std::max(1, static_cast<int>(std::lround(common.T / dts.front())));
                const int n2 = std::max(1, static_cast<int>(std::lround(common.T / dts.back())));
                const double d1 = std::abs(scheme_two_state_p2(q, common.T, n1) - closed);
                const double d2 = std::abs(scheme_two_state_p2(q, common.T, n2) - closed);
                const double ratio = d1 / d2;
                const double steps_ratio = static_cast<double>(n2) / n1;
                pass = pass && ratio >= 1.5 / 2.0 * steps_ratio && ratio <= 3.0 / 2.0 * steps_ratio;
            }
        }
        out.check_failed = !pass;
    }
    return out;
}

Outcome run_feller(const CommonOpts& common, const StudyOpts& study, const Config& cfg,
                   std::ostream& os) {
    const ModelSpec model = build_model(common, cfg);
    const Vec x0 = parse_point(common.x0);
    const auto f = [](const Vec& x, int i) {
        return 0.25 * std::tanh(x.sum() / 4.0) + (i == 2 ? 0.75 : 0.0);
    };
    std::vector<Vec> xs;
    for (int n = 1; n <= study.offsets; ++n) {
        Vec xn = x0;
        xn[0] += std::pow(2.0, -n);
        xs.push_back(xn);
    }
    const auto rows = feller_gap(model, f, x0, xs, common.i0, common.T, common.steps, common.paths,
                                 common.seed, common.threads);
    CsvWriter csv(os);
    auto echo = base_echo("feller", common);
    echo["offsets"] = std::to_string(study.offsets);
    csv.preamble(echo, common.seed);
    csv.header({"offset", "n", "gap", "stderr", "aborted"});
    std::int64_t total = 0, aborted = 0;
    for (const auto& row : rows) {
        csv.field(row.offset).field(row.n).field(row.gap).field(row.stderror).field(row.aborted);
        csv.end_row();
        total += row.n + row.aborted;
        aborted += row.aborted;
    }
    Outcome out;
    out.divergence_dominated = total > 0 && aborted > total / 100;
    if (common.check) {
        bool pass = true;
        for (std::size_t k = rows.size() - 2; k < rows.size(); ++k)
            pass = pass && rows[k].gap <= 3.0 * rows[k].stderror;
        // truncation comparison: gaps of the cutoff model agree up to the
        // escape probability
        const double H = 4.0, w = 1.0;
        const ModelSpec trunc = truncate_model(model, H, w);
        const auto trows = feller_gap(trunc, f, x0, xs, common.i0, common.T, common.steps,
                                      common.paths, common.seed, common.threads);
        const McEstimate escape = mc_estimate(
            [&](const PathContext& ctx) -> std::optional<double> {
                NoiseStream stream = ctx.stream();
                PathStepper st(model, x0, common.i0, TimeGrid(common.T, common.steps));
                double sup = x0.norm();
                for (int k = 0; k < common.steps; ++k) {
                    st.step(stream);
                    sup = std::max(sup, st.x().norm());
                }
                return sup >= H ? 1.0 : 0.0;
            },
            common.paths, common.seed, common.threads);
        const double escape_se = std::sqrt(escape.mean * (1.0 - escape.mean) /
                                           static_cast<double>(escape.n));
        const double escape_bound =
            2.0 * (escape.mean + 3.0 * std::max(escape_se, 1.0 / static_cast<double>(escape.n)));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            pass = pass && std::abs(rows[k].gap - trows[k].gap) <=
                               3.0 * (rows[k].stderror + trows[k].stderror) + escape_bound;
        }
        out.check_failed = !pass;
    }
    return out;
}

Outcome run_grad_cm(const CommonOpts& common, const StudyOpts& study, const Config& cfg,
                    std::ostream& os) {
    const ModelSpec model = build_model(common, cfg);
    const Vec x0 = parse_point(common.x0);
    const auto phi = [](const Vec& x, int) { return std::max(-10.0, std::min(10.0, x[0])); };
    const auto phi_x = [](const Vec& x, int) -> Vec {
        Vec g(x.size());
        g.setZero();
        g[0] = (x[0] > -10.0 && x[0] < 10.0) ? 1.0 : 0.0;
        return g;
    };
    const GradientEstimate grad = gradient_cm(model, phi, phi_x, x0, common.i0, common.T,
                                              common.steps, common.paths, common.seed,
                                              common.threads);
    const McEstimate norm = mc_estimate(
        [&](const PathContext& ctx) -> std::optional<double> {
            NoiseStream stream = ctx.stream();
            try {
                return simulate_weighted_path(model, x0, common.i0, common.T, common.steps, stream,
                                              false)
                    .weight;
            } catch (const DivergenceError&) {
                return std::nullopt;
            }
        },
        common.paths, common.seed, common.threads);
    const McEstimate direct = mc_estimate(
        [&](const PathContext& ctx) -> std::optional<double> {
            NoiseStream stream = ctx.stream();
            try {
                PathStepper st(model, x0, common.i0, TimeGrid(common.T, common.steps));
                for (int k = 0; k < common.steps; ++k) st.step(stream);
                return phi(st.x(), st.alpha());
            } catch (const DivergenceError&) {
                return std::nullopt;
            }
        },
        common.paths, common.seed, common.threads);
    const McEstimate fd = fd_gradient_oracle(model, phi, x0, common.i0, common.T, common.steps,
                                             study.h, common.paths, common.seed, common.threads);
    CsvWriter csv(os);
    auto echo = base_echo("grad-cm", common);
    echo["h"] = CsvWriter::format_double(study.h);
    csv.preamble(echo, common.seed);
    csv.header({"component", "value", "stderr", "n", "n_max", "truncated_mass"});
    auto row = [&](const std::string& name, const McEstimate& est) {
        csv.field(name)
            .field(est.mean)
            .field(est.stderror)
            .field(est.n)
            .field(static_cast<std::int64_t>(grad.n_max))
            .field(grad.truncated_mass);
        csv.end_row();
    };
    row("value", grad.value);
    row("gradient", grad.gradient);
    row("weight_norm", norm);
    row("direct_value", direct);
    row("fd_oracle", fd);
    Outcome out;
    out.divergence_dominated =
        grad.value.aborted > (grad.value.n + grad.value.aborted) / 100;
    if (common.check) {
        bool pass = std::abs(norm.mean - 1.0) <= 3.0 * norm.stderror;
        pass = pass && std::abs(grad.value.mean - direct.mean) <=
                           3.0 * (grad.value.stderror + direct.stderror);
        pass = pass && std::abs(grad.gradient.mean - fd.mean) <=
                           3.0 * (grad.gradient.stderror + fd.stderror);
        out.check_failed = !pass;
    }
    return out;
}

Outcome run_counterexample(const CommonOpts& common, const StudyOpts& study, std::ostream& os) {
    const std::vector<double> n_list = parse_double_list(study.n_values);
    CsvWriter csv(os);
    auto echo = base_echo("counterexample", common);
    echo["n"] = study.n_values;
    echo.erase("model");
    echo.erase("x0");
    echo.erase("i0");
    echo.erase("steps");
    csv.preamble(echo, common.seed);
    csv.header({"n", "T", "estimate", "stderr", "lower_bound", "oracle"});
    Outcome out;
    bool pass = true;
    for (double n_real : n_list) {
        const int n = static_cast<int>(n_real);
        const McEstimate est = cx_gap_estimate(n, common.T, common.paths, common.seed, common.threads);
        const double lb = cx_lower_bound(n, common.T);
        const double oracle = cx_gap_oracle(n, common.T);
        csv.field(static_cast<std::int64_t>(n))
            .field(common.T)
            .field(est.mean)
            .field(est.stderror)
            .field(lb)
            .field(oracle);
        csv.end_row();
        if (common.check) {
            pass = pass && (est.mean - 3.0 * est.stderror >= lb);
            pass = pass && std::abs(est.mean - oracle) <= 3.0 * est.stderror;
        }
    }
    out.check_failed = common.check && !pass;
    return out;
}

Outcome run_lotka_moments(const CommonOpts& common, const StudyOpts& study, const Config& cfg,
                          std::ostream& os) {
    const LVSpec spec = lv_spec_from_config(cfg);
    const Vec x0 = parse_point(common.x0);
    const MomentReport report =
        lv_moment_check(spec, x0, common.i0, study.moment, common.T, study.n_checks, common.steps,
                        common.paths, common.seed, common.threads);
    CsvWriter csv(os);
    auto echo = base_echo("lotka-moments", common);
    echo["moment"] = CsvWriter::format_double(study.moment);
    echo["n_checks"] = std::to_string(study.n_checks);
    echo["model"] = "lotka";
    csv.preamble(echo, common.seed);
    csv.comment(report.bounded ? "bounded=1" : "bounded=0");
    csv.header({"t", "n", "mean", "stderr", "aborted"});
    for (const auto& row : report.rows) {
        csv.field(row.t)
            .field(row.est.n)
            .field(row.est.mean)
            .field(row.est.stderror)
            .field(row.est.aborted);
        csv.end_row();
    }
    Outcome out;
    if (!report.rows.empty()) {
        const auto& last = report.rows.back().est;
        out.divergence_dominated = last.aborted > (last.n + last.aborted) / 100;
    }
    if (common.check) {
        bool pass = report.bounded;
        // refinement stability of the first-half sup under dt halving
        const MomentReport fine =
            lv_moment_check(spec, x0, common.i0, study.moment, common.T, study.n_checks,
                            2 * common.steps, common.paths, common.seed, common.threads);
        double sup_a = 0.0, sup_b = 0.0;
        for (const auto& row : report.rows) sup_a = std::max(sup_a, row.est.mean);
        for (const auto& row : fine.rows) sup_b = std::max(sup_b, row.est.mean);
        pass = pass && std::abs(sup_a - sup_b) <= 0.2 * std::max(sup_a, sup_b);
        out.check_failed = !pass;
    }
    return out;
}

Outcome run_lotka_coupled(const CommonOpts& common, const StudyOpts& study, const Config& cfg,
                          std::ostream& os) {
    const LVSpec spec = lv_spec_from_config(cfg);
    const Vec x0 = parse_point(common.x0);
    Vec y0;
    if (!study.y0.empty()) {
        y0 = parse_point(study.y0);
    } else {
        y0 = 1.5 * x0;
    }
    const int n_offsets = std::min(study.offsets, 6);
    const LvCoupledReport report = lv_coupled_distance(spec, x0, y0, common.i0, common.T,
                                                       common.steps, n_offsets, common.paths,
                                                       common.seed, common.threads);
    CsvWriter csv(os);
    auto echo = base_echo("lotka-coupled", common);
    echo["model"] = "lotka";
    echo["y0"] = study.y0.empty() ? "1.5*x0" : study.y0;
    echo["offsets"] = std::to_string(n_offsets);
    csv.preamble(echo, common.seed);
    csv.header({"offset", "n", "mean", "stderr", "aborted"});
    for (const auto& row : report.rows) {
        csv.field(row.offset)
            .field(row.est.n)
            .field(row.est.mean)
            .field(row.est.stderror)
            .field(row.est.aborted);
        csv.end_row();
    }
    if (report.fit) {
        std::ostringstream fit;
        fit << "slope=" << CsvWriter::format_double(report.fit->slope)
            << ",intercept=" << CsvWriter::format_double(report.fit->intercept)
            << ",r2=" << CsvWriter::format_double(report.fit->r2);
        csv.comment(fit.str());
    }
    Outcome out;
    std::int64_t total = 0, aborted = 0;
    for (const auto& row : report.rows) {
        total += row.est.n + row.est.aborted;
        aborted += row.est.aborted;
    }
    out.divergence_dominated = total > 0 && aborted > total / 100;
    if (common.check) {
        out.check_failed = !(report.fit && report.fit->slope >= 1.8 && report.fit->slope <= 2.2);
    }
    return out;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"switching-diffusion simulation and verification studies"};
    app.require_subcommand(1);

    CommonOpts common;
    StudyOpts study;

    // --config is layered first; explicit flags override file values
    for (std::size_t a = 0; a + 1 < args.size(); ++a) {
        if (args[a] == "--config") common.config_path = args[a + 1];
    }
    Config cfg;
    try {
        if (!common.config_path.empty()) cfg = parse_config_file(common.config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    auto from_run = [&](const std::string& key, auto& target) {
        const auto it = cfg.run.find(key);
        if (it == cfg.run.end()) return;
        std::istringstream ss(it->second);
        ss >> target;
    };
    from_run("seed", common.seed);
    from_run("threads", common.threads);
    from_run("paths", common.paths);
    from_run("steps", common.steps);
    from_run("T", common.T);
    from_run("i0", common.i0);
    if (cfg.run.count("x0")) common.x0 = cfg.run.at("x0");
    if (cfg.run.count("out")) common.out = cfg.run.at("out");
    if (cfg.run.count("model")) common.model = cfg.run.at("model");
    if (!cfg.model_name.empty()) common.model = cfg.model_name;
    if (cfg.run.count("check")) common.check = cfg.run.at("check") == "1" || cfg.run.at("check") == "true";
    if (cfg.run.count("deltas")) study.deltas = cfg.run.at("deltas");
    from_run("p", study.p);
    if (cfg.run.count("dt_list")) study.dt_list = cfg.run.at("dt_list");
    from_run("h", study.h);
    if (cfg.run.count("n")) study.n_values = cfg.run.at("n");
    from_run("moment", study.moment);
    from_run("n_checks", study.n_checks);
    from_run("offsets", study.offsets);
    if (cfg.run.count("y0")) study.y0 = cfg.run.at("y0");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "config file (flags override)");
        sub->add_option("--out", common.out, "output path, - for stdout");
        sub->add_option("--seed", common.seed, "base seed");
        sub->add_option("--threads", common.threads, "worker threads");
        sub->add_option("--paths", common.paths, "Monte Carlo paths");
        sub->add_option("--steps", common.steps, "time steps");
        sub->add_option("--T", common.T, "horizon");
        sub->add_option("--model", common.model, "builtin model name");
        sub->add_option("--x0", common.x0, "initial state, comma separated");
        sub->add_option("--i0", common.i0, "initial regime (1-based)");
        sub->add_flag("--check", common.check, "evaluate acceptance thresholds");
    };

    CLI::App* validate = app.add_subcommand("validate", "validate rate matrices");
    add_common(validate);
    CLI::App* simulate = app.add_subcommand("simulate", "dump one trajectory");
    add_common(simulate);
    CLI::App* coupled = app.add_subcommand("coupled", "dump one coupled pair");
    add_common(coupled);
    coupled->add_option("--deltas", study.deltas, "initial offset (first entry used)");
    CLI::App* lp = app.add_subcommand("lp-study", "difference-quotient L^p error");
    add_common(lp);
    lp->add_option("--deltas", study.deltas, "perturbation sizes, decreasing");
    lp->add_option("--p", study.p, "moment order");
    CLI::App* dec = app.add_subcommand("decouple", "decoupling probability vs delta");
    add_common(dec);
    dec->add_option("--deltas", study.deltas, "perturbation sizes, decreasing");
    CLI::App* sup = app.add_subcommand("supdist", "sup distance vs delta");
    add_common(sup);
    sup->add_option("--deltas", study.deltas, "perturbation sizes, decreasing");
    CLI::App* dyn = app.add_subcommand("dynkin", "Dynkin-formula residuals");
    add_common(dyn);
    dyn->add_option("--dt-list", study.dt_list, "time steps to try");
    CLI::App* fel = app.add_subcommand("feller", "Feller gap table");
    add_common(fel);
    fel->add_option("--offsets", study.offsets, "number of 2^-n offsets");
    CLI::App* grad = app.add_subcommand("grad-cm", "change-of-measure value and gradient");
    add_common(grad);
    grad->add_option("--fd-step", study.h, "finite-difference step of the oracle");
    CLI::App* cx = app.add_subcommand("counterexample", "L^1 non-convergence gap");
    add_common(cx);
    cx->add_option("--n", study.n_values, "n values, comma separated");
    CLI::App* lvm = app.add_subcommand("lotka-moments", "Lotka-Volterra moment table");
    add_common(lvm);
    lvm->add_option("--moment", study.moment, "moment order m");
    lvm->add_option("--n-checks", study.n_checks, "rows per horizon");
    CLI::App* lvc = app.add_subcommand("lotka-coupled", "Lotka-Volterra coupled distance");
    add_common(lvc);
    lvc->add_option("--y0", study.y0, "second start, comma separated");
    lvc->add_option("--offsets", study.offsets, "geometric offset levels");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help
            std::cout << app.help() << "\n";
            return 0;
        }
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (validate->parsed()) return run_validate(common, cfg);
        OutputFile out(common.out);
        Outcome outcome;
        if (simulate->parsed()) outcome = run_simulate(common, cfg, out.stream());
        else if (coupled->parsed()) outcome = run_coupled(common, study, cfg, out.stream());
        else if (lp->parsed()) outcome = run_lp_study(common, study, cfg, out.stream());
        else if (dec->parsed()) outcome = run_decouple(common, study, cfg, out.stream());
        else if (sup->parsed()) outcome = run_supdist(common, study, cfg, out.stream());
        else if (dyn->parsed()) outcome = run_dynkin(common, study, cfg, out.stream());
        else if (fel->parsed()) outcome = run_feller(common, study, cfg, out.stream());
        else if (grad->parsed()) outcome = run_grad_cm(common, study, cfg, out.stream());
        else if (cx->parsed()) outcome = run_counterexample(common, study, out.stream());
        else if (lvm->parsed()) outcome = run_lotka_moments(common, study, cfg, out.stream());
        else if (lvc->parsed()) outcome = run_lotka_coupled(common, study, cfg, out.stream());
        if (outcome.divergence_dominated) return 3;
        if (outcome.check_failed) return 1;
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int a = 1; a < argc; ++a) args.emplace_back(argv[a]);
    return run(args);
}

}  // namespace swdiff::cli
