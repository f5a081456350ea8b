#include <doctest.h>

#include "swdiff/counterexample.hpp"
#include "swdiff/models.hpp"
#include "swdiff/sensitivity.hpp"

#include <cmath>

using namespace swdiff;

namespace {

Vec scalar(double v) {
    Vec x(1);
    x[0] = v;
    return x;
}

StudyConfig quick_config(std::vector<double> deltas, double p = 2.0) {
    StudyConfig cfg;
    cfg.T = 1.0;
    cfg.n_steps = 200;
    cfg.n_paths = 1000;
    cfg.deltas = std::move(deltas);
    cfg.p = p;
    cfg.seed = 41;
    cfg.threads = 2;
    return cfg;
}

ModelSpec contracting_model() {
    ModelSpec m = make_smooth_q();
    m.name = "contracting";
    const Mat q = [] {
        Mat out(2, 2);
        out << -0.7, 0.7, 0.7, -0.7;
        return out;
    }();
    m.rates = [q](const Vec&) -> Mat { return q; };
    m.rates_jac = [](const Vec&) -> std::vector<Mat> { return {Mat::Zero(2, 2)}; };
    m.drift = [](const Vec& x, int) -> Vec { return -x; };
    m.drift_jac = [](const Vec&, int) -> Mat { return -Mat::Ones(1, 1); };
    m.diffusion = [](const Vec&, int) -> Mat {
        Mat s(1, 1);
        s << 0.3;
        return s;
    };
    m.diffusion_jac = [](const Vec&, int) -> std::vector<Mat> { return {Mat::Zero(1, 1)}; };
    return m;
}

}  // namespace

TEST_CASE("lp study: exactly linear deterministic flow has zero error") {
    const ModelSpec m = make_markovian_linear({{"m0", 1}, {"a1", 0.5}, {"s1", 0.0}});
    const StudyConfig cfg = quick_config({1e-1, 1e-2});
    const StudyReport report = lp_error_study(m, scalar(1.0), 1, cfg);
    for (const auto& row : report.rows) CHECK(row.est.mean <= 1e-20);
}

TEST_CASE("lp study: markovian smooth model error decays") {
    const ModelSpec m = make_markovian_smooth();
    const StudyConfig cfg = quick_config({1e-1, 1e-2, 1e-3});
    const StudyReport report = lp_error_study(m, scalar(0.5), 1, cfg);
    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[1].est.mean < report.rows[0].est.mean);
    CHECK(report.rows[2].est.mean < report.rows[1].est.mean);
    CHECK(report.rows[2].est.mean <= 0.1 * report.rows[0].est.mean);
    REQUIRE(report.fit.has_value());
    CHECK(report.fit->slope > 1.0);  // mean-square differentiability: order ~ delta^2
}

TEST_CASE("lp study: lipschitz state-dependent rates, p below lambda") {
    const ModelSpec m = make_smooth_q();
    StudyConfig cfg = quick_config({1e-1, 1e-2, 1e-3}, 0.5);
    cfg.n_paths = 4000;
    const StudyReport report = lp_error_study(m, scalar(0.0), 1, cfg);
    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[1].est.mean < report.rows[0].est.mean);
    CHECK(report.rows[2].est.mean < report.rows[1].est.mean);
    CHECK(report.notes.empty());  // p = 0.5 < lambda = 1: no warning
}

TEST_CASE("lp study warns when p is not below the declared exponent") {
    const ModelSpec m = make_holder_rate();  // lambda = 0.5
    StudyConfig cfg = quick_config({1e-1, 1e-2}, 1.0);
    cfg.n_paths = 200;
    const StudyReport report = lp_error_study(m, scalar(0.0), 1, cfg);
    REQUIRE_FALSE(report.notes.empty());
    CHECK(report.notes.front().find("warning") != std::string::npos);
}

TEST_CASE("decoupling study: markovian reduction is exactly zero") {
    const ModelSpec m = make_markovian_smooth();
    const StudyConfig cfg = quick_config({1e-1, 1e-2});
    const StudyReport report = decoupling_probability_study(m, scalar(0.2), 1, cfg);
    for (const auto& row : report.rows) CHECK(row.est.mean == 0.0);
    CHECK_FALSE(report.fit.has_value());
    bool found = false;
    for (const auto& note : report.notes) found = found || note.find("Markovian") != std::string::npos;
    CHECK(found);
}

TEST_CASE("decoupling study: counterexample closed form") {
    const ModelSpec m = cx_model();
    StudyConfig cfg = quick_config({0.1});
    cfg.n_paths = 20000;
    cfg.n_steps = 100;
    const StudyReport report = decoupling_probability_study(m, scalar(1.0), 1, cfg);
    const double exact = 0.060648;
    CHECK(std::abs(report.rows[0].est.mean - exact) <= 3.0 * report.rows[0].est.stderror);
}

TEST_CASE("decoupling study: holder exponent recovered") {
    const ModelSpec m = make_holder_rate();
    StudyConfig cfg = quick_config({1e-1, 1e-2, 1e-3});
    cfg.n_paths = 8000;
    cfg.n_steps = 50;
    const StudyReport report = decoupling_probability_study(m, scalar(0.0), 1, cfg);
    REQUIRE(report.fit.has_value());
    CHECK(report.fit->slope >= 0.35);
    CHECK(report.fit->slope <= 0.7);
}

TEST_CASE("decoupling study: sparse-event deltas are excluded from the fit") {
    const ModelSpec m = make_holder_rate();
    StudyConfig cfg = quick_config({1e-1, 1e-7});
    cfg.n_paths = 500;
    cfg.n_steps = 20;
    const StudyReport report = decoupling_probability_study(m, scalar(0.0), 1, cfg);
    bool excluded = false;
    for (const auto& note : report.notes) excluded = excluded || note.find("excluded") != std::string::npos;
    CHECK(excluded);
    CHECK_FALSE(report.fit.has_value());  // only one usable level
}

TEST_CASE("sup distance: frozen flow is exact") {
    ModelSpec m;
    m.name = "frozen";
    m.r = 1;
    m.d = 1;
    m.regimes = RegimeSpace(1);
    m.rate_bound = 0.5;
    m.drift = [](const Vec&, int) -> Vec { return Vec::Zero(1); };
    m.diffusion = [](const Vec&, int) -> Mat { return Mat::Zero(1, 1); };
    m.rates = [](const Vec&) -> Mat { return Mat::Zero(1, 1); };
    StudyConfig cfg = quick_config({1e-1, 1e-2, 1e-3});
    cfg.n_paths = 100;
    const StudyReport report = sup_distance_study(m, scalar(0.0), 1, cfg);
    for (std::size_t k = 0; k < cfg.deltas.size(); ++k)
        CHECK(report.rows[k].est.mean == doctest::Approx(cfg.deltas[k]).epsilon(1e-14));
    REQUIRE(report.fit.has_value());
    CHECK(report.fit->slope == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(report.fit->intercept == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("sup distance: contracting drift keeps slope one") {
    const ModelSpec m = contracting_model();
    StudyConfig cfg = quick_config({1e-1, 1e-2, 1e-3});
    cfg.n_paths = 2000;
    const StudyReport report = sup_distance_study(m, scalar(0.3), 1, cfg);
    REQUIRE(report.fit.has_value());
    CHECK(std::abs(report.fit->slope - 1.0) <= 0.1);
}

TEST_CASE("sup distance: lipschitz state-dependent rates") {
    const ModelSpec m = make_smooth_q();
    StudyConfig cfg = quick_config({1e-1, 1e-2, 1e-3});
    cfg.n_paths = 4000;
    const StudyReport report = sup_distance_study(m, scalar(0.0), 1, cfg);
    REQUIRE(report.fit.has_value());
    CHECK(report.fit->slope >= 0.85);
}

TEST_CASE("dynkin residual: quadratic test function with unit noise") {
    const ModelSpec m = make_brownian_switch();
    const auto f = [](const Vec& x, int) { return x[0] * x[0]; };
    const auto fg = [](const Vec& x, int) -> Vec { return 2.0 * x; };
    const auto fh = [](const Vec&, int) -> Mat { return 2.0 * Mat::Ones(1, 1); };
    const auto rows = dynkin_residual(m, f, fg, fh, scalar(0.0), 1, 1.0, {1e-2, 5e-3}, 20000, 43, 2);
    for (const auto& row : rows) CHECK(row.residual <= 3.0 * row.stderror + 2.0 * row.dt);
}

TEST_CASE("dynkin: two-state chain closed form and weak order") {
    const double q = 1.0, T = 1.0;
    const ModelSpec m = make_brownian_switch({{"q", q}});
    const double closed = 0.5 * (1.0 - std::exp(-2.0 * q * T));
    // exact law of the thinning scheme over n steps
    auto scheme = [&](int n_steps) {
        const double stay = 2.0 * std::exp(-q * T / n_steps) - 1.0;
        return 0.5 * (1.0 - std::pow(stay, n_steps));
    };
    for (int n_steps : {100, 200}) {
        const McEstimate est = mc_estimate(
            [&](const PathContext& ctx) -> std::optional<double> {
                NoiseStream stream = ctx.stream();
                PathStepper st(m, scalar(0.0), 1, TimeGrid(T, n_steps));
                for (int k = 0; k < n_steps; ++k) st.step(stream);
                return st.alpha() == 2 ? 1.0 : 0.0;
            },
            40000, 44, 2);
        CHECK(std::abs(est.mean - closed) <= 3.0 * est.stderror + std::abs(scheme(n_steps) - closed));
        // the scheme law itself is reproduced much more tightly
        CHECK(std::abs(est.mean - scheme(n_steps)) <= 3.0 * est.stderror);
    }
    // deterministic part halves with dt (weak order one)
    const double d1 = std::abs(scheme(100) - closed);
    const double d2 = std::abs(scheme(200) - closed);
    CHECK(d1 / d2 >= 1.5);
    CHECK(d1 / d2 <= 3.0);
}

TEST_CASE("feller gap: identical points give exactly zero") {
    const ModelSpec m = make_smooth_q();
    const Vec x = scalar(0.4);
    const auto f = [](const Vec& v, int) { return std::tanh(v[0]); };
    const auto rows = feller_gap(m, f, x, {x, x}, 1, 1.0, 100, 500, 45);
    for (const auto& row : rows) CHECK(row.gap == 0.0);
}

TEST_CASE("feller gap: linear diffusion obeys the pathwise bound") {
    const ModelSpec m = make_markovian_linear({{"m0", 1}, {"a1", 0.5}, {"s1", 0.3}});
    const Vec x = scalar(0.5);
    const auto f = [](const Vec& v, int) { return std::max(-1.0, std::min(1.0, v[0])); };
    std::vector<Vec> xs;
    for (int n = 1; n <= 4; ++n) xs.push_back(scalar(0.5 + std::pow(2.0, -n)));
    const auto rows = feller_gap(m, f, x, xs, 1, 1.0, 200, 2000, 46);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const double bound = std::exp(0.5) * rows[k].offset + 3.0 * rows[k].stderror;
        CHECK(rows[k].gap <= bound * (1.0 + 1e-9));
    }
}

TEST_CASE("feller gap: truncated model agrees inside the cutoff") {
    const ModelSpec m = make_cubic_well();
    const ModelSpec trunc = truncate_model(m, 4.0, 1.0);
    const Vec x = scalar(0.5);
    const auto f = [](const Vec& v, int) { return std::tanh(v[0] / 4.0); };
    std::vector<Vec> xs = {scalar(0.75), scalar(0.5 + 1.0 / 64.0)};
    const auto raw = feller_gap(m, f, x, xs, 1, 1.0, 100, 2000, 47);
    const auto cut = feller_gap(trunc, f, x, xs, 1, 1.0, 100, 2000, 47);
    for (std::size_t k = 0; k < raw.size(); ++k) {
        // cubic well confines paths well inside |x| = 4: escape mass ~ 0
        CHECK(std::abs(raw[k].gap - cut[k].gap) <=
              3.0 * (raw[k].stderror + cut[k].stderror) + 1e-6);
    }
}

TEST_CASE("study config validation") {
    StudyConfig cfg = quick_config({1e-1, 1e-2});
    cfg.n_paths = 10;
    CHECK_THROWS(cfg.validate(1));
    cfg = quick_config({1e-2, 1e-1});  // increasing: rejected
    CHECK_THROWS(cfg.validate(1));
    cfg = quick_config({1e-1, 1e-2});
    cfg.p = 0.0;
    CHECK_THROWS(cfg.validate(1));
}
