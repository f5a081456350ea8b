#include "swdiff/models.hpp"

#include "swdiff/counterexample.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace swdiff {
namespace {

class Params {
public:
    Params(const ParamMap& map, std::initializer_list<const char*> known) : map_(map) {
        std::set<std::string> allowed(known.begin(), known.end());
        for (const auto& [key, _] : map) {
            if (!allowed.count(key))
                throw std::invalid_argument("unknown model param: " + key);
        }
    }
    double get(const std::string& key, double fallback) const {
        const auto it = map_.find(key);
        return (it == map_.end()) ? fallback : it->second;
    }

private:
    const ParamMap& map_;
};

Mat const_rates_2(double q12, double q21) {
    Mat q(2, 2);
    q << -q12, q12, q21, -q21;
    return q;
}

}  // namespace

ModelSpec make_markovian_linear(const ParamMap& params) {
    const Params p(params, {"m0", "a1", "a2", "s1", "s2", "q12", "q21"});
    const int m0 = static_cast<int>(p.get("m0", 2));
    if (m0 != 1 && m0 != 2) throw std::invalid_argument("markovian-linear: m0 must be 1 or 2");
    const double a[2] = {p.get("a1", 0.5), p.get("a2", -0.25)};
    const double s[2] = {p.get("s1", 0.2), p.get("s2", 0.3)};
    const double q12 = p.get("q12", 1.0), q21 = p.get("q21", 1.0);
    ModelSpec m;
    m.name = "markovian-linear";
    m.r = 1;
    m.d = 1;
    m.regimes = RegimeSpace(m0);
    m.rate_bound = std::max({q12, q21, 0.5}) + 0.5;
    m.holder_exponent = 1.0;
    m.drift = [a](const Vec& x, int i) -> Vec { return a[i - 1] * x; };
    m.diffusion = [s](const Vec& x, int i) -> Mat {
        Mat out(1, 1);
        out(0, 0) = s[i - 1] * x[0];
        return out;
    };
    if (m0 == 1) {
        m.rates = [](const Vec&) -> Mat { return Mat::Zero(1, 1); };
    } else {
        const Mat q = const_rates_2(q12, q21);
        m.rates = [q](const Vec&) -> Mat { return q; };
        m.rates_jac = [](const Vec&) -> std::vector<Mat> { return {Mat::Zero(2, 2)}; };
    }
    m.drift_jac = [a](const Vec&, int i) -> Mat {
        Mat out(1, 1);
        out(0, 0) = a[i - 1];
        return out;
    };
    m.diffusion_jac = [s](const Vec&, int i) -> std::vector<Mat> {
        Mat out(1, 1);
        out(0, 0) = s[i - 1];
        return {out};
    };
    return m;
}

ModelSpec make_markovian_smooth(const ParamMap& params) {
    const Params p(params, {"kappa1", "kappa2", "c1", "c2", "s1", "s2", "u1", "u2", "q12", "q21"});
    const double kappa[2] = {p.get("kappa1", 0.8), p.get("kappa2", 0.5)};
    const double c[2] = {p.get("c1", 0.6), p.get("c2", -0.4)};
    const double s[2] = {p.get("s1", 0.4), p.get("s2", 0.5)};
    const double u[2] = {p.get("u1", 0.2), p.get("u2", 0.2)};
    const Mat q = const_rates_2(p.get("q12", 1.0), p.get("q21", 1.0));
    ModelSpec m;
    m.name = "markovian-smooth";
    m.r = 1;
    m.d = 1;
    m.regimes = RegimeSpace(2);
    m.rate_bound = std::max(q(0, 1), q(1, 0)) + 0.5;
    m.holder_exponent = 1.0;
    m.drift = [kappa, c](const Vec& x, int i) -> Vec {
        Vec out(1);
        out[0] = -kappa[i - 1] * x[0] + c[i - 1] * std::sin(x[0]);
        return out;
    };
    m.diffusion = [s, u](const Vec& x, int i) -> Mat {
        Mat out(1, 1);
        out(0, 0) = s[i - 1] + u[i - 1] * std::cos(x[0]);
        return out;
    };
    m.rates = [q](const Vec&) -> Mat { return q; };
    m.rates_jac = [](const Vec&) -> std::vector<Mat> { return {Mat::Zero(2, 2)}; };
    m.drift_jac = [kappa, c](const Vec& x, int i) -> Mat {
        Mat out(1, 1);
        out(0, 0) = -kappa[i - 1] + c[i - 1] * std::cos(x[0]);
        return out;
    };
    m.diffusion_jac = [u](const Vec& x, int i) -> std::vector<Mat> {
        Mat out(1, 1);
        out(0, 0) = -u[i - 1] * std::sin(x[0]);
        return {out};
    };
    return m;
}

ModelSpec make_smooth_q(const ParamMap& params) {
    const Params p(params, {"c1", "c2", "s1", "s2"});
    const double c[2] = {p.get("c1", 0.0), p.get("c2", 0.5)};
    const double s[2] = {p.get("s1", 0.3), p.get("s2", 0.4)};
    ModelSpec m;
    m.name = "smooth-q";
    m.r = 1;
    m.d = 1;
    m.regimes = RegimeSpace(2);
    m.rate_bound = 1.2;
    m.holder_exponent = 1.0;
    m.drift = [c](const Vec& x, int i) -> Vec {
        Vec out(1);
        out[0] = -x[0] + c[i - 1];
        return out;
    };
    m.diffusion = [s](const Vec&, int i) -> Mat {
        Mat out(1, 1);
        out(0, 0) = s[i - 1];
        return out;
    };
    m.rates = [](const Vec& x) -> Mat {
        const double th = std::tanh(x[0]);
        return const_rates_2(0.6 + 0.4 * th, 0.6 - 0.4 * th);
    };
    m.rates_jac = [](const Vec& x) -> std::vector<Mat> {
        const double th = std::tanh(x[0]);
        const double dq = 0.4 * (1.0 - th * th);  // q12' = dq, q21' = -dq
        Mat j(2, 2);
        j << -dq, dq, -dq, dq;
        return {j};
    };
    m.drift_jac = [](const Vec&, int) -> Mat {
        Mat out(1, 1);
        out(0, 0) = -1.0;
        return out;
    };
    m.diffusion_jac = [](const Vec&, int) -> std::vector<Mat> { return {Mat::Zero(1, 1)}; };
    return m;
}

ModelSpec make_holder_rate(const ParamMap& params) {
    const Params p(params, {"lambda", "c", "eps", "xstar"});
    const double lambda = p.get("lambda", 0.5);
    const double c = p.get("c", 1.0);
    const double eps = p.get("eps", 0.05);
    const double xstar = p.get("xstar", 0.0);
    if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("holder-rate: lambda in (0,1]");
    ModelSpec m;
    m.name = "holder-rate";
    m.r = 1;
    m.d = 1;
    m.regimes = RegimeSpace(2);
    m.rate_bound = c + eps + 0.1;
    m.holder_exponent = lambda;
    m.drift = [](const Vec&, int) -> Vec { return Vec::Zero(1); };
    m.diffusion = [](const Vec&, int) -> Mat { return Mat::Zero(1, 1); };
    m.rates = [lambda, c, eps, xstar](const Vec& x) -> Mat {
        const double q = c * std::min(std::pow(std::abs(x[0] - xstar), lambda), 1.0) + eps;
        return const_rates_2(q, q);
    };
    m.drift_jac = [](const Vec&, int) -> Mat { return Mat::Zero(1, 1); };
    m.diffusion_jac = [](const Vec&, int) -> std::vector<Mat> { return {Mat::Zero(1, 1)}; };
    return m;
}

ModelSpec make_brownian_switch(const ParamMap& params) {
    const Params p(params, {"q"});
    const double q = p.get("q", 1.0);
    ModelSpec m;
    m.name = "brownian";
    m.r = 1;
    m.d = 1;
    m.regimes = RegimeSpace(2);
    m.rate_bound = q + 0.5;
    m.holder_exponent = 1.0;
    m.drift = [](const Vec&, int) -> Vec { return Vec::Zero(1); };
    m.diffusion = [](const Vec&, int) -> Mat { return Mat::Ones(1, 1); };
    const Mat qm = const_rates_2(q, q);
    m.rates = [qm](const Vec&) -> Mat { return qm; };
    m.rates_jac = [](const Vec&) -> std::vector<Mat> { return {Mat::Zero(2, 2)}; };
    m.drift_jac = [](const Vec&, int) -> Mat { return Mat::Zero(1, 1); };
    m.diffusion_jac = [](const Vec&, int) -> std::vector<Mat> { return {Mat::Zero(1, 1)}; };
    return m;
}

ModelSpec make_cubic_well(const ParamMap& params) {
    const Params p(params, {"a1", "a2", "s"});
    const double a[2] = {p.get("a1", 1.0), p.get("a2", 0.5)};
    const double s = p.get("s", 0.5);
    ModelSpec m = make_smooth_q({});
    m.name = "cubic-well";
    m.drift = [a](const Vec& x, int i) -> Vec {
        Vec out(1);
        out[0] = a[i - 1] * x[0] - x[0] * x[0] * x[0];
        return out;
    };
    m.drift_jac = [a](const Vec& x, int i) -> Mat {
        Mat out(1, 1);
        out(0, 0) = a[i - 1] - 3.0 * x[0] * x[0];
        return out;
    };
    m.diffusion = [s](const Vec&, int) -> Mat {
        Mat out(1, 1);
        out(0, 0) = s;
        return out;
    };
    m.diffusion_jac = [](const Vec&, int) -> std::vector<Mat> { return {Mat::Zero(1, 1)}; };
    return m;
}

Mat RateTable::operator()(const Vec& x) const {
    const double s = x[0];
    if (knots.empty()) throw std::invalid_argument("RateTable: empty");
    if (s <= knots.front()) return values.front();
    if (s >= knots.back()) return values.back();
    std::size_t hi = 1;
    while (knots[hi] < s) ++hi;
    const double w = (s - knots[hi - 1]) / (knots[hi] - knots[hi - 1]);
    return (1.0 - w) * values[hi - 1] + w * values[hi];
}

LVSpec default_lv_spec() {
    LVSpec spec;
    spec.r = 2;
    spec.regimes = RegimeSpace(2);
    Vec b1(2), b2(2);
    b1 << 1.0, 0.8;
    b2 << 0.6, 1.1;
    spec.growth = {b1, b2};
    Mat A1(2, 2), A2(2, 2);
    A1 << 1.0, 0.1, 0.2, 0.9;
    A2 << 0.8, 0.15, 0.1, 1.2;
    spec.interaction = {A1, A2};
    Vec s1(2), s2(2);
    s1 << 0.2, 0.25;
    s2 << 0.3, 0.2;
    spec.noise = {s1, s2};
    const Mat q = const_rates_2(0.8, 0.6);
    spec.rates = [q](const Vec&) -> Mat { return q; };
    spec.rate_bound = 1.0;
    return spec;
}

std::function<Mat(const Vec&)> make_lv_rates(const std::string& family, const Mat& base,
                                             const RateTable& table) {
    if (family == "constant") {
        return [base](const Vec&) -> Mat { return base; };
    }
    if (family == "logistic") {
        return [base](const Vec& x) -> Mat {
            const double factor = 0.25 + 0.75 / (1.0 + x.cwiseAbs().sum());
            Mat q = base * factor;
            return q;
        };
    }
    if (family == "table") {
        return [table](const Vec& x) -> Mat {
            Vec s(1);
            s[0] = x.cwiseAbs().sum();
            return table(s);
        };
    }
    throw std::invalid_argument("unknown rate family: " + family);
}

ModelSpec make_builtin_model(const std::string& name, const ParamMap& params) {
    if (name == "markovian-linear") return make_markovian_linear(params);
    if (name == "markovian-smooth") return make_markovian_smooth(params);
    if (name == "smooth-q") return make_smooth_q(params);
    if (name == "holder-rate") return make_holder_rate(params);
    if (name == "brownian") return make_brownian_switch(params);
    if (name == "cubic-well") return make_cubic_well(params);
    if (name == "counterexample") {
        if (!params.empty()) throw std::invalid_argument("counterexample model takes no params");
        return cx_model();
    }
    throw std::invalid_argument("unknown model: " + name);
}

}  // namespace swdiff
