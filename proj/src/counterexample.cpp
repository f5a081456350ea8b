#include "swdiff/counterexample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace swdiff {
namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<std::size_t>(m), 0.0);
    weights.assign(static_cast<std::size_t>(m), 0.0);
    const int half = (m + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < m; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = m * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[static_cast<std::size_t>(i)] = -x;
        nodes[static_cast<std::size_t>(m - 1 - i)] = x;
        weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[static_cast<std::size_t>(m - 1 - i)] = weights[static_cast<std::size_t>(i)];
    }
}

struct Axis {
    std::vector<double> y;  // quantiles of the exponential law
    std::vector<double> w;  // quadrature weights in probability space
};

// Panels in u-space split at the image of y = T; tail truncated at
// u = 1 - 1e-11 (tail mass below 1e-10 over the three axes).
Axis build_axis(double rate, double T, int m) {
    std::vector<double> gx, gw;
    gauss_legendre(m, gx, gw);
    Axis axis;
    const double uT = -std::expm1(-rate * T);
    const double edges[3] = {0.0, std::min(uT, 1.0 - 1e-11), 1.0 - 1e-11};
    for (int p = 0; p < 2; ++p) {
        const double a = edges[p], b = edges[p + 1];
        if (!(b > a)) continue;
        for (int i = 0; i < m; ++i) {
            const double u = 0.5 * (b - a) * gx[static_cast<std::size_t>(i)] + 0.5 * (a + b);
            axis.y.push_back(-std::log1p(-u) / rate);
            axis.w.push_back(0.5 * (b - a) * gw[static_cast<std::size_t>(i)]);
        }
    }
    return axis;
}

double oracle_pass(int n, double T, int m) {
    const Axis a0 = build_axis(1.0, T, m);
    const Axis a1 = build_axis(1.0 / n, T, m);
    const Axis a2 = build_axis(1.0 / n, T, m);
    double total = 0.0;
    for (std::size_t i0 = 0; i0 < a0.y.size(); ++i0) {
        for (std::size_t i1 = 0; i1 < a1.y.size(); ++i1) {
            const double w01 = a0.w[i0] * a1.w[i1];
            for (std::size_t i2 = 0; i2 < a2.y.size(); ++i2) {
                const auto [z1, z2] = cx_quotients({a0.y[i0], a1.y[i1], a2.y[i2]}, n, T);
                total += std::abs(z2 - z1) * w01 * a2.w[i2];
            }
        }
    }
    return total;
}

}  // namespace

CxDraw cx_sample(int n, NoiseStream& stream) {
    if (n < 1) throw std::invalid_argument("cx_sample: n must be >= 1");
    CxDraw draw;
    draw.y0 = stream.exponential(1.0);
    draw.y1 = stream.exponential(1.0 / n);
    draw.y2 = stream.exponential(1.0 / n);
    return draw;
}

std::pair<double, double> cx_quotients(const CxDraw& draw, int n, double T) {
    if (!(T > 0.0)) throw std::invalid_argument("cx_quotients: T must be positive");
    const double t1 = std::min(T, draw.tau_1());
    const double t1n = std::min(T, draw.tau_1_1n());
    const double t2n = std::min(T, draw.tau_1_2n());
    const double z1 = 1.0 + (t1 - t1n) * static_cast<double>(n);
    const double z2 = 1.0 + (t1 - t2n) * (static_cast<double>(n) / 2.0);
    return {z1, z2};
}

McEstimate cx_gap_estimate(int n, double T, std::int64_t n_paths, std::uint64_t seed, int threads) {
    return mc_estimate(
        [n, T](const PathContext& ctx) -> std::optional<double> {
            NoiseStream stream = ctx.stream();
            const CxDraw draw = cx_sample(n, stream);
            const auto [z1, z2] = cx_quotients(draw, n, T);
            return std::abs(z2 - z1);
        },
        n_paths, seed, threads);
}

double cx_lower_bound(int n, double T) {
    const double x = static_cast<double>(n);
    return (T / 6.0) * (-std::expm1(-(1.0 + 2.0 / x) * T / 3.0)) *
           (std::exp(-2.0 * T / 3.0) - std::exp(-T));
}

double cx_gap_oracle(int n, double T) {
    double prev = oracle_pass(n, T, 32);
    for (int m = 64; m <= 256; m *= 2) {
        const double cur = oracle_pass(n, T, m);
        if (std::abs(cur - prev) <= 1e-4 * std::abs(cur)) return cur;
        prev = cur;
    }
    throw std::runtime_error("cx_gap_oracle: quadrature did not converge to 1e-4 relative");
}

double cx_rate_fn(double x) {
    if (x >= 1.0 && x <= 2.0) return x;
    if (x <= 0.5 || x >= 2.5) return 0.0;
    // quintic Hermite blends matching value/slope/curvature at the ends
    if (x < 1.0) {
        const double s = (x - 0.5) / 0.5;
        const double s3 = s * s * s;
        // collapsed form of the Hermite blend; positive on (0, 1)
        return std::max(0.0, s3 * (8.0 + s * (-11.5 + 4.5 * s)));
    }
    const double s = (x - 2.0) / 0.5;
    const double h0 = 1.0 + s * s * s * (-10.0 + s * (15.0 - 6.0 * s));
    const double h1 = s * (1.0 + s * s * (-6.0 + s * (8.0 - 3.0 * s)));
    return std::max(0.0, 2.0 * h0 + 0.5 * h1);
}

ModelSpec cx_model() {
    ModelSpec m;
    m.name = "counterexample";
    m.r = 1;
    m.d = 1;
    m.regimes = RegimeSpace(2);
    m.rate_bound = 2.5;  // max of cx_rate_fn is about 2.03 (overshoot of the right blend)
    m.holder_exponent = 1.0;
    m.drift = [](const Vec&, int i) -> Vec {
        Vec b(1);
        b[0] = (i == 2) ? 1.0 : 0.0;
        return b;
    };
    m.diffusion = [](const Vec&, int) -> Mat { return Mat::Zero(1, 1); };
    m.rates = [](const Vec& x) -> Mat {
        const double f = cx_rate_fn(x[0]);
        Mat q(2, 2);
        q << -f, f, 0.0, 0.0;
        return q;
    };
    m.drift_jac = [](const Vec&, int) -> Mat { return Mat::Zero(1, 1); };
    m.diffusion_jac = [](const Vec&, int) -> std::vector<Mat> { return {Mat::Zero(1, 1)}; };
    return m;
}

}  // namespace swdiff
