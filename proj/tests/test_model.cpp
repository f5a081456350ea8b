#include <doctest.h>

#include "swdiff/model.hpp"
#include "swdiff/models.hpp"
#include "swdiff/rng.hpp"

#include <cmath>

using namespace swdiff;

namespace {

Vec scalar(double v) {
    Vec x(1);
    x[0] = v;
    return x;
}

// random conservative rate function of x built from sigmoids, |q_ij| < bound
ModelSpec random_rate_model(int m0, NoiseStream& s, double bound = 2.0) {
    Mat base(m0, m0), freq(m0, m0), phase(m0, m0);
    for (int i = 0; i < m0; ++i) {
        for (int j = 0; j < m0; ++j) {
            base(i, j) = 0.1 + (bound - 0.3) * s.uniform01();
            freq(i, j) = 2.0 * s.uniform01() - 1.0;
            phase(i, j) = 3.0 * s.uniform01();
        }
    }
    ModelSpec m;
    m.name = "random-rates";
    m.r = 1;
    m.d = 1;
    m.regimes = RegimeSpace(m0);
    m.rate_bound = bound;
    m.drift = [](const Vec&, int) -> Vec { return Vec::Zero(1); };
    m.diffusion = [](const Vec&, int) -> Mat { return Mat::Zero(1, 1); };
    m.rates = [m0, base, freq, phase](const Vec& x) -> Mat {
        Mat q = Mat::Zero(m0, m0);
        for (int i = 0; i < m0; ++i) {
            double row = 0.0;
            for (int j = 0; j < m0; ++j) {
                if (i == j) continue;
                q(i, j) = base(i, j) / (1.0 + std::exp(-(freq(i, j) * x[0] + phase(i, j))));
                row += q(i, j);
            }
            q(i, i) = -row;
        }
        return q;
    };
    return m;
}

}  // namespace

TEST_CASE("validate_rate_matrix") {
    Mat ok(2, 2);
    ok << -0.5, 0.5, 0.3, -0.3;
    CHECK(validate_rate_matrix(ok, 0.0).ok);

    Mat bad(2, 2);
    bad << -0.5, 0.4, 0.3, -0.3;
    const RateValidation report = validate_rate_matrix(bad, 1e-12);
    CHECK_FALSE(report.ok);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations.front().find("row 1") != std::string::npos);

    CHECK(validate_rate_matrix(Mat::Zero(3, 3), 0.0).ok);

    Mat negative(2, 2);
    negative << 0.1, -0.1, 0.2, -0.2;
    CHECK_FALSE(validate_rate_matrix(negative, 1e-12).ok);

    CHECK_THROWS(validate_rate_matrix(Mat::Zero(2, 3), 0.0));
}

TEST_CASE("build_partition matches the displayed formula") {
    ModelSpec m;
    m.r = 1;
    m.d = 1;
    m.regimes = RegimeSpace(2);
    m.rate_bound = 2.0;
    m.rates = [](const Vec&) -> Mat {
        Mat q(2, 2);
        q << -0.5, 0.5, 0.3, -0.3;
        return q;
    };
    const MarkPartition part = build_partition(m, scalar(0.0));
    REQUIRE(part.entries.size() == 2);
    // Delta_12 = [((1-1)*2+2)*2, ...) = [4, 4.5)
    CHECK(part.entries[0].from == 1);
    CHECK(part.entries[0].to == 2);
    CHECK(part.entries[0].lo == 4.0);
    CHECK(part.entries[0].hi == 4.5);
    // Delta_21 = [((2-1)*2+1)*2, ...) = [6, 6.3)
    CHECK(part.entries[1].from == 2);
    CHECK(part.entries[1].to == 1);
    CHECK(part.entries[1].lo == 6.0);
    CHECK(part.entries[1].hi == doctest::Approx(6.3));

    // zero rate gives an empty interval
    m.rates = [](const Vec&) -> Mat { return Mat::Zero(2, 2); };
    const MarkPartition empty = build_partition(m, scalar(0.0));
    CHECK(empty.entries[0].lo == empty.entries[0].hi);

    // bound violation is a hard error
    m.rates = [](const Vec&) -> Mat {
        Mat q(2, 2);
        q << -2.0, 2.0, 0.0, 0.0;
        return q;
    };
    CHECK_THROWS(build_partition(m, scalar(0.0)));
}

TEST_CASE("eval_h displacement") {
    ModelSpec m;
    m.r = 1;
    m.d = 1;
    m.regimes = RegimeSpace(2);
    m.rate_bound = 2.0;
    m.rates = [](const Vec&) -> Mat {
        Mat q(2, 2);
        q << -0.5, 0.5, 0.3, -0.3;
        return q;
    };
    const MarkPartition part = build_partition(m, scalar(0.0));
    CHECK(eval_h(part, 1, 4.2) == 1);
    CHECK(eval_h(part, 1, 5.0) == 0);
    CHECK(eval_h(part, 2, 6.1) == -1);
    CHECK(eval_h(part, 2, 4.2) == 0);  // z in another row's interval
}

TEST_CASE("partition disjointness and row lengths on random models") {
    NoiseStream s(101, 0);
    for (int rep = 0; rep < 50; ++rep) {
        const int m0 = 2 + static_cast<int>(s.uniform01() * 5);
        const ModelSpec m = random_rate_model(m0, s);
        const Vec x = scalar(4.0 * s.uniform01() - 2.0);
        const MarkPartition part = build_partition(m, x);
        const Mat q = m.rates(x);
        for (std::size_t a = 0; a < part.entries.size(); ++a) {
            for (std::size_t b = a + 1; b < part.entries.size(); ++b) {
                const auto& ia = part.entries[a];
                const auto& ib = part.entries[b];
                CHECK((ia.hi <= ib.lo || ib.hi <= ia.lo));
            }
        }
        for (int i = 1; i <= m0; ++i) {
            double row_len = 0.0, row_sum = 0.0;
            for (const auto& e : part.entries) {
                if (e.from == i) row_len += e.hi - e.lo;
            }
            for (int j = 1; j <= m0; ++j) {
                if (j != i) row_sum += q(i - 1, j - 1);
            }
            // (hi - lo) reconstructs q against offsets of size m0^2 M, so a
            // few ulps of that scale accumulate
            CHECK(row_len == doctest::Approx(row_sum).epsilon(1e-12));
        }
        // eval_h agrees with the interval-free lookup
        for (int probe = 0; probe < 20; ++probe) {
            const double z = s.uniform01() * m.mark_space();
            const int i = 1 + static_cast<int>(s.uniform01() * m0);
            const int target = mark_target(q, m0, m.rate_bound, i, z);
            CHECK(eval_h(part, i, z) == target - i);
        }
    }
}

TEST_CASE("rho examples") {
    NoiseStream s(7, 0);
    ModelSpec m;
    m.r = 1;
    m.d = 1;
    m.regimes = RegimeSpace(2);
    m.rate_bound = 2.0;
    m.rates = [](const Vec& x) -> Mat {
        Mat q(2, 2);
        const double v = (x[0] > 0.0) ? 0.5 : 0.3;
        q << -v, v, 0.0, 0.0;
        return q;
    };
    CHECK(rho(m, scalar(1.0), scalar(-1.0), 1) == doctest::Approx(0.2));
    CHECK(rho(m, scalar(1.0), scalar(1.0), 1) == 0.0);

    // brute-force oracle on random 4x4 conservative rates
    const ModelSpec rnd = random_rate_model(4, s);
    for (int rep = 0; rep < 20; ++rep) {
        const Vec x = scalar(2.0 * s.uniform01() - 1.0);
        const Vec xt = scalar(2.0 * s.uniform01() - 1.0);
        const int k = 1 + static_cast<int>(s.uniform01() * 4);
        const Mat qa = rnd.rates(x), qb = rnd.rates(xt);
        double brute = 0.0;
        for (int j = 1; j <= 4; ++j) {
            if (j != k) brute += std::abs(qa(k - 1, j - 1) - qb(k - 1, j - 1));
        }
        CHECK(rho(rnd, x, xt, k) == doctest::Approx(brute).epsilon(1e-15));
    }
}

TEST_CASE("coupled_rates basic example") {
    ModelSpec m;
    m.r = 1;
    m.d = 1;
    m.regimes = RegimeSpace(2);
    m.rate_bound = 2.0;
    m.rates = [](const Vec& x) -> Mat {
        Mat q(2, 2);
        const double v = (x[0] > 0.0) ? 0.5 : 0.3;
        q << -v, v, 0.0, 0.0;
        return q;
    };
    // q12(x)=0.5, q12(xt)=0.3 from (1,1): {(2,1): 0.2, (2,2): 0.3}
    const auto moves = coupled_rates(m, scalar(1.0), scalar(-1.0), 1, 1);
    REQUIRE(moves.size() == 2);
    CHECK(moves[0].to_first == 2);
    CHECK(moves[0].to_second == 1);
    CHECK(moves[0].rate == doctest::Approx(0.2));
    CHECK(moves[1].to_first == 2);
    CHECK(moves[1].to_second == 2);
    CHECK(moves[1].rate == doctest::Approx(0.3));
}

TEST_CASE("coupled_rates diagonal moves only at equal arguments") {
    NoiseStream s(13, 0);
    const ModelSpec m = random_rate_model(3, s);
    const Vec x = scalar(0.4);
    const auto moves = coupled_rates(m, x, x, 2, 2);
    const Mat q = m.rates(x);
    for (const auto& mv : moves) {
        CHECK(mv.to_first == mv.to_second);
        CHECK(mv.rate == doctest::Approx(q(1, mv.to_first - 1)));
    }
}

TEST_CASE("coupling marginal consistency and decoupling identity") {
    NoiseStream s(877, 0);
    for (int rep = 0; rep < 200; ++rep) {
        const int m0 = 2 + static_cast<int>(s.uniform01() * 5);
        const ModelSpec m = random_rate_model(m0, s);
        const Vec x = scalar(3.0 * s.uniform01() - 1.5);
        const Vec xt = scalar(3.0 * s.uniform01() - 1.5);
        const int k = 1 + static_cast<int>(s.uniform01() * m0);
        const int l = 1 + static_cast<int>(s.uniform01() * m0);
        const Mat qx = m.rates(x), qxt = m.rates(xt);
        const auto moves = coupled_rates(m, x, xt, k, l);
        for (const auto& mv : moves) CHECK(mv.rate > 0.0);
        // first marginal: moves sending k -> j sum to q_kj(x)
        for (int j = 1; j <= m0; ++j) {
            if (j == k) continue;
            double sum = 0.0;
            for (const auto& mv : moves) {
                if (mv.to_first == j) sum += mv.rate;
            }
            CHECK(std::abs(sum - qx(k - 1, j - 1)) <= 1e-12);
        }
        // second marginal
        for (int j = 1; j <= m0; ++j) {
            if (j == l) continue;
            double sum = 0.0;
            for (const auto& mv : moves) {
                if (mv.to_second == j) sum += mv.rate;
            }
            CHECK(std::abs(sum - qxt(l - 1, j - 1)) <= 1e-12);
        }
        // decoupling identity at k == l
        const auto eq_moves = coupled_rates(m, x, xt, k, k);
        double unequal = 0.0;
        for (const auto& mv : eq_moves) {
            if (mv.to_first != mv.to_second) unequal += mv.rate;
        }
        CHECK(std::abs(unequal - rho(m, x, xt, k)) <= 1e-12);
    }
}

TEST_CASE("apply_generator") {
    // r=1, f = x^2, b = 0, sigma = 1: only the trace term survives
    ModelSpec m;
    m.r = 1;
    m.d = 1;
    m.regimes = RegimeSpace(2);
    m.rate_bound = 1.0;
    m.drift = [](const Vec&, int) -> Vec { return Vec::Zero(1); };
    m.diffusion = [](const Vec&, int) -> Mat { return Mat::Ones(1, 1); };
    m.rates = [](const Vec&) -> Mat {
        Mat q(2, 2);
        q << -0.5, 0.5, 0.5, -0.5;
        return q;
    };
    const auto f2 = [](const Vec& x, int) { return x[0] * x[0]; };
    const auto f2g = [](const Vec& x, int) -> Vec { return 2.0 * x; };
    const auto f2h = [](const Vec&, int) -> Mat { return 2.0 * Mat::Ones(1, 1); };
    CHECK(apply_generator(m, f2, f2g, f2h, {scalar(0.7), 1}) == doctest::Approx(1.0));

    // linear test function picks out the drift
    ModelSpec mc = m;
    mc.drift = [](const Vec&, int) -> Vec {
        Vec b(1);
        b[0] = 2.5;
        return b;
    };
    const auto f1 = [](const Vec& x, int) { return x[0]; };
    const auto f1g = [](const Vec&, int) -> Vec { return Vec::Ones(1); };
    const auto f1h = [](const Vec&, int) -> Mat { return Mat::Zero(1, 1); };
    CHECK(apply_generator(mc, f1, f1g, f1h, {scalar(0.0), 2}) == doctest::Approx(2.5));

    // f(x,i) = i: the Q term alone, explicit summation
    const auto fi = [](const Vec&, int i) { return static_cast<double>(i); };
    const auto fig = [](const Vec&, int) -> Vec { return Vec::Zero(1); };
    const auto fih = [](const Vec&, int) -> Mat { return Mat::Zero(1, 1); };
    // q12 = 0.5: sum_j q_1j j = -0.5*1 + 0.5*2 = 0.5
    CHECK(apply_generator(m, fi, fig, fih, {scalar(0.0), 1}) == doctest::Approx(0.5));

    // generator of a constant function vanishes by row sums
    const auto fc = [](const Vec&, int) { return 4.2; };
    CHECK(apply_generator(m, fc, fig, fih, {scalar(0.3), 1}) == doctest::Approx(0.0));

    // linearity in (f, fgrad, fhess)
    const auto sum_f = [&](const Vec& x, int i) { return f2(x, i) + fi(x, i); };
    const auto sum_g = [&](const Vec& x, int i) -> Vec { return f2g(x, i) + fig(x, i); };
    const auto sum_h = [&](const Vec& x, int i) -> Mat { return f2h(x, i) + fih(x, i); };
    const HybridState st{scalar(0.2), 1};
    CHECK(apply_generator(m, sum_f, sum_g, sum_h, st) ==
          doctest::Approx(apply_generator(m, f2, f2g, f2h, st) +
                          apply_generator(m, fi, fig, fih, st)));
}

TEST_CASE("truncate_model cutoff regions") {
    const ModelSpec base = make_markovian_smooth();
    const ModelSpec trunc = truncate_model(base, 2.0, 1.0);
    // psi = 1 inside
    CHECK(trunc.drift(scalar(1.5), 1)[0] == base.drift(scalar(1.5), 1)[0]);
    CHECK(trunc.diffusion(scalar(-1.9), 2)(0, 0) == base.diffusion(scalar(-1.9), 2)(0, 0));
    // psi = 0 outside
    CHECK(trunc.drift(scalar(3.1), 1)[0] == 0.0);
    CHECK(trunc.diffusion(scalar(-3.5), 2)(0, 0) == 0.0);
    // monotone in between
    double prev = 1.0;
    for (double x = 2.0; x <= 3.0; x += 0.05) {
        const double psi = cutoff_psi(x, 2.0, 1.0);
        CHECK(psi <= prev + 1e-15);
        prev = psi;
    }
    // rates unchanged
    CHECK(trunc.rates(scalar(5.0))(0, 1) == base.rates(scalar(5.0))(0, 1));
}

TEST_CASE("cutoff psi is C2 at the seams") {
    const double H = 1.0, w = 0.5;
    for (double s : {H, H + w}) {
        const double eps = 1e-6;
        const double left = cutoff_psi(s - eps, H, w);
        const double right = cutoff_psi(s + eps, H, w);
        CHECK(left == doctest::Approx(right).epsilon(1e-9));
        const double dl = cutoff_psi_deriv(s - eps, H, w);
        const double dr = cutoff_psi_deriv(s + eps, H, w);
        CHECK(std::abs(dl - dr) < 1e-4);
    }
}

TEST_CASE("jacobian consistency of builtin models") {
    NoiseStream s(55, 0);
    for (const char* name : {"markovian-linear", "markovian-smooth", "smooth-q", "cubic-well"}) {
        const ModelSpec m = make_builtin_model(name);
        for (int rep = 0; rep < 10; ++rep) {
            const Vec x = scalar(3.0 * s.uniform01() - 1.5);
            const int i = 1 + static_cast<int>(s.uniform01() * m.m0());
            const double h = 1e-5;
            const Vec bp = m.drift(scalar(x[0] + h), i);
            const Vec bm = m.drift(scalar(x[0] - h), i);
            const double fd = (bp[0] - bm[0]) / (2.0 * h);
            const double jac = m.drift_jac(x, i)(0, 0);
            CHECK(std::abs(jac - fd) <= 1e-6 * (1.0 + std::abs(m.drift(x, i)[0])) + 1e-8);
            const Mat sp = m.diffusion(scalar(x[0] + h), i);
            const Mat sm = m.diffusion(scalar(x[0] - h), i);
            const double sfd = (sp(0, 0) - sm(0, 0)) / (2.0 * h);
            CHECK(std::abs(m.diffusion_jac(x, i)[0](0, 0) - sfd) <= 1e-6);
        }
    }
}

TEST_CASE("rate jacobian consistency of smooth-q") {
    const ModelSpec m = make_smooth_q();
    NoiseStream s(56, 0);
    for (int rep = 0; rep < 10; ++rep) {
        const Vec x = scalar(3.0 * s.uniform01() - 1.5);
        const double h = 1e-5;
        const Mat qp = m.rates(scalar(x[0] + h));
        const Mat qm = m.rates(scalar(x[0] - h));
        const Mat jac = m.rates_jac(x)[0];
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                CHECK(std::abs(jac(a, b) - (qp(a, b) - qm(a, b)) / (2.0 * h)) <= 1e-6);
    }
}

TEST_CASE("truncated jacobians follow the product rule") {
    const ModelSpec base = make_cubic_well();
    const ModelSpec trunc = truncate_model(base, 1.0, 0.8);
    NoiseStream s(57, 0);
    for (int rep = 0; rep < 10; ++rep) {
        const Vec x = scalar(0.4 + 1.8 * s.uniform01());  // spans the blend zone
        const double h = 1e-6;
        const double fd =
            (trunc.drift(scalar(x[0] + h), 1)[0] - trunc.drift(scalar(x[0] - h), 1)[0]) / (2.0 * h);
        CHECK(trunc.drift_jac(x, 1)(0, 0) == doctest::Approx(fd).epsilon(1e-4));
    }
}
