#include "swdiff/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace swdiff {

RateValidation validate_rate_matrix(const Mat& Qx, double tol) {
    if (Qx.rows() != Qx.cols()) throw std::invalid_argument("validate_rate_matrix: matrix must be square");
    if (!Qx.allFinite()) throw std::invalid_argument("validate_rate_matrix: entries must be finite");
    RateValidation report;
    const int m0 = static_cast<int>(Qx.rows());
    for (int i = 0; i < m0; ++i) {
        for (int j = 0; j < m0; ++j) {
            if (i != j && Qx(i, j) < -tol) {
                std::ostringstream os;
                os << "negative off-diagonal entry q(" << i + 1 << "," << j + 1 << ") = " << Qx(i, j);
                report.violations.push_back(os.str());
            }
        }
        const double row_sum = Qx.row(i).sum();
        if (std::abs(row_sum) > tol) {
            std::ostringstream os;
            os << "row " << i + 1 << " sums to " << row_sum;
            report.violations.push_back(os.str());
        }
    }
    report.ok = report.violations.empty();
    return report;
}

MarkPartition build_partition(const ModelSpec& model, const Vec& x) {
    const int m0 = model.m0();
    const double M = model.rate_bound;
    const Mat Qx = model.rates(x);
    if (Qx.rows() != m0 || Qx.cols() != m0)
        throw std::invalid_argument("build_partition: rates(x) has wrong shape");
    MarkPartition part;
    part.x = x;
    part.m0 = m0;
    part.bound = M;
    part.entries.reserve(static_cast<std::size_t>(m0) * (m0 - 1));
    for (int i = 1; i <= m0; ++i) {
        for (int j = 1; j <= m0; ++j) {
            if (j == i) continue;
            const double q = Qx(i - 1, j - 1);
            if (q >= M) {
                std::ostringstream os;
                os << "rate bound violated: q(" << i << "," << j << ") = " << q << " >= M = " << M;
                throw std::runtime_error(os.str());
            }
            const double lo = static_cast<double>((i - 1) * m0 + j) * M;
            part.entries.push_back({i, j, lo, lo + q});
        }
    }
    return part;
}

int eval_h(const MarkPartition& partition, int i, double z) {
    for (const auto& e : partition.entries) {
        if (e.from == i && z >= e.lo && z < e.hi) return e.to - i;
    }
    return 0;
}

int mark_target(const Mat& Qx, int m0, double bound, int i, double z) {
    for (int j = 1; j <= m0; ++j) {
        if (j == i) continue;
        const double lo = static_cast<double>((i - 1) * m0 + j) * bound;
        if (z >= lo && z < lo + Qx(i - 1, j - 1)) return j;
    }
    return i;
}

double rho(const ModelSpec& model, const Vec& x, const Vec& xt, int k) {
    if (!model.regimes.contains(k)) throw std::invalid_argument("rho: invalid regime");
    const Mat Qx = model.rates(x);
    const Mat Qxt = model.rates(xt);
    double sum = 0.0;
    for (int j = 1; j <= model.m0(); ++j) {
        if (j == k) continue;
        sum += std::abs(Qx(k - 1, j - 1) - Qxt(k - 1, j - 1));
    }
    return sum;
}

std::vector<CoupledMove> coupled_rates(const Mat& Qx, const Mat& Qxt, int m0, int k, int l) {
    auto qx = [&](int from, int to) { return (from == to) ? 0.0 : Qx(from - 1, to - 1); };
    auto qxt = [&](int from, int to) { return (from == to) ? 0.0 : Qxt(from - 1, to - 1); };
    std::vector<CoupledMove> moves;
    moves.reserve(static_cast<std::size_t>(3 * m0));
    // first component alone: (k,l) -> (j,l)
    for (int j = 1; j <= m0; ++j) {
        if (j == k) continue;
        const double rate = std::max(qx(k, j) - qxt(l, j), 0.0);
        if (rate > 0.0) moves.push_back({j, l, rate});
    }
    // second component alone: (k,l) -> (k,j)
    for (int j = 1; j <= m0; ++j) {
        if (j == l) continue;
        const double rate = std::max(qxt(l, j) - qx(k, j), 0.0);
        if (rate > 0.0) moves.push_back({k, j, rate});
    }
    // joint move: (k,l) -> (j,j)
    for (int j = 1; j <= m0; ++j) {
        if (j == k && j == l) continue;
        const double rate = std::min(qx(k, j), qxt(l, j));
        if (rate > 0.0) moves.push_back({j, j, rate});
    }
    return moves;
}

std::vector<CoupledMove> coupled_rates(const ModelSpec& model, const Vec& x, const Vec& xt,
                                       int k, int l) {
    if (!model.regimes.contains(k) || !model.regimes.contains(l))
        throw std::invalid_argument("coupled_rates: invalid regime");
    return coupled_rates(model.rates(x), model.rates(xt), model.m0(), k, l);
}

double apply_generator(const ModelSpec& model, const std::function<double(const Vec&, int)>& f,
                       const std::function<Vec(const Vec&, int)>& fgrad,
                       const std::function<Mat(const Vec&, int)>& fhess, const HybridState& s) {
    const Vec b = model.drift(s.x, s.i);
    const Mat sigma = model.diffusion(s.x, s.i);
    const Mat Qx = model.rates(s.x);
    double out = fgrad(s.x, s.i).dot(b);
    const Mat a = sigma * sigma.transpose();
    out += 0.5 * (fhess(s.x, s.i) * a).trace();
    for (int j = 1; j <= model.m0(); ++j) out += Qx(s.i - 1, j - 1) * f(s.x, j);
    return out;
}

double cutoff_psi(double s, double H, double w) {
    if (s <= H) return 1.0;
    if (s >= H + w) return 0.0;
    const double t = (s - H) / w;
    return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double cutoff_psi_deriv(double s, double H, double w) {
    if (s <= H || s >= H + w) return 0.0;
    const double t = (s - H) / w;
    return -30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
}

ModelSpec truncate_model(const ModelSpec& model, double H, double w) {
    if (!(H > 0.0) || !(w > 0.0)) throw std::invalid_argument("truncate_model: H and w must be positive");
    ModelSpec out = model;
    out.name = model.name + "-truncated";
    const auto base_drift = model.drift;
    const auto base_diff = model.diffusion;
    out.drift = [base_drift, H, w](const Vec& x, int i) -> Vec {
        return cutoff_psi(x.norm(), H, w) * base_drift(x, i);
    };
    out.diffusion = [base_diff, H, w](const Vec& x, int i) -> Mat {
        return cutoff_psi(x.norm(), H, w) * base_diff(x, i);
    };
    if (model.drift_jac) {
        const auto base_jac = model.drift_jac;
        out.drift_jac = [base_drift, base_jac, H, w](const Vec& x, int i) -> Mat {
            const double s = x.norm();
            const double psi = cutoff_psi(s, H, w);
            Mat jac = psi * base_jac(x, i);
            const double dpsi = cutoff_psi_deriv(s, H, w);
            if (dpsi != 0.0 && s > 0.0) jac += base_drift(x, i) * (dpsi / s) * x.transpose();
            return jac;
        };
    }
    if (model.diffusion_jac) {
        const auto base_jac = model.diffusion_jac;
        const int d = model.d;
        out.diffusion_jac = [base_diff, base_jac, H, w, d](const Vec& x, int i) -> std::vector<Mat> {
            const double s = x.norm();
            const double psi = cutoff_psi(s, H, w);
            const double dpsi = cutoff_psi_deriv(s, H, w);
            std::vector<Mat> jac = base_jac(x, i);
            const Mat sigma = (dpsi != 0.0) ? base_diff(x, i) : Mat();
            for (int c = 0; c < d; ++c) {
                jac[c] *= psi;
                if (dpsi != 0.0 && s > 0.0) jac[c] += sigma.col(c) * (dpsi / s) * x.transpose();
            }
            return jac;
        };
    }
    return out;
}

}  // namespace swdiff
