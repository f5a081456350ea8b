#include "swdiff/mc.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace swdiff {

void parallel_for_indices(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn) {
    if (threads < 1) threads = 1;
    if (threads == 1 || n < 2) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    const std::int64_t chunk = std::max<std::int64_t>(1, n / (8 * threads));
    auto worker = [&]() {
        for (;;) {
            const std::int64_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            const std::int64_t end = std::min(n, begin + chunk);
            for (std::int64_t i = begin; i < end; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

McEstimate mc_estimate(const PerPath& per_path, std::int64_t n, std::uint64_t seed, int threads) {
    if (n < 1) throw std::invalid_argument("mc_estimate: n must be >= 1");
    std::vector<double> values(static_cast<std::size_t>(n));
    std::vector<unsigned char> ok(static_cast<std::size_t>(n), 0);
    parallel_for_indices(n, threads, [&](std::int64_t i) {
        const auto v = per_path(PathContext{seed, static_cast<std::uint64_t>(i)});
        if (v) {
            values[static_cast<std::size_t>(i)] = *v;
            ok[static_cast<std::size_t>(i)] = 1;
        }
    });
    // in-order reduction: bit-identical for any thread count
    McEstimate est;
    double sum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (ok[static_cast<std::size_t>(i)]) {
            sum += values[static_cast<std::size_t>(i)];
            ++est.n;
        } else {
            ++est.aborted;
        }
    }
    if (est.n == 0) throw std::runtime_error("mc_estimate: all paths aborted");
    est.mean = sum / static_cast<double>(est.n);
    double ss = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (!ok[static_cast<std::size_t>(i)]) continue;
        const double dv = values[static_cast<std::size_t>(i)] - est.mean;
        ss += dv * dv;
    }
    if (est.n > 1) est.stderror = std::sqrt(ss / static_cast<double>(est.n - 1)) / std::sqrt(static_cast<double>(est.n));
    return est;
}

PowerLawFit loglog_fit(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 2) throw std::invalid_argument("loglog_fit: need at least 2 points");
    PowerLawFit fit;
    fit.points.reserve(pairs.size());
    for (const auto& [x, y] : pairs) {
        if (!(x > 0.0) || !(y > 0.0)) throw std::domain_error("loglog_fit: entries must be positive");
        fit.points.emplace_back(std::log(x), std::log(y));
    }
    const double n = static_cast<double>(fit.points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [lx, ly] : fit.points) {
        sx += lx;
        sy += ly;
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [lx, ly] : fit.points) {
        sxx += (lx - mx) * (lx - mx);
        sxy += (lx - mx) * (ly - my);
        syy += (ly - my) * (ly - my);
    }
    if (sxx == 0.0) throw std::domain_error("loglog_fit: degenerate abscissae");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

int default_threads() {
    if (const char* env = std::getenv("SWDIFF_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

}  // namespace swdiff
