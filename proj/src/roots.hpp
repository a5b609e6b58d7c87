#pragma once

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>

namespace alpharobust::detail {

/// Root of f on [a, b] given f(a), f(b) of opposite sign (TOMS 748).
template <class F>
double bracketed_root(F&& f, double a, double b, double fa, double fb, double rel_tol = 1e-15,
                      std::uintmax_t max_iter = 200) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    auto tol = [rel_tol](double x, double y) {
        return std::abs(x - y) <= rel_tol * std::max(1.0, std::max(std::abs(x), std::abs(y)));
    };
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, max_iter);
    return 0.5 * (r.first + r.second);
}

/// Scans `count` equally spaced points of [a, b] for the first sign change
/// between consecutive finite values, then refines it. Points where f is not
/// finite are skipped, which shrinks the search to the valid part of [a, b].
template <class F>
std::optional<double> scan_root(F&& f, double a, double b, int count, double rel_tol = 1e-15) {
    double prev_x = 0.0, prev_f = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < count; ++i) {
        const double x = a + (b - a) * i / (count - 1);
        const double fx = f(x);
        if (!std::isfinite(fx)) continue;
        if (fx == 0.0) return x;
        if (std::isfinite(prev_f) && (prev_f < 0.0) != (fx < 0.0)) {
            auto g = [&](double t) {
                const double v = f(t);
                return std::isfinite(v) ? v : prev_f;
            };
            if (prev_x < x) return bracketed_root(g, prev_x, x, prev_f, fx, rel_tol);
            return bracketed_root(g, x, prev_x, fx, prev_f, rel_tol);
        }
        prev_x = x;
        prev_f = fx;
    }
    return std::nullopt;
}

}  // namespace alpharobust::detail
