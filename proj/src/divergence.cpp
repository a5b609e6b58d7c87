#include "alpharobust/divergence.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "alpharobust/errors.hpp"

namespace alpharobust {

void check_alpha(double alpha) {
    if (!std::isfinite(alpha) || std::abs(alpha) <= kAlphaGuardBand ||
        std::abs(alpha - 1.0) <= kAlphaGuardBand)
        fail(ErrorKind::invalid_argument,
             "alpha = " + std::to_string(alpha) + " lies in the excluded band around {0, 1}");
}

void DivergenceSpec::validate() const {
    check_alpha(alpha);
    if (!(rho > 0.0) || !std::isfinite(rho)) fail(ErrorKind::invalid_argument, "rho must be positive");
    if (!(eps0 >= 0.0) || !(eps1 >= 0.0) || !std::isfinite(eps0) || !std::isfinite(eps1))
        fail(ErrorKind::invalid_argument, "robustness radii must be finite and nonnegative");
}

double alpha_integral(std::span<const double> g, std::span<const double> f, double alpha,
                      const QuadratureGrid& grid) {
    check_alpha(alpha);
    if (g.size() != grid.count() || f.size() != grid.count())
        fail(ErrorKind::invalid_argument, "alpha_integral: length mismatch");
    std::vector<double> integrand(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] > 0.0 && f[i] > 0.0) {
            integrand[i] = std::exp(alpha * std::log(g[i]) + (1.0 - alpha) * std::log(f[i]));
        } else if (g[i] > 0.0) {
            // f = 0 < g: infinite for α > 1, zero for α < 1 (negative α included:
            // g^α f^(1-α) -> 0 as f -> 0 only when 1-α > 0).
            if (alpha > 1.0)
                fail(ErrorKind::support_violation,
                     "g > 0 = f at y = " + std::to_string(grid.points()[i]) + " with alpha > 1");
        } else if (f[i] > 0.0 && alpha < 0.0) {
            fail(ErrorKind::support_violation,
                 "g = 0 < f at y = " + std::to_string(grid.points()[i]) + " with alpha < 0");
        }
    }
    return integrate(integrand, grid);
}

double alpha_divergence(std::span<const double> g, std::span<const double> f, double alpha,
                        const QuadratureGrid& grid) {
    return (1.0 - alpha_integral(g, f, alpha, grid)) / (alpha * (1.0 - alpha));
}

double alpha_divergence(const DensityModel& g, const DensityModel& f, double alpha,
                        const QuadratureGrid& grid) {
    const auto gv = g.on_grid(grid), fv = f.on_grid(grid);
    return alpha_divergence(gv, fv, alpha, grid);
}

double bhattacharyya(std::span<const double> f0, std::span<const double> f1,
                     const QuadratureGrid& grid) {
    if (f0.size() != grid.count() || f1.size() != grid.count())
        fail(ErrorKind::invalid_argument, "bhattacharyya: length mismatch");
    std::vector<double> v(f0.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sqrt(f0[i] * f1[i]);
    return integrate(v, grid);
}

double bhattacharyya(const DensityModel& f0, const DensityModel& f1, const QuadratureGrid& grid) {
    const auto a = f0.on_grid(grid), b = f1.on_grid(grid);
    return bhattacharyya(a, b, grid);
}

}  // namespace alpharobust
