#pragma once

#include <span>

#include "alpharobust/density.hpp"
#include "alpharobust/quadrature.hpp"

namespace alpharobust {

/// Robustness specification: α-divergence order, Bayesian threshold
/// ρ = P(H0)/P(H1), and the radii of the two uncertainty balls.
struct DivergenceSpec {
    double alpha = 0.5;
    double rho = 1.0;
    double eps0 = 0.0;
    double eps1 = 0.0;

    /// Throws invalid_argument for α inside the guard band around {0, 1},
    /// ρ <= 0 or negative radii.
    void validate() const;
};

inline constexpr double kAlphaGuardBand = 1e-6;

void check_alpha(double alpha);

/// Right-hand side of the radius-attainment equations: 1 - α(1-α)ε.
constexpr double x_of(double alpha, double eps) { return 1.0 - alpha * (1.0 - alpha) * eps; }

/// ∫ g^α f^(1-α) dμ, computed in log space where both densities are positive.
/// Throws support_violation when α > 1 and g > 0 = f somewhere on the grid.
double alpha_integral(std::span<const double> g, std::span<const double> f, double alpha,
                      const QuadratureGrid& grid);

/// D(g, f; α) = (1 - ∫ g^α f^(1-α) dμ) / (α(1-α)).
double alpha_divergence(std::span<const double> g, std::span<const double> f, double alpha,
                        const QuadratureGrid& grid);
double alpha_divergence(const DensityModel& g, const DensityModel& f, double alpha,
                        const QuadratureGrid& grid);

/// Bhattacharyya coefficient a = ∫ sqrt(f0 f1) dμ.
double bhattacharyya(std::span<const double> f0, std::span<const double> f1,
                     const QuadratureGrid& grid);
double bhattacharyya(const DensityModel& f0, const DensityModel& f1, const QuadratureGrid& grid);

}  // namespace alpharobust
