#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "alpharobust/density.hpp"
#include "alpharobust/divergence.hpp"

namespace alpharobust {

/// One point of the boundary where the two uncertainty balls touch.
///
/// Boundary points are indexed by θ ∈ [0, 1]: the common least favorable
/// density is the normalized power mean of f0 and ρ^{-1}f1 with weights
/// (1-θ, θ), and the multipliers are λ0 = r(1-θ), λ1 = rθ.
struct BoundaryPoint {
    double eps0 = 0.0;
    double eps1 = 0.0;
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double theta = 0.0;
    double residual = 0.0;  ///< max abs residual of the three defining equations
};

struct SurfaceCell {
    double eps0;
    double eps1;
    double a;  ///< Bhattacharyya coefficient whose boundary passes here (NaN in general mode)
    bool feasible;
};

struct FeasibilityReport {
    enum class Mode { general, hellinger };

    double alpha = 0.5;
    double rho = 1.0;
    Mode mode = Mode::hellinger;
    std::vector<std::pair<double, double>> pairs;
    std::vector<SurfaceCell> cells;
    double a_value = std::numeric_limits<double>::quiet_NaN();
    double lambda0 = std::numeric_limits<double>::quiet_NaN();
    double lambda1 = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> diagnostics;
};

struct FeasibilityCheck {
    bool feasible = false;
    double margin = 0.0;  ///< distance to the boundary along the ray through (ε0, ε1)
    BoundaryPoint boundary;
    std::vector<std::string> diagnostics;
};

/// Squared-Hellinger boundary: the Bhattacharyya coefficient at which
/// (ε0, ε1) lies on the boundary. Exactly symmetric in its arguments.
/// Throws invalid_argument outside 0 <= εi <= 8 and infeasible_radius when
/// the root falls outside [0, 1].
double hellinger_root_a(double eps0, double eps1);

/// Largest equal radius for Bhattacharyya coefficient a: 4 - 2√(2(1+a)).
double hellinger_eps_max(double a);

/// Boundary radius paired with `eps_fixed` for coefficient a (squared Hellinger).
double hellinger_eps_other(double eps_fixed, double a);

/// Boundary point at parameter θ.
BoundaryPoint boundary_at(const NominalPair& nominals, double alpha, double rho, double theta);

/// Boundary point with radius `fixed_value` on hypothesis `fixed_index`;
/// the other radius and the multipliers are solved. Throws infeasible_radius
/// when no boundary point has that radius.
BoundaryPoint max_eps_general(const NominalPair& nominals, double alpha, double rho,
                              int fixed_index, double fixed_value,
                              std::vector<std::string>* diagnostics = nullptr);

/// n×n table over [0, 4]² for the squared-Hellinger case (closed form), or,
/// with nominals, the boundary traced by the general solver together with a
/// feasibility mask over [0, 1.05·max]².
FeasibilityReport eps_surface(double alpha, int n,
                              const std::optional<NominalPair>& nominals = std::nullopt,
                              double rho = 1.0);

/// Whether (ε0, ε1) lies strictly inside the boundary.
FeasibilityCheck validate_eps(const NominalPair& nominals, const DivergenceSpec& spec);

}  // namespace alpharobust
