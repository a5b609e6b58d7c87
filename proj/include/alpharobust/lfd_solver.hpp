#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alpharobust/density.hpp"
#include "alpharobust/divergence.hpp"
#include "alpharobust/quadrature.hpp"

namespace alpharobust {

/// Lower/upper breakpoints on the nominal likelihood-ratio axis,
/// 0 < l_l <= 1 <= l_u < inf.
struct ThresholdPair {
    double l_l = 1.0;
    double l_u = 1.0;
};

struct SolverConfig {
    double root_tol = 1e-10;   ///< Euclidean norm of the two residuals
    int max_iter = 200;
    double bracket_expand = 2.0;
    int scan_size = 16;        ///< scan_size x scan_size start-point scan
};

/// Parameters of the unreduced Lagrangian solution: the four region scale
/// factors and the KKT multipliers they determine.
struct KktParams {
    double c1 = 1.0, c2 = 1.0, c3 = 1.0, c4 = 1.0;
    double lambda0 = 0.0, lambda1 = 0.0;
    double mu0 = 0.0, mu1 = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;

    /// Rebuilds (λ, μ) from c1..c4 for the given α.
    static KktParams from_scales(double c1, double c2, double c3, double c4, double alpha);
};

/// Masses of the three regions under each nominal.
struct RegionMasses {
    std::array<double, 3> f0{};
    std::array<double, 3> f1{};
};

/// Materialized least favorable pair, robust rule and robust likelihood
/// ratio on the nominal grid.
struct RobustSolution {
    DivergenceSpec spec;
    ThresholdPair thresholds;
    double k = 1.0;
    double z = 1.0;

    QuadratureGrid grid = QuadratureGrid::uniform(0.0, 1.0, 3);
    std::vector<double> f0, f1, l;
    std::vector<double> g0_hat, g1_hat, delta_hat, l_hat;
    std::vector<int> region;  ///< 1, 2 or 3 per grid point

    double mass0 = 1.0, mass1 = 1.0;  ///< region-split integrals of ĝ0, ĝ1
    double achieved_eps0 = 0.0, achieved_eps1 = 0.0;
    double residual_norm = 0.0;
    RegionMasses region_masses;
    int iterations = 0;
    std::string method;
    std::vector<std::string> diagnostics;

    /// Tabulated density models (trapezoid grids only).
    DensityModel g0_model() const;
    DensityModel g1_model() const;
    TabulatedFunction delta_function() const;
};

/// Region labels per point: 1 below ρ·l_l, 3 above ρ·l_u, 2 otherwise
/// (boundary ties belong to region 2).
std::vector<Region> partition(std::span<const double> l_values, double rho, ThresholdPair t);

/// k(l_l, l_u) = ∫_{I1}(l - l_l) f0 / ∫_{I3}(l_u - l) f0, evaluated as written.
/// Throws degenerate_region when k is not finite and positive.
double k_factor(ThresholdPair t, const NominalPair& nominals, double rho);

/// Scale ratio c4/c3 that makes both least favorable densities integrate to
/// one. Equal to `k_factor` when ρ = 1; a 1-D root otherwise.
double normalizing_k(ThresholdPair t, const NominalPair& nominals, double alpha, double rho);

/// Normalizer z: ĝ1 integrates to one with ĝ1 = f1/z on region 1.
double z_norm(ThresholdPair t, double alpha, double rho, const NominalPair& nominals);

/// Φ1 on region 2; Φ0 = Φ1·l/ρ. Throws parametric_infeasible for a
/// non-positive base.
double phi1(double l, ThresholdPair t, double alpha, double rho, double k, double z);
double phi0(double l, ThresholdPair t, double alpha, double rho, double k, double z);

/// Residuals of the two radius-attainment equations at t.
std::array<double, 2> residuals(ThresholdPair t, const DivergenceSpec& spec,
                                const NominalPair& nominals);

RobustSolution solve_thresholds(const DivergenceSpec& spec, const NominalPair& nominals,
                                const SolverConfig& config = {});

/// Robust decision rule at nominal likelihood ratio l.
double robust_rule(double l, ThresholdPair t, double alpha, double rho, double k);
double robust_rule(double l, const RobustSolution& solution);

/// Robust likelihood ratio: l/l_l, ρ, l/l_u on regions 1, 2, 3.
double robust_lr(double l, ThresholdPair t, double rho);
double robust_lr(double l, const RobustSolution& solution);

/// Fast path for f1(y) = f0(-y) with increasing l, equal radii and ρ = 1:
/// a single scalar equation in the upper crossing point y_u.
RobustSolution solve_symmetric(double eps, double alpha, double rho, const NominalPair& nominals,
                               const SolverConfig& config = {});

/// Solves the four normalization/attainment equations in (c1, c2, c3, c4)
/// directly, with region-2 densities in their multiplier form.
KktParams solve_raw_kkt(const DivergenceSpec& spec, const NominalPair& nominals,
                        const SolverConfig& config = {},
                        std::optional<KktParams> initial = std::nullopt);

/// Residuals of the four-equation system at the given scales.
std::array<double, 4> raw_kkt_residuals(const KktParams& p, const DivergenceSpec& spec,
                                        const NominalPair& nominals);

/// Multiplier forms on region 2, before any reduction.
double phi1_unreduced(double l, const KktParams& p, double alpha, double rho);
double delta_unreduced(double l, const KktParams& p, double alpha, double rho);

/// Thresholds, k and z implied by the scale factors.
struct ReducedParams {
    ThresholdPair thresholds;
    double k;
    double z;
};
ReducedParams reduce(const KktParams& p);

/// Builds the full solution from (t, k, z).
RobustSolution materialize(const DivergenceSpec& spec, const NominalPair& nominals,
                           ThresholdPair t, double k, double z);

}  // namespace alpharobust
