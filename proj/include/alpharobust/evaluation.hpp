#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alpharobust/density.hpp"
#include "alpharobust/divergence.hpp"
#include "alpharobust/lfd_solver.hpp"
#include "alpharobust/quadrature.hpp"

namespace alpharobust {

/// Prior probabilities implied by the threshold ρ = P(H0)/P(H1).
inline double prior0(double rho) { return rho / (1.0 + rho); }
inline double prior1(double rho) { return 1.0 / (1.0 + rho); }

struct ErrorReport {
    enum class Method { quadrature, monte_carlo };

    double p_false_alarm = 0.0;
    double p_miss = 0.0;
    double p_error = 0.0;
    Method method = Method::quadrature;
    // Monte Carlo only.
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double se_false_alarm = 0.0;
    double se_miss = 0.0;
    double half_width_false_alarm = 0.0;  ///< 95% normal-approximation half-width
    double half_width_miss = 0.0;
};

/// P_F = ∫δ g0, P_M = ∫(1-δ) g1 and P_E = P(H0) P_F + P(H1) P_M on the grid.
ErrorReport error_probs(std::span<const double> delta, std::span<const double> g0,
                        std::span<const double> g1, double rho, const QuadratureGrid& grid);
ErrorReport error_probs(const TabulatedFunction& delta, const DensityModel& g0,
                        const DensityModel& g1, double rho, const QuadratureGrid& grid);

/// Monte Carlo estimate with n draws per hypothesis. The randomized decision
/// is realized by one uniform draw per sample. Sample and uniform streams
/// are derived from `seed` and never shared between hypotheses.
ErrorReport monte_carlo_errors(const std::function<double(double)>& delta,
                               const DensityModel& model0, const DensityModel& model1, double rho,
                               std::size_t n, std::uint64_t seed);

/// Independent seed for stream `stream` of a run seeded with `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

/// Nominal likelihood ratio test at threshold ρ: 1 above, 0 below, and
/// 1/2 on the tie set {l = ρ}.
double nominal_rule(double l, double rho);
std::vector<double> nominal_rule(const NominalPair& nominals, double rho);

struct SnrSweepConfig {
    DensityModel noise = DensityModel::gaussian(0.0, 1.0);
    double sigma = 1.0;  ///< noise scale used in SNR = 20 log10(A / σ)
    std::vector<double> snr_db;
    std::vector<std::pair<double, double>> eps;  ///< robust (ε0, ε1) settings
    double alpha = 0.5;
    double rho = 1.0;
    double margin = 8.0;          ///< grid spans [-margin, A + margin]·σ
    std::size_t grid_points = 2001;
    std::size_t mc_samples = 0;   ///< 0 disables the Monte Carlo columns
    std::uint64_t mc_seed = 1;
};

struct SnrRow {
    double snr_db = 0.0;
    std::string test;  ///< "nominal" or "robust"
    double eps0 = 0.0, eps1 = 0.0;
    bool feasible = true;
    ErrorReport quadrature;
    ErrorReport monte_carlo;  ///< n = 0 when disabled
    std::string note;
};

/// H0: Y = W, H1: Y = W + A with W ~ noise. Per SNR: the nominal test on
/// (f0, f1) and each robust test on its least favorable pair.
std::vector<SnrRow> snr_sweep(const SnrSweepConfig& config);

struct AlphaRow {
    double alpha = 0.0;
    bool ok = false;
    double l_l = 0.0, l_u = 0.0;
    double residual = 0.0;
    double achieved_eps0 = 0.0, achieved_eps1 = 0.0;
    std::string error;
};

/// Threshold solve per α; failures are recorded per row and the sweep continues.
std::vector<AlphaRow> alpha_sweep(const DivergenceSpec& base, std::span<const double> alphas,
                                  const NominalPair& nominals, const SolverConfig& config = {});

/// Bounded random direction: a sum of four sinusoids with amplitudes in
/// [-1, 1], frequencies in [0.2, 2] and random phases.
std::vector<double> random_direction(const QuadratureGrid& grid, std::mt19937_64& rng);

/// Member of the α-divergence ball around f obtained by exponential tilting,
/// g ∝ f·exp(t·h), with t ≥ 0 bisected so that D(g, f; α) = target (target
/// must be reachable; the largest reachable value is used otherwise).
std::vector<double> tilted_member(std::span<const double> f, std::span<const double> h,
                                  double alpha, double target, const QuadratureGrid& grid);

}  // namespace alpharobust
