#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "alpharobust/density.hpp"
#include "alpharobust/divergence.hpp"

namespace alpharobust {

/// Finitely supported version of a robust testing problem: m bins with
/// probability vectors f0, f1 and the robustness specification.
struct DiscreteProblem {
    std::size_t m = 0;
    std::vector<double> centers;
    std::vector<double> f0;
    std::vector<double> f1;
    DivergenceSpec spec;

    /// Throws invalid_argument unless both vectors are nonnegative with unit sum (1e-12).
    void validate() const;

    /// The same problem as a counting-measure nominal pair, so the threshold
    /// solver can be run on exactly the binned instance.
    NominalPair as_nominals() const;
};

/// Bins the nominal densities into m equal-width cells spanning the grid and
/// renormalizes. Requires m >= 8.
DiscreteProblem discretize(const NominalPair& nominals, std::size_t m, const DivergenceSpec& spec);

/// (1 - Σ g^α f^(1-α)) / (α(1-α)) for probability vectors.
double discrete_divergence(std::span<const double> g, std::span<const double> f, double alpha);

struct BallMaximum {
    std::vector<double> g;
    double value = 0.0;       ///< <weights, g>
    double divergence = 0.0;  ///< D(g, f; α)
    double lambda = 0.0;      ///< multiplier of the divergence constraint
    bool active = false;      ///< constraint attained within 1e-8
    std::string diagnostic;
};

/// Maximizes <weights, g> over the simplex subject to D(g, f; α) <= eps by
/// solving the one-dimensional dual in the constraint multiplier.
BallMaximum maximize_over_ball(std::span<const double> weights, std::span<const double> f,
                               double alpha, double eps);

/// Likelihood ratio test of g1/g0 against rho; ties are randomized with 1/2.
std::vector<double> lrt_rule(std::span<const double> g0, std::span<const double> g1, double rho);

struct SaddleResult {
    std::vector<double> rule;
    std::vector<double> g0;
    std::vector<double> g1;
    std::vector<double> trace;        ///< worst-case error of the current rule, per iteration
    std::vector<double> lower_trace;  ///< best lower bound Σ min(π0 g0, π1 g1) so far
    double p_error = 0.0;             ///< final worst-case error (upper value)
    double gap = 0.0;                 ///< upper minus lower value
    int iterations = 0;
    bool converged = false;
    std::string diagnostic;
};

/// Alternates the two ball maximizations with a descent step on the rule.
/// The rule update is a scaled projected gradient step on the worst-case
/// error, which is convex in the rule; the LRT against the current
/// maximizers is tried as a candidate at every iteration. Stops when the
/// duality gap falls below `tol`.
SaddleResult alternating_saddle(const DiscreteProblem& problem, int iters, double tol = 1e-7);

}  // namespace alpharobust
