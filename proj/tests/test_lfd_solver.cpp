#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "alpharobust/errors.hpp"
#include "alpharobust/lfd_solver.hpp"
#include "fixtures.hpp"

using namespace alpharobust;

namespace {

const NominalPair& mixture() {
    static const NominalPair n = fixtures::mixture_problem();
    return n;
}

const NominalPair& gaussians() {
    static const NominalPair n = fixtures::gaussian_problem();
    return n;
}

}  // namespace

TEST(SolveThresholds, MixtureAnchor) {
    const auto s = solve_thresholds({4.0, 1.0, 0.02, 0.03}, mixture());
    EXPECT_NEAR(s.thresholds.l_l, 0.605, 0.01);
    EXPECT_NEAR(s.thresholds.l_u, 1.618, 0.01);
    EXPECT_LT(s.residual_norm, 1e-8);
    EXPECT_LT(s.thresholds.l_l, 1.0);
    EXPECT_GT(s.thresholds.l_u, 1.0);
}

TEST(SolveThresholds, ConstraintsAttained) {
    const auto& n = mixture();
    const auto s = solve_thresholds({4.0, 1.0, 0.02, 0.03}, n);
    EXPECT_NEAR(s.mass0, 1.0, 1e-6);
    EXPECT_NEAR(s.mass1, 1.0, 1e-6);
    EXPECT_NEAR(s.achieved_eps0, 0.02, 1e-8);
    EXPECT_NEAR(s.achieved_eps1, 0.03, 1e-8);
    EXPECT_NEAR(integrate(s.g0_hat, n.grid), 1.0, 1e-6);
    EXPECT_NEAR(alpha_divergence(s.g1_hat, n.f1, 4.0, n.grid), 0.03, 1e-4);
}

TEST(SolveThresholds, ResidualsVanishAtTheSolution) {
    const DivergenceSpec spec{2.0, 1.0, 0.02, 0.03};
    const auto s = solve_thresholds(spec, mixture());
    const auto r = residuals(s.thresholds, spec, mixture());
    EXPECT_LT(std::hypot(r[0], r[1]), 1e-9);
}

TEST(SolveThresholds, RhoVariantFlattensTheRobustRatio) {
    const auto s = solve_thresholds({4.0, 1.2, 0.02, 0.03}, mixture());
    EXPECT_LT(s.residual_norm, 1e-8);
    int interior = 0;
    for (std::size_t i = 1; i + 1 < s.region.size(); ++i) {
        if (s.region[i - 1] == 2 && s.region[i] == 2 && s.region[i + 1] == 2) {
            EXPECT_NEAR(s.l_hat[i], 1.2, 1e-8);
            ++interior;
        }
    }
    EXPECT_GT(interior, 10);
    EXPECT_NEAR(s.mass0, 1.0, 1e-6);
    EXPECT_NEAR(s.mass1, 1.0, 1e-6);
}

TEST(SolveThresholds, ZeroRadiiReturnTheNominals) {
    const auto s = solve_thresholds({0.5, 1.0, 0.0, 0.0}, mixture());
    for (std::size_t i = 0; i < s.f0.size(); ++i) {
        EXPECT_DOUBLE_EQ(s.g0_hat[i], s.f0[i]);
        EXPECT_DOUBLE_EQ(s.g1_hat[i], s.f1[i]);
    }
}

TEST(SolveThresholds, ThresholdsWidenWithTheRadii) {
    const auto small = solve_thresholds({0.5, 1.0, 0.01, 0.01}, gaussians());
    const auto large = solve_thresholds({0.5, 1.0, 0.05, 0.05}, gaussians());
    EXPECT_LT(large.thresholds.l_l, small.thresholds.l_l);
    EXPECT_GT(large.thresholds.l_u, small.thresholds.l_u);
}

TEST(SolveThresholds, NegativeOrder) {
    const auto s = solve_thresholds({-2.0, 1.0, 0.05, 0.05}, gaussians());
    EXPECT_LT(s.residual_norm, 1e-8);
    EXPECT_NEAR(s.achieved_eps0, 0.05, 1e-8);
}

TEST(SolveThresholds, InfeasibleRadiiAreReported) {
    try {
        solve_thresholds({0.5, 1.0, 3.0, 3.0}, gaussians());
        FAIL() << "expected an infeasible_radius error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::infeasible_radius);
    }
}

TEST(KFactor, MatchesNormalizingScaleAtUnitRho) {
    const ThresholdPair t{0.6, 1.6};
    EXPECT_NEAR(k_factor(t, mixture(), 1.0), normalizing_k(t, mixture(), 4.0, 1.0), 1e-10);
}

TEST(KFactor, SymmetricNominalsGiveTheLowerThreshold) {
    const ThresholdPair t{1.0 / 1.7, 1.7};
    EXPECT_NEAR(k_factor(t, gaussians(), 1.0), t.l_l, 1e-10);
}

TEST(KFactor, DegenerateRegionThrows) {
    EXPECT_THROW(k_factor({1e-9, 1e9}, gaussians(), 1.0), Error);
}

TEST(Partition, BoundaryTiesGoToTheMiddle) {
    const std::vector<double> l{0.2, 0.5, 1.0, 2.0, 3.0};
    const auto r = partition(l, 1.0, {0.5, 2.0});
    EXPECT_EQ(r[0], Region::lower);
    EXPECT_EQ(r[1], Region::middle);
    EXPECT_EQ(r[3], Region::middle);
    EXPECT_EQ(r[4], Region::upper);
}

TEST(RobustRule, ExactAtTheRegionBoundaries) {
    const ThresholdPair t{0.605, 1.618};
    for (double alpha : {0.01, 0.5, 4.0, 100.0}) {
        for (double rho : {1.0, 1.2}) {
            EXPECT_EQ(robust_rule(rho * t.l_l, t, alpha, rho, 0.6), 0.0);
            EXPECT_EQ(robust_rule(rho * t.l_u, t, alpha, rho, 0.6), 1.0);
            EXPECT_EQ(robust_rule(0.1, t, alpha, rho, 0.6), 0.0);
            EXPECT_EQ(robust_rule(10.0, t, alpha, rho, 0.6), 1.0);
        }
    }
}

TEST(RobustRule, IncreasingOnTheMiddleRegion) {
    const ThresholdPair t{0.605, 1.618};
    double prev = 0.0;
    for (int i = 1; i < 50; ++i) {
        const double l = t.l_l + (t.l_u - t.l_l) * i / 50.0;
        const double d = robust_rule(l, t, 4.0, 1.0, 0.58);
        EXPECT_GT(d, prev);
        EXPECT_LT(d, 1.0);
        prev = d;
    }
}

TEST(RobustLr, ClippedAndFlat) {
    const ThresholdPair t{0.5, 2.0};
    EXPECT_DOUBLE_EQ(robust_lr(0.25, t, 1.2), 0.5);
    EXPECT_DOUBLE_EQ(robust_lr(1.0, t, 1.2), 1.2);
    EXPECT_DOUBLE_EQ(robust_lr(8.0, t, 1.2), 4.0);
}

TEST(Phi, LowerDensityIsScaledByTheRatio) {
    const ThresholdPair t{0.6, 1.6};
    const double k = 0.58, z = 0.73, l = 1.1;
    EXPECT_NEAR(phi0(l, t, 4.0, 1.2, k, z), phi1(l, t, 4.0, 1.2, k, z) * l / 1.2, 1e-15);
}

TEST(SolveSymmetric, AgreesWithTheGeneralSolver) {
    for (double alpha : {-10.0, 0.01, 10.0}) {
        const auto sym = solve_symmetric(0.1, alpha, 1.0, gaussians());
        const auto gen = solve_thresholds({alpha, 1.0, 0.1, 0.1}, gaussians());
        EXPECT_NEAR(sym.thresholds.l_l, gen.thresholds.l_l, 1e-6) << "alpha " << alpha;
        EXPECT_NEAR(sym.thresholds.l_u, gen.thresholds.l_u, 1e-6) << "alpha " << alpha;
        EXPECT_NEAR(sym.thresholds.l_l * sym.thresholds.l_u, 1.0, 1e-8);
    }
}

TEST(SolveSymmetric, MirrorImageLfds) {
    const auto s = solve_symmetric(0.1, 0.5, 1.0, gaussians());
    const std::size_t N = s.g0_hat.size();
    for (std::size_t i = 0; i < N; ++i) EXPECT_NEAR(s.g1_hat[i], s.g0_hat[N - 1 - i], 1e-6);
}

TEST(SolveSymmetric, RejectsUnsupportedProblems) {
    EXPECT_THROW(solve_symmetric(0.1, 0.5, 1.2, gaussians()), Error);
    EXPECT_THROW(solve_symmetric(0.02, 4.0, 1.0, mixture()), Error);
}

TEST(RawKkt, ReducesToTheThresholdSolution) {
    const DivergenceSpec spec{4.0, 1.0, 0.02, 0.03};
    const auto s = solve_thresholds(spec, mixture());
    const auto p = solve_raw_kkt(spec, mixture());
    const auto r = reduce(p);
    EXPECT_NEAR(r.thresholds.l_l, s.thresholds.l_l, 1e-8);
    EXPECT_NEAR(r.thresholds.l_u, s.thresholds.l_u, 1e-8);
    EXPECT_NEAR(r.k, s.k, 1e-8);
    EXPECT_NEAR(r.z, s.z, 1e-8);
    const auto res = raw_kkt_residuals(p, spec, mixture());
    for (double v : res) EXPECT_LT(std::abs(v), 1e-9);
}

TEST(RawKkt, UnreducedFormsMatchReducedForms) {
    const DivergenceSpec spec{2.0, 1.2, 0.02, 0.03};
    const auto p = solve_raw_kkt(spec, mixture());
    const auto r = reduce(p);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double l = spec.rho * (r.thresholds.l_l + (r.thresholds.l_u - r.thresholds.l_l) * u(rng));
        EXPECT_NEAR(phi1_unreduced(l, p, spec.alpha, spec.rho),
                    phi1(l, r.thresholds, spec.alpha, spec.rho, r.k, r.z), 1e-9);
        EXPECT_NEAR(delta_unreduced(l, p, spec.alpha, spec.rho),
                    robust_rule(l, r.thresholds, spec.alpha, spec.rho, r.k), 1e-9);
    }
}

TEST(RawKkt, SymmetricScalesCoincide) {
    const auto p = solve_raw_kkt({0.5, 1.0, 0.1, 0.1}, gaussians());
    EXPECT_NEAR(p.c2, p.c3, 1e-9);
    EXPECT_NEAR(p.c1, p.c4, 1e-9);
}

TEST(RobustSolution, TabulatedModelsIntegrateToOne) {
    const auto s = solve_thresholds({4.0, 1.0, 0.02, 0.03}, mixture());
    const auto grid = QuadratureGrid::uniform(-8.0, 9.0, 4001);
    EXPECT_NEAR(integrate(s.g0_model().on_grid(grid), grid), 1.0, 1e-6);
    EXPECT_NEAR(s.delta_function()(9.0), 1.0, 1e-12);
}
