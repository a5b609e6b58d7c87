#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "alpharobust/divergence.hpp"
#include "alpharobust/errors.hpp"
#include "alpharobust/evaluation.hpp"
#include "alpharobust/lfd_solver.hpp"
#include "alpharobust/oracle.hpp"
#include "fixtures.hpp"

using namespace alpharobust;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

TEST(Discretize, ProbabilityVectors) {
    const auto p = discretize(fixtures::mixture_problem(), 50, {4.0, 1.0, 0.02, 0.03});
    EXPECT_NO_THROW(p.validate());
    EXPECT_NEAR(std::accumulate(p.f0.begin(), p.f0.end(), 0.0), 1.0, 1e-12);
    EXPECT_THROW(discretize(fixtures::mixture_problem(), 4, {}), Error);
}

TEST(Discretize, SymmetricNominalsGiveReversedBins) {
    const auto p = discretize(fixtures::gaussian_problem(), 40, {});
    for (std::size_t j = 0; j < 40; ++j) EXPECT_NEAR(p.f0[j], p.f1[39 - j], 1e-12);
}

TEST(Discretize, DivergenceConvergesWithBins) {
    const auto n = fixtures::mixture_problem();
    const auto coarse = discretize(n, 50, {}), fine = discretize(n, 400, {});
    const double cont = alpha_divergence(n.f1, n.f0, 0.5, n.grid);
    const double dc = discrete_divergence(coarse.f1, coarse.f0, 0.5);
    const double df = discrete_divergence(fine.f1, fine.f0, 0.5);
    EXPECT_LT(std::abs(dc - df), 1e-2);
    EXPECT_LT(std::abs(df - cont), std::abs(dc - cont));
    // Heavier orders converge more slowly in m but still monotonically.
    const double c4 = alpha_divergence(n.f1, n.f0, 4.0, n.grid);
    EXPECT_LT(std::abs(discrete_divergence(fine.f1, fine.f0, 4.0) - c4),
              std::abs(discrete_divergence(coarse.f1, coarse.f0, 4.0) - c4));
}

TEST(MaximizeOverBall, TrivialCases) {
    const std::vector<double> f{0.1, 0.2, 0.3, 0.4}, w{0.0, 1.0, 0.5, 0.2}, c(4, 0.7);
    EXPECT_EQ(maximize_over_ball(w, f, 0.5, 0.0).g, f);
    EXPECT_EQ(maximize_over_ball(c, f, 0.5, 0.1).g, f);
}

TEST(MaximizeOverBall, FeasibleActiveAndImproving) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double alpha : {-3.0, 0.5, 2.0, 4.0}) {
        std::vector<double> f(30), w(30);
        for (auto& v : f) v = 0.1 + u(rng);
        const double s = std::accumulate(f.begin(), f.end(), 0.0);
        for (auto& v : f) v /= s;
        for (auto& v : w) v = u(rng);
        const auto b = maximize_over_ball(w, f, alpha, 0.05);
        EXPECT_TRUE(b.active) << b.diagnostic;
        EXPECT_NEAR(std::accumulate(b.g.begin(), b.g.end(), 0.0), 1.0, 1e-14);
        EXPECT_LE(discrete_divergence(b.g, f, alpha), 0.05 + 1e-8);
        EXPECT_GT(b.value, dot(w, f));
        for (double v : b.g) EXPECT_GE(v, 0.0);
    }
}

TEST(MaximizeOverBall, DualMonotonicity) {
    // Larger radii correspond to smaller multipliers and larger objective values.
    const std::vector<double> f{0.25, 0.25, 0.25, 0.25}, w{0.0, 0.3, 0.6, 1.0};
    double prev_lambda = INFINITY, prev_value = -INFINITY;
    for (double eps : {0.01, 0.05, 0.1, 0.2}) {
        const auto b = maximize_over_ball(w, f, 2.0, eps);
        EXPECT_LT(b.lambda, prev_lambda);
        EXPECT_GT(b.value, prev_value);
        prev_lambda = b.lambda;
        prev_value = b.value;
    }
}

TEST(MaximizeOverBall, BeatsRandomFeasiblePoints) {
    const std::vector<double> f{0.1, 0.4, 0.3, 0.2}, w{0.9, 0.1, 0.5, 0.3};
    const auto best = maximize_over_ball(w, f, 4.0, 0.05);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd(0.0, 0.05);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> g(4);
        double s = 0.0;
        for (std::size_t j = 0; j < 4; ++j) s += (g[j] = std::max(1e-6, f[j] * (1.0 + nd(rng))));
        for (auto& v : g) v /= s;
        if (discrete_divergence(g, f, 4.0) <= 0.05) {
            EXPECT_LE(dot(w, g), best.value + 1e-12);
        }
    }
}

TEST(MaximizeOverBall, MatchesTheSolverOnBinnedProblem) {
    const DivergenceSpec spec{4.0, 1.0, 0.02, 0.03};
    const auto p = discretize(fixtures::mixture_problem(), 50, spec);
    const auto bn = p.as_nominals();
    const auto s = solve_thresholds(spec, bn);
    const auto q = error_probs(s.delta_hat, s.g0_hat, s.g1_hat, 1.0, bn.grid);
    EXPECT_NEAR(maximize_over_ball(s.delta_hat, p.f0, 4.0, 0.02).value, q.p_false_alarm, 1e-3);
}

TEST(LrtRule, TiesAreRandomized) {
    const auto d = lrt_rule(std::vector<double>{0.5, 0.2, 0.1}, std::vector<double>{0.1, 0.2, 0.5}, 1.0);
    EXPECT_EQ(d, (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(AlternatingSaddle, ZeroRadiiStopAtTheNominalLrt) {
    const auto p = discretize(fixtures::gaussian_problem(), 30, {0.5, 1.0, 0.0, 0.0});
    const auto r = alternating_saddle(p, 10);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_EQ(r.rule, lrt_rule(p.f0, p.f1, 1.0));
}

TEST(AlternatingSaddle, AgreesWithTheSolverAndIsMonotone) {
    for (double rho : {1.0, 1.2}) {
        const DivergenceSpec spec{4.0, rho, 0.02, 0.03};
        const auto p = discretize(fixtures::mixture_problem(), 50, spec);
        const auto bn = p.as_nominals();
        const auto s = solve_thresholds(spec, bn);
        const auto q = error_probs(s.delta_hat, s.g0_hat, s.g1_hat, rho, bn.grid);
        const auto r = alternating_saddle(p, 500);
        EXPECT_TRUE(r.converged) << r.diagnostic;
        EXPECT_NEAR(r.p_error, q.p_error, 1e-3);
        for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1] + 1e-12);
    }
}

TEST(AlternatingSaddle, FixedPointSurvivesPerturbations) {
    const DivergenceSpec spec{0.5, 1.0, 0.02, 0.02};
    const auto p = discretize(fixtures::gaussian_problem(), 40, spec);
    const auto r = alternating_saddle(p, 500);
    const double pi0 = 0.5, pi1 = 0.5;
    auto pe = [&](std::span<const double> d, std::span<const double> g0, std::span<const double> g1) {
        double v = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j) v += pi0 * d[j] * g0[j] + pi1 * (1.0 - d[j]) * g1[j];
        return v;
    };
    const double value = pe(r.rule, r.g0, r.g1);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> d(r.rule);
        for (auto& v : d) v = std::clamp(v + u(rng), 0.0, 1.0);
        EXPECT_GE(pe(d, r.g0, r.g1), value - 1e-6);
        std::vector<double> g0(p.f0);
        for (auto& v : g0) v *= 1.0 + u(rng);
        const double s = std::accumulate(g0.begin(), g0.end(), 0.0);
        for (auto& v : g0) v /= s;
        if (discrete_divergence(g0, p.f0, 0.5) <= 0.02) {
            EXPECT_LE(pe(r.rule, g0, r.g1), value + 1e-6);
        }
    }
}
