#include <gtest/gtest.h>

#include <cmath>

#include "alpharobust/errors.hpp"
#include "alpharobust/limits.hpp"
#include "fixtures.hpp"

using namespace alpharobust;

namespace {

// The grid stays inside the common support of both truncated nominals, which
// orders above one require.
const NominalPair& gaussians() {
    static const NominalPair n = fixtures::gaussian_problem(3001, 7.5);
    return n;
}

}  // namespace

TEST(Hellinger, MaximumEqualRadius) {
    EXPECT_NEAR(hellinger_eps_max(0.0), 4.0 - 2.0 * std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(hellinger_eps_max(std::exp(-0.5)), 0.41499717186986, 1e-12);
    EXPECT_NEAR(hellinger_eps_max(1.0), 0.0, 1e-15);
}

TEST(Hellinger, RootIsSymmetric) {
    EXPECT_DOUBLE_EQ(hellinger_root_a(0.1, 0.3), hellinger_root_a(0.3, 0.1));
}

TEST(Hellinger, RoundTripOnTheDiagonal) {
    for (int i = 0; i < 20; ++i) {
        const double eps = (4.0 - 2.0 * std::sqrt(2.0)) * (i + 0.5) / 20.0;
        EXPECT_NEAR(hellinger_eps_max(hellinger_root_a(eps, eps)), eps, 1e-10);
    }
}

TEST(Hellinger, OtherRadiusLiesOnTheSameCurve) {
    const double a = 0.4;
    for (double e0 : {0.05, 0.2, 0.5}) {
        const double e1 = hellinger_eps_other(e0, a);
        EXPECT_NEAR(hellinger_root_a(e0, e1), a, 1e-10);
    }
}

TEST(Hellinger, RejectsOutOfRangeArguments) {
    EXPECT_THROW(hellinger_root_a(-0.1, 0.1), Error);
    EXPECT_THROW(hellinger_root_a(9.0, 0.1), Error);
}

TEST(Boundary, GeneralSolverMatchesClosedFormAtHalfOrder) {
    const double a = std::exp(-0.5);
    for (double e0 : {0.02, 0.1, 0.3, 0.6, 1.0}) {
        const auto b = max_eps_general(gaussians(), 0.5, 1.0, 0, e0);
        EXPECT_NEAR(b.eps1, hellinger_eps_other(e0, a), 1e-6);
        EXPECT_LT(b.residual, 1e-8);
    }
}

TEST(Boundary, DiagonalAtHalfOrder) {
    const auto b = max_eps_general(gaussians(), 0.5, 1.0, 0, hellinger_eps_max(std::exp(-0.5)));
    EXPECT_NEAR(b.eps1, b.eps0, 1e-7);
}

TEST(Boundary, EndpointsAreTheNominalDivergences) {
    const auto b0 = boundary_at(gaussians(), 4.0, 1.0, 0.0);
    EXPECT_NEAR(b0.eps0, 0.0, 1e-12);
    const auto b1 = boundary_at(gaussians(), 4.0, 1.0, 1.0);
    EXPECT_NEAR(b1.eps1, 0.0, 1e-12);
}

TEST(Boundary, RadiusBeyondReachIsInfeasible) {
    try {
        max_eps_general(gaussians(), 0.5, 1.0, 0, 3.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::infeasible_radius);
    }
}

TEST(ValidateEps, InsideAndOutside) {
    const auto in = validate_eps(gaussians(), {0.5, 1.0, 0.1, 0.1});
    EXPECT_TRUE(in.feasible);
    EXPECT_GT(in.margin, 0.0);
    const auto out = validate_eps(gaussians(), {0.5, 1.0, 0.5, 0.5});
    EXPECT_FALSE(out.feasible);
    EXPECT_LT(out.margin, 0.0);
}

TEST(Surface, HellingerClosedFormMask) {
    const auto rep = eps_surface(0.5, 21);
    EXPECT_EQ(rep.mode, FeasibilityReport::Mode::hellinger);
    ASSERT_EQ(rep.cells.size(), 21u * 21u);
    for (const auto& c : rep.cells) {
        if (c.eps0 == 0.0 && c.eps1 == 0.0) {
            EXPECT_TRUE(c.feasible);
        }
        if (c.feasible) {
            EXPECT_GE(c.a, 0.0);
        }
    }
}

TEST(Surface, GeneralModeNeedsNominals) {
    EXPECT_THROW(eps_surface(4.0, 11), Error);
    const auto rep = eps_surface(4.0, 11, gaussians());
    EXPECT_EQ(rep.mode, FeasibilityReport::Mode::general);
    EXPECT_FALSE(rep.pairs.empty());
}
