#include <gtest/gtest.h>

#include <cmath>

#include "alpharobust/errors.hpp"
#include "alpharobust/quadrature.hpp"

using namespace alpharobust;

TEST(QuadratureGrid, UniformWeightsSumToLength) {
    const auto g = QuadratureGrid::uniform(-3.0, 5.0, 101);
    double s = 0.0;
    for (double w : g.weights()) s += w;
    EXPECT_NEAR(s, 8.0, 1e-12 * 8.0);
    EXPECT_EQ(g.count(), 101u);
}

TEST(QuadratureGrid, RejectsTooFewPoints) {
    EXPECT_THROW(QuadratureGrid::uniform(0.0, 1.0, 2), Error);
    EXPECT_THROW(QuadratureGrid::from_points({0.0, 1.0}), Error);
}

TEST(QuadratureGrid, RejectsNonIncreasingPoints) {
    EXPECT_THROW(QuadratureGrid::from_points({0.0, 1.0, 1.0}), Error);
}

TEST(QuadratureGrid, SymmetryFlag) {
    EXPECT_TRUE(QuadratureGrid::uniform(-2.0, 2.0, 41).is_symmetric());
    EXPECT_FALSE(QuadratureGrid::uniform(-2.0, 3.0, 41).is_symmetric());
}

TEST(Integrate, ConstantOnUnitInterval) {
    const auto g = QuadratureGrid::uniform(0.0, 1.0, 11);
    std::vector<double> one(11, 1.0);
    EXPECT_NEAR(integrate(one, g), 1.0, 1e-15);
}

TEST(Integrate, ExactForPiecewiseLinear) {
    const auto g = QuadratureGrid::from_points({0.0, 0.3, 1.0, 2.5});
    std::vector<double> v;
    for (double y : g.points()) v.push_back(2.0 * y - 1.0);
    EXPECT_NEAR(integrate(v, g), 2.5 * 2.5 - 2.5, 1e-14);
}

TEST(Integrate, LengthMismatchThrows) {
    const auto g = QuadratureGrid::uniform(0.0, 1.0, 5);
    std::vector<double> v(4, 1.0);
    EXPECT_THROW(integrate(v, g), Error);
}

TEST(Integrate, PointMassesAreWeightedSums) {
    const auto g = QuadratureGrid::point_masses({1.0, 2.0, 3.0}, {0.5, 1.0, 2.0});
    std::vector<double> v{2.0, 3.0, 4.0};
    EXPECT_DOUBLE_EQ(integrate(v, g), 1.0 + 3.0 + 8.0);
    EXPECT_DOUBLE_EQ(integrate_interval(v, g, 1.5, 3.0), 3.0 + 8.0);
}

TEST(Integrate, IntervalOfLinearInterpolant) {
    const auto g = QuadratureGrid::uniform(0.0, 4.0, 5);
    std::vector<double> v{0.0, 1.0, 2.0, 3.0, 4.0};
    EXPECT_NEAR(integrate_interval(v, g, 0.5, 2.25), (2.25 * 2.25 - 0.25) / 2.0, 1e-14);
    EXPECT_NEAR(integrate_interval(v, g, -3.0, 10.0), 8.0, 1e-14);
}

TEST(TabulatedFunction, InterpolatesAndIsFlatOutside) {
    const TabulatedFunction f({0.0, 1.0, 2.0}, {1.0, 3.0, 2.0});
    EXPECT_DOUBLE_EQ(f(0.5), 2.0);
    EXPECT_DOUBLE_EQ(f(1.5), 2.5);
    EXPECT_DOUBLE_EQ(f(-1.0), 1.0);
    EXPECT_DOUBLE_EQ(f(5.0), 2.0);
}

TEST(Classify, TiesBelongToTheMiddleRegion) {
    EXPECT_EQ(classify(0.5, 0.5, 2.0), Region::middle);
    EXPECT_EQ(classify(2.0, 0.5, 2.0), Region::middle);
    EXPECT_EQ(classify(0.49, 0.5, 2.0), Region::lower);
    EXPECT_EQ(classify(2.01, 0.5, 2.0), Region::upper);
}

namespace {

struct Pair {
    QuadratureGrid grid;
    std::vector<double> f0, f1, l;
};

Pair shifted_gaussians(std::size_t count) {
    Pair p{QuadratureGrid::uniform(-4.0, 4.0, count), {}, {}, {}};
    for (double y : p.grid.points()) {
        p.f0.push_back(std::exp(-0.5 * (y + 1) * (y + 1)));
        p.f1.push_back(std::exp(-0.5 * (y - 1) * (y - 1)));
        p.l.push_back(p.f1.back() / p.f0.back());
    }
    return p;
}

double split_total(const Pair& p, double lo, double hi) {
    const auto parts = integrate_by_region<3>(p.grid, p.l, p.f0, p.f1, lo, hi,
                                              [](Region r, double, double a, double) {
                                                  std::array<double, 3> v{};
                                                  v[static_cast<int>(r) - 1] = a;
                                                  return v;
                                              });
    return parts[0] + parts[1] + parts[2];
}

}  // namespace

TEST(RegionSplit, NoSplitReproducesTheTrapezoidRule) {
    const auto p = shifted_gaussians(201);
    EXPECT_NEAR(split_total(p, 1e-9, 1e9), integrate(p.f0, p.grid), 1e-14);
}

TEST(RegionSplit, SplitCellsConvergeToTheTrapezoidRule) {
    // Split cells use the geometric interpolant, so the total differs from
    // the plain trapezoid rule by a second-order term that vanishes with h.
    const auto coarse = shifted_gaussians(201), fine = shifted_gaussians(401);
    const double ec = std::abs(split_total(coarse, 0.37, 2.9) - integrate(coarse.f0, coarse.grid));
    const double ef = std::abs(split_total(fine, 0.37, 2.9) - integrate(fine.f0, fine.grid));
    EXPECT_LT(ec, 1e-5);
    EXPECT_LT(ef, 0.3 * ec);
}

TEST(RegionSplit, SplitNodesSitExactlyOnTheThreshold) {
    const auto g = QuadratureGrid::uniform(-4.0, 4.0, 81);
    std::vector<double> f0, f1, l;
    for (double y : g.points()) {
        f0.push_back(std::exp(-0.5 * (y + 1) * (y + 1)));
        f1.push_back(std::exp(-0.5 * (y - 1) * (y - 1)));
        l.push_back(f1.back() / f0.back());
    }
    const double lo = 0.731, hi = 1.913;
    int hits = 0;
    for_each_region_node(g, l, f0, f1, lo, hi, [&](Region, double ln, double a, double b, double) {
        if (std::abs(ln - lo) < 1e-9 || std::abs(ln - hi) < 1e-9) {
            ++hits;
            EXPECT_NEAR(b / a, ln, 1e-12 * ln);
        }
    });
    EXPECT_GE(hits, 4);
}
