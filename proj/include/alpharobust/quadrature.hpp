#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace alpharobust {

/// Discretized integration measure.
///
/// `trapezoid` grids approximate Lebesgue measure on [y_min, y_max] with the
/// composite trapezoid rule; region-restricted integrals split boundary cells
/// at the interpolated crossing point of the likelihood ratio. `point_mass` grids carry a
/// plain weighted counting measure (binned problems) and are never split.
class QuadratureGrid {
public:
    enum class Rule { trapezoid, point_mass };

    /// Uniform trapezoid grid with `count` points on [y_min, y_max].
    static QuadratureGrid uniform(double y_min, double y_max, std::size_t count);
    /// Trapezoid grid on arbitrary strictly increasing points.
    static QuadratureGrid from_points(std::vector<double> points);
    /// Counting measure with the given atoms (weights default to 1).
    static QuadratureGrid point_masses(std::vector<double> points,
                                       std::vector<double> weights = {});

    std::span<const double> points() const { return points_; }
    std::span<const double> weights() const { return weights_; }
    std::size_t count() const { return points_.size(); }
    double y_min() const { return points_.front(); }
    double y_max() const { return points_.back(); }
    Rule rule() const { return rule_; }

    /// True when points are symmetric about zero (y_i == -y_{n-1-i} to 1e-12).
    bool is_symmetric() const;

private:
    QuadratureGrid(std::vector<double> points, std::vector<double> weights, Rule rule)
        : points_(std::move(points)), weights_(std::move(weights)), rule_(rule) {}

    std::vector<double> points_;
    std::vector<double> weights_;
    Rule rule_;
};

/// Weighted sum of grid values. Throws on length mismatch.
double integrate(std::span<const double> values, const QuadratureGrid& grid);

/// Integral of the linear interpolant of `values` over [a, b] ∩ [y_min, y_max].
/// For point-mass grids, sums atoms with a <= y <= b.
double integrate_interval(std::span<const double> values, const QuadratureGrid& grid,
                          double a, double b);

/// Piecewise-linear function sampled on grid points.
class TabulatedFunction {
public:
    TabulatedFunction() = default;
    TabulatedFunction(std::vector<double> points, std::vector<double> values);

    double operator()(double y) const;  ///< linear interpolation, flat outside
    std::span<const double> points() const { return points_; }
    std::span<const double> values() const { return values_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

private:
    std::vector<double> points_;
    std::vector<double> values_;
};

/// Region of the nominal likelihood-ratio axis cut by two thresholds.
enum class Region : int { lower = 1, middle = 2, upper = 3 };

inline Region classify(double l, double lo, double hi) {
    if (l < lo) return Region::lower;
    if (l > hi) return Region::upper;
    return Region::middle;
}

/// Visits the quadrature nodes of a region-split integral.
///
/// `visit(region, l, f0, f1, weight)` is called so that the sum of
/// weight * h(region, l, f0, f1) over all calls is the region-aware integral
/// of h. On trapezoid grids, cells in which `l` crosses `lo` or `hi` are split
/// at the crossing point and each sub-cell takes the region of its midpoint.
/// Where both densities are positive at both cell ends, the densities are
/// interpolated geometrically, so log l is linear across the cell, the split
/// node carries l = f1/f0 equal to the threshold, and mirrored problems stay
/// exactly mirrored. Otherwise (l, f0, f1) are interpolated linearly.
/// Point-mass grids visit each atom once with its weight.
template <class Visit>
void for_each_region_node(const QuadratureGrid& grid, std::span<const double> l,
                          std::span<const double> f0, std::span<const double> f1, double lo,
                          double hi, Visit&& visit) {
    const auto pts = grid.points();
    const std::size_t n = pts.size();
    if (grid.rule() == QuadratureGrid::Rule::point_mass) {
        const auto w = grid.weights();
        for (std::size_t i = 0; i < n; ++i) visit(classify(l[i], lo, hi), l[i], f0[i], f1[i], w[i]);
        return;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = pts[i + 1] - pts[i];
        const double la = l[i], lb = l[i + 1];
        if (!std::isfinite(la) || !std::isfinite(lb)) {
            visit(classify(la, lo, hi), la, f0[i], f1[i], 0.5 * h);
            visit(classify(lb, lo, hi), lb, f0[i + 1], f1[i + 1], 0.5 * h);
            continue;
        }
        const bool geometric = f0[i] > 0.0 && f0[i + 1] > 0.0 && f1[i] > 0.0 && f1[i + 1] > 0.0;
        // Position of a level crossing, in the interpolation the cell uses.
        auto crossing = [&](double t) {
            return geometric ? std::log(t / la) / std::log(lb / la) : (t - la) / (lb - la);
        };
        double cuts[4] = {0.0, 0.0, 0.0, 1.0};
        int nc = 1;
        for (double t : {lo, hi}) {
            if ((la - t) * (lb - t) < 0.0) cuts[nc++] = crossing(t);
        }
        cuts[nc] = 1.0;
        if (nc == 3 && cuts[1] > cuts[2]) std::swap(cuts[1], cuts[2]);
        if (nc == 1) {
            const Region r = classify(0.5 * (la + lb), lo, hi);
            visit(r, la, f0[i], f1[i], 0.5 * h);
            visit(r, lb, f0[i + 1], f1[i + 1], 0.5 * h);
            continue;
        }
        auto node = [&](double t, Region r, double w) {
            if (t == 0.0) return visit(r, la, f0[i], f1[i], w);
            if (t == 1.0) return visit(r, lb, f0[i + 1], f1[i + 1], w);
            if (geometric) {
                const double a = f0[i] * std::pow(f0[i + 1] / f0[i], t);
                const double b = f1[i] * std::pow(f1[i + 1] / f1[i], t);
                return visit(r, b / a, a, b, w);
            }
            visit(r, la + t * (lb - la), f0[i] + t * (f0[i + 1] - f0[i]),
                  f1[i] + t * (f1[i + 1] - f1[i]), w);
        };
        for (int s = 0; s < nc; ++s) {
            const double ta = cuts[s], tb = cuts[s + 1];
            if (tb <= ta) continue;
            // Classify by the midpoint's likelihood ratio in the cell's interpolation.
            const double tm = 0.5 * (ta + tb);
            const double lm = geometric ? la * std::pow(lb / la, tm) : la + tm * (lb - la);
            const Region r = classify(lm, lo, hi);
            const double w = 0.5 * h * (tb - ta);
            node(ta, r, w);
            node(tb, r, w);
        }
    }
}

/// Integrates N region-dependent integrands in one pass over the nodes of
/// `for_each_region_node`. The callback returns the N integrand values.
template <std::size_t N, class Fn>
std::array<double, N> integrate_by_region(const QuadratureGrid& grid,
                                          std::span<const double> l,
                                          std::span<const double> f0,
                                          std::span<const double> f1, double lo,
                                          double hi, Fn&& fn) {
    std::array<double, N> acc{};
    for_each_region_node(grid, l, f0, f1, lo, hi,
                         [&](Region r, double lv, double a, double b, double w) {
                             const auto v = fn(r, lv, a, b);
                             for (std::size_t j = 0; j < N; ++j) acc[j] += w * v[j];
                         });
    return acc;
}

}  // namespace alpharobust
