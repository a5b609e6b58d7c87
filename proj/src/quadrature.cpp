#include "alpharobust/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "alpharobust/errors.hpp"

namespace alpharobust {

namespace {

std::vector<double> trapezoid_weights(const std::vector<double>& pts) {
    std::vector<double> w(pts.size(), 0.0);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double h = pts[i + 1] - pts[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

void check_increasing(const std::vector<double>& pts, std::size_t min_count) {
    if (pts.size() < min_count)
        fail(ErrorKind::invalid_argument,
             "grid needs at least " + std::to_string(min_count) + " points");
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (!(pts[i + 1] > pts[i]) || !std::isfinite(pts[i]) || !std::isfinite(pts[i + 1]))
            fail(ErrorKind::invalid_argument, "grid points must be finite and strictly increasing");
    }
}

}  // namespace

QuadratureGrid QuadratureGrid::uniform(double y_min, double y_max, std::size_t count) {
    if (!(y_max > y_min) || count < 3)
        fail(ErrorKind::invalid_argument, "uniform grid needs y_max > y_min and count >= 3");
    std::vector<double> pts(count);
    const double h = (y_max - y_min) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) pts[i] = y_min + h * static_cast<double>(i);
    pts.back() = y_max;
    // Symmetric ranges get exactly mirrored points so that f(-y) lookups are exact.
    if (std::abs(y_min + y_max) <= 1e-15 * (y_max - y_min)) {
        for (std::size_t i = 0; i < count / 2; ++i) pts[count - 1 - i] = -pts[i];
        if (count % 2 == 1) pts[count / 2] = 0.0;
    }
    auto w = trapezoid_weights(pts);
    return QuadratureGrid(std::move(pts), std::move(w), Rule::trapezoid);
}

QuadratureGrid QuadratureGrid::from_points(std::vector<double> points) {
    check_increasing(points, 3);
    auto w = trapezoid_weights(points);
    return QuadratureGrid(std::move(points), std::move(w), Rule::trapezoid);
}

QuadratureGrid QuadratureGrid::point_masses(std::vector<double> points,
                                            std::vector<double> weights) {
    check_increasing(points, 2);
    if (weights.empty()) weights.assign(points.size(), 1.0);
    if (weights.size() != points.size())
        fail(ErrorKind::invalid_argument, "point-mass weights must match point count");
    for (double w : weights)
        if (!(w > 0.0)) fail(ErrorKind::invalid_argument, "point-mass weights must be positive");
    return QuadratureGrid(std::move(points), std::move(weights), Rule::point_mass);
}

bool QuadratureGrid::is_symmetric() const {
    const std::size_t n = points_.size();
    const double scale = std::max(std::abs(points_.front()), std::abs(points_.back()));
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(points_[i] + points_[n - 1 - i]) > 1e-12 * scale) return false;
    }
    return true;
}

double integrate(std::span<const double> values, const QuadratureGrid& grid) {
    if (values.size() != grid.count())
        fail(ErrorKind::invalid_argument,
             "integrate: " + std::to_string(values.size()) + " values for a grid of " +
                 std::to_string(grid.count()));
    const auto w = grid.weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += w[i] * values[i];
    return acc;
}

double integrate_interval(std::span<const double> values, const QuadratureGrid& grid,
                          double a, double b) {
    if (values.size() != grid.count())
        fail(ErrorKind::invalid_argument, "integrate_interval: length mismatch");
    const auto pts = grid.points();
    if (grid.rule() == QuadratureGrid::Rule::point_mass) {
        const auto w = grid.weights();
        double acc = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (pts[i] >= a && pts[i] <= b) acc += w[i] * values[i];
        return acc;
    }
    a = std::max(a, pts.front());
    b = std::min(b, pts.back());
    if (!(b > a)) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double ya = pts[i], yb = pts[i + 1];
        if (yb <= a || ya >= b) continue;
        const double lo = std::max(ya, a), hi = std::min(yb, b);
        const double h = yb - ya;
        const double va = values[i] + (values[i + 1] - values[i]) * (lo - ya) / h;
        const double vb = values[i] + (values[i + 1] - values[i]) * (hi - ya) / h;
        acc += 0.5 * (hi - lo) * (va + vb);
    }
    return acc;
}

TabulatedFunction::TabulatedFunction(std::vector<double> points, std::vector<double> values)
    : points_(std::move(points)), values_(std::move(values)) {
    if (points_.size() != values_.size() || points_.size() < 2)
        fail(ErrorKind::invalid_argument, "tabulated function needs >= 2 matching points/values");
    for (std::size_t i = 0; i + 1 < points_.size(); ++i)
        if (!(points_[i + 1] > points_[i]))
            fail(ErrorKind::invalid_argument, "tabulated function points must increase");
}

double TabulatedFunction::operator()(double y) const {
    if (y <= points_.front()) return values_.front();
    if (y >= points_.back()) return values_.back();
    const auto it = std::upper_bound(points_.begin(), points_.end(), y);
    const std::size_t j = static_cast<std::size_t>(it - points_.begin());
    const double ya = points_[j - 1], yb = points_[j];
    const double t = (y - ya) / (yb - ya);
    return values_[j - 1] + t * (values_[j] - values_[j - 1]);
}

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid argument";
        case ErrorKind::support_violation: return "support violation";
        case ErrorKind::degenerate_region: return "degenerate region";
        case ErrorKind::parametric_infeasible: return "parametric form infeasible";
        case ErrorKind::infeasible_radius: return "infeasible robustness parameters";
        case ErrorKind::no_convergence: return "no convergence";
        case ErrorKind::precondition: return "precondition violated";
    }
    return "unknown";
}

}  // namespace alpharobust
