#include "alpharobust/lfd_solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "alpharobust/errors.hpp"
#include "alpharobust/limits.hpp"
#include "roots.hpp"

namespace alpharobust {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

/// Region-2 profile B(l) with B(ρ l_l) = 1 and B(ρ l_u) = k; NaN when the
/// base of the fractional power is not positive.
double bracket(double l, ThresholdPair t, double alpha, double rho, double k) {
    // A collapsed middle region is the single level l = ρ l_l, where the
    // profile continues the lower region.
    if (t.l_l == t.l_u) return 1.0;
    const double a1 = alpha - 1.0;
    const double kp = std::pow(k, a1);
    const double ll = std::pow(t.l_l, a1), lu = std::pow(t.l_u, a1);
    const double num = kp * (ll - lu);
    const double den = ll - kp * lu + (kp - 1.0) * std::pow(l / rho, a1);
    const double base = num / den;
    if (!(base > 0.0) || !std::isfinite(base)) return kNaN;
    return std::pow(base, 1.0 / a1);
}

struct Masses {
    std::array<double, 3> f0{};
    std::array<double, 3> f1{};
};

Masses masses_at(const NominalPair& n, double lo, double hi) {
    Masses m;
    for_each_region_node(n.grid, n.l, n.f0, n.f1, lo, hi,
                         [&](Region r, double, double a, double b, double w) {
                             const int i = static_cast<int>(r) - 1;
                             m.f0[i] += w * a;
                             m.f1[i] += w * b;
                         });
    return m;
}

/// Region-2 quadrature node: p = (l/ρ)^{α-1} and the weighted f1 value.
struct MiddleNode {
    double p;
    double f1w;
};

/// Region masses plus the region-2 nodes at fixed thresholds; everything
/// that does not depend on k.
struct Layout {
    Masses m;
    std::vector<MiddleNode> mid;
};

Layout layout_at(const NominalPair& n, ThresholdPair t, double alpha, double rho) {
    Layout out;
    const double a1 = alpha - 1.0;
    for_each_region_node(n.grid, n.l, n.f0, n.f1, rho * t.l_l, rho * t.l_u,
                         [&](Region r, double l, double a, double b, double w) {
                             const int i = static_cast<int>(r) - 1;
                             out.m.f0[i] += w * a;
                             out.m.f1[i] += w * b;
                             if (r == Region::middle && b != 0.0 && w != 0.0)
                                 out.mid.push_back({std::pow(l / rho, a1), w * b});
                         });
    return out;
}

/// Coefficients of the region-2 base num / (c + d·p) for a given k.
struct BaseCoefs {
    double num, c, d;

    BaseCoefs(ThresholdPair t, double alpha, double k) {
        const double a1 = alpha - 1.0;
        const double kp = std::pow(k, a1);
        const double ll = std::pow(t.l_l, a1), lu = std::pow(t.l_u, a1);
        num = kp * (ll - lu);
        c = ll - kp * lu;
        d = kp - 1.0;
    }
    double base(double p) const { return num / (c + d * p); }
};

/// ∫_{I2} B f1 for the given k (NaN when B is undefined somewhere on I2).
double middle_integral(const Layout& lay, ThresholdPair t, double alpha, double k) {
    const BaseCoefs bc(t, alpha, k);
    const double inv = 1.0 / (alpha - 1.0);
    double acc = 0.0;
    for (const auto& node : lay.mid) {
        const double base = bc.base(node.p);
        if (!(base > 0.0) || !std::isfinite(base)) return kNaN;
        acc += std::pow(base, inv) * node.f1w;
    }
    return acc;
}

struct Failure {
    ErrorKind kind;
    std::string message;
};

struct Evaluation {
    bool ok = false;
    Failure failure{ErrorKind::degenerate_region, ""};
    double k = kNaN;
    double z = kNaN;
    std::array<double, 2> r{kNaN, kNaN};
    std::array<double, 2> lr{kNaN, kNaN};  ///< log(lhs / x), the scale-free residuals
    Masses m;

    double norm() const { return ok ? std::hypot(r[0], r[1]) : kNaN; }
    double lnorm() const { return ok ? std::hypot(lr[0], lr[1]) : kNaN; }
};

Evaluation failed(ErrorKind kind, std::string msg) {
    Evaluation e;
    e.failure = {kind, std::move(msg)};
    return e;
}

/// k from the literal ratio; NaN-free only when the ratio is finite and positive.
double literal_k(const Masses& m, ThresholdPair t) {
    const double num = m.f1[0] - t.l_l * m.f0[0];
    const double den = t.l_u * m.f0[2] - m.f1[2];
    return num / den;
}

/// Scale ratio that normalizes both least favorable densities. For ρ = 1 the
/// literal ratio does this; otherwise the region-2 mass of ĝ0 differs from
/// that of ĝ1 by the factor 1/ρ and k solves a scalar equation.
std::optional<double> solve_k(const Layout& lay, ThresholdPair t, double alpha, double rho,
                              double expand, double hint = kNaN) {
    const auto& m = lay.m;
    const double lit = literal_k(m, t);
    if (rho == 1.0) {
        if (lit > 0.0 && std::isfinite(lit)) return lit;
        return std::nullopt;
    }
    const double c0 = t.l_l * m.f0[0] - m.f1[0];
    const double c1 = t.l_u * m.f0[2] - m.f1[2];
    auto delta = [&](double logk) {
        const double k = std::exp(logk);
        return c0 + k * c1 + (1.0 / rho - 1.0) * middle_integral(lay, t, alpha, k);
    };
    const bool warm = hint > 0.0 && std::isfinite(hint);
    const double start = warm ? std::log(hint) : (lit > 0.0 && std::isfinite(lit)) ? std::log(lit) : 0.0;
    const double d0 = delta(start);
    if (std::isfinite(d0)) {
        if (d0 == 0.0) return std::exp(start);
        // Expanding search away from the start; warm starts begin with a
        // small step since the root is usually close.
        const double growth = std::max(expand, 1.1);
        const double first = warm ? 0.02 : std::log(growth);
        for (int dir : {-1, 1}) {
            double prev = start, fprev = d0;
            for (int i = 1; i <= 40; ++i) {
                const double x = start + dir * first * std::pow(growth, i - 1);
                if (std::abs(x - start) > 16.0) break;
                const double fx = delta(x);
                if (!std::isfinite(fx)) break;
                if ((fx < 0.0) != (fprev < 0.0)) {
                    const double a = std::min(prev, x), b = std::max(prev, x);
                    const double fa = a == prev ? fprev : fx, fb = a == prev ? fx : fprev;
                    return std::exp(detail::bracketed_root(delta, a, b, fa, fb));
                }
                prev = x;
                fprev = fx;
            }
        }
    }
    if (auto r = detail::scan_root(delta, -8.0, 8.0, 33)) return std::exp(*r);
    return std::nullopt;
}

Evaluation evaluate(ThresholdPair t, const DivergenceSpec& s, const NominalPair& n,
                    double expand = 2.0, double k_hint = kNaN) {
    if (!(t.l_l > 0.0) || !(t.l_u >= t.l_l) || !std::isfinite(t.l_u))
        return failed(ErrorKind::invalid_argument, "thresholds must satisfy 0 < l_l <= l_u < inf");
    const double alpha = s.alpha, rho = s.rho;
    const double lo = rho * t.l_l, hi = rho * t.l_u;
    const Layout lay = layout_at(n, t, alpha, rho);
    Evaluation e;
    e.m = lay.m;
    if (!(e.m.f0[2] > 0.0))
        return failed(ErrorKind::degenerate_region,
                      "region 3 (l > " + fmt_num(hi) + ") has no mass under f0");
    if (!(e.m.f0[0] > 0.0) && !(e.m.f1[0] > 0.0))
        return failed(ErrorKind::degenerate_region,
                      "region 1 (l < " + fmt_num(lo) + ") has no mass");
    const auto k = solve_k(lay, t, alpha, rho, expand, k_hint);
    if (!k)
        return failed(ErrorKind::degenerate_region,
                      "no positive scale ratio k at l_l = " + fmt_num(t.l_l) +
                          ", l_u = " + fmt_num(t.l_u) + " (k literal = " +
                          fmt_num(literal_k(e.m, t)) + ")");
    e.k = *k;
    const double kk = e.k;
    const BaseCoefs bc(t, alpha, kk);
    const double inv = 1.0 / (alpha - 1.0);
    double mid0 = 0.0, mid1 = 0.0, mid2 = 0.0;
    for (const auto& node : lay.mid) {
        const double base = bc.base(node.p);
        if (!(base > 0.0) || !std::isfinite(base))
            return failed(ErrorKind::parametric_infeasible,
                          "region-2 base is not positive at l_l = " + fmt_num(t.l_l) +
                              ", l_u = " + fmt_num(t.l_u));
        const double B = std::pow(base, inv);
        const double Ba = B * base;  // B^α, since B^(α-1) = base
        mid0 += B * node.f1w;
        mid1 += Ba * node.f1w;
        mid2 += Ba * node.p * node.f1w;
    }
    mid2 /= rho;
    e.z = e.m.f1[0] + kk * e.m.f1[2] + mid0;
    if (!(e.z > 0.0) || !std::isfinite(e.z))
        return failed(ErrorKind::degenerate_region, "normalizer z is not positive");
    const double za = std::pow(e.z, alpha);
    const double lhs0 = (std::pow(t.l_l, alpha) * e.m.f0[0] + mid2 +
                         std::pow(kk * t.l_u, alpha) * e.m.f0[2]) /
                        za;
    const double lhs1 = (e.m.f1[0] + mid1 + std::pow(kk, alpha) * e.m.f1[2]) / za;
    const double x0 = x_of(alpha, s.eps0), x1 = x_of(alpha, s.eps1);
    e.r = {lhs0 - x0, lhs1 - x1};
    e.lr = {std::log(lhs0 / x0), std::log(lhs1 / x1)};
    if (!std::isfinite(e.r[0]) || !std::isfinite(e.r[1]) || !std::isfinite(e.lr[0]) ||
        !std::isfinite(e.lr[1]))
        return failed(ErrorKind::parametric_infeasible, "residuals are not finite");
    e.ok = true;
    return e;
}

[[noreturn]] void raise(const Evaluation& e) { fail(e.failure.kind, e.failure.message); }

/// Search box in (u, v) = (log l_l, log l_u).
struct Box {
    double u_lo, v_hi;
};

Box search_box(const NominalPair& n, double rho) {
    const double lmin = n.l_min(), lmax = n.l_max();
    double u_lo = (lmin > 0.0 && std::isfinite(lmin)) ? std::log(lmin / rho) : -30.0;
    double v_hi = (lmax > 0.0 && std::isfinite(lmax)) ? std::log(lmax / rho) : 30.0;
    u_lo = std::clamp(u_lo, -30.0, 0.0);
    v_hi = std::clamp(v_hi, 0.0, 30.0);
    return {u_lo * (1.0 - 1e-9), v_hi * (1.0 - 1e-9)};
}

struct Point {
    double u, v;
    Evaluation e;
};

Point eval_point(double u, double v, const DivergenceSpec& s, const NominalPair& n,
                 const SolverConfig& cfg, double k_hint = kNaN) {
    return {u, v, evaluate({std::exp(u), std::exp(v)}, s, n, cfg.bracket_expand, k_hint)};
}

/// Damped Newton in (u, v) with a central-difference Jacobian. Steps and the
/// line search use the log-ratio residuals, whose scale does not blow up
/// with |α|; convergence is judged on the plain residuals.
Point newton(Point p, const Box& box, const DivergenceSpec& s, const NominalPair& n,
             const SolverConfig& cfg, int& iterations, std::vector<std::string>& diag) {
    constexpr double h = 1e-6;
    for (; iterations < cfg.max_iter; ++iterations) {
        if (p.e.norm() < 0.01 * cfg.root_tol) break;
        const double lnorm = p.e.lnorm();
        Eigen::Matrix2d J;
        bool jac_ok = true;
        for (int c = 0; c < 2 && jac_ok; ++c) {
            const double du = c == 0 ? h : 0.0, dv = c == 1 ? h : 0.0;
            const auto plus = eval_point(p.u + du, p.v + dv, s, n, cfg, p.e.k);
            const auto minus = eval_point(p.u - du, p.v - dv, s, n, cfg, p.e.k);
            for (int r = 0; r < 2; ++r) {
                if (plus.e.ok && minus.e.ok) J(r, c) = (plus.e.lr[r] - minus.e.lr[r]) / (2 * h);
                else if (plus.e.ok) J(r, c) = (plus.e.lr[r] - p.e.lr[r]) / h;
                else if (minus.e.ok) J(r, c) = (p.e.lr[r] - minus.e.lr[r]) / h;
                else jac_ok = false;
            }
        }
        if (!jac_ok || !J.allFinite() || std::abs(J.determinant()) < 1e-300) {
            diag.push_back("newton: singular Jacobian at residual " + fmt_num(p.e.norm()));
            break;
        }
        Eigen::Vector2d d = J.fullPivLu().solve(-Eigen::Vector2d(p.e.lr[0], p.e.lr[1]));
        const double dmax = d.cwiseAbs().maxCoeff();
        if (dmax > 1.0) d *= 1.0 / dmax;
        bool accepted = false;
        for (double lam = 1.0; lam > 1e-12; lam *= 0.5) {
            const double u = std::clamp(p.u + lam * d(0), box.u_lo, 0.0);
            const double v = std::clamp(p.v + lam * d(1), 0.0, box.v_hi);
            auto q = eval_point(u, v, s, n, cfg, p.e.k);
            if (q.e.ok && q.e.lnorm() < (1.0 - 1e-4 * lam) * lnorm) {
                p = std::move(q);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (p.e.norm() >= cfg.root_tol)
                diag.push_back("newton: line search stalled at residual " + fmt_num(p.e.norm()));
            break;
        }
    }
    return p;
}

/// Nested one-dimensional solves: for each v the inner search zeroes one
/// residual in u, and the outer search zeroes the other along that curve.
std::optional<Point> nested_bisection(const Box& box, const DivergenceSpec& s, const NominalPair& n,
                                      const SolverConfig& cfg) {
    constexpr int kScan = 48;
    for (int inner = 0; inner < 2; ++inner) {
        const int outer = 1 - inner;
        auto inner_u = [&](double v) -> std::optional<double> {
            auto f = [&](double w) {
                const double u = box.u_lo * w * w;
                const auto e = evaluate({std::exp(u), std::exp(v)}, s, n, cfg.bracket_expand);
                return e.ok ? e.r[inner] : kNaN;
            };
            if (auto w = detail::scan_root(f, 1.0, 0.0, kScan, 1e-14)) return box.u_lo * *w * *w;
            return std::nullopt;
        };
        auto g = [&](double w) {
            const double v = box.v_hi * w * w;
            const auto u = inner_u(v);
            if (!u) return kNaN;
            const auto e = evaluate({std::exp(*u), std::exp(v)}, s, n, cfg.bracket_expand);
            return e.ok ? e.r[outer] : kNaN;
        };
        if (auto w = detail::scan_root(g, 0.0, 1.0, kScan, 1e-14)) {
            const double v = box.v_hi * *w * *w;
            if (auto u = inner_u(v)) {
                auto p = eval_point(*u, v, s, n, cfg);
                if (p.e.ok) return p;
            }
        }
    }
    return std::nullopt;
}

KktParams to_kkt(ThresholdPair t, double k, double z, double alpha) {
    return KktParams::from_scales(t.l_l / z, k * t.l_u / z, 1.0 / z, k / z, alpha);
}

}  // namespace

KktParams KktParams::from_scales(double c1, double c2, double c3, double c4, double alpha) {
    KktParams p;
    p.c1 = c1;
    p.c2 = c2;
    p.c3 = c3;
    p.c4 = c4;
    const double a1 = alpha - 1.0;
    const double A1 = std::pow(c1, a1), A2 = std::pow(c2, a1);
    const double A3 = std::pow(c3, a1), A4 = std::pow(c4, a1);
    p.lambda0 = (1.0 - alpha) / (A1 - A2);
    p.mu0 = (A1 - 1.0) / (A1 - A2);
    p.lambda1 = (1.0 - alpha) / (A4 - A3);
    p.mu1 = (A4 - 1.0) / (A4 - A3);
    return p;
}

DensityModel RobustSolution::g0_model() const {
    if (grid.rule() != QuadratureGrid::Rule::trapezoid)
        fail(ErrorKind::precondition, "tabulated models need a trapezoid grid");
    return DensityModel::tabulated({grid.points().begin(), grid.points().end()}, g0_hat);
}

DensityModel RobustSolution::g1_model() const {
    if (grid.rule() != QuadratureGrid::Rule::trapezoid)
        fail(ErrorKind::precondition, "tabulated models need a trapezoid grid");
    return DensityModel::tabulated({grid.points().begin(), grid.points().end()}, g1_hat);
}

TabulatedFunction RobustSolution::delta_function() const {
    return TabulatedFunction({grid.points().begin(), grid.points().end()}, delta_hat);
}

std::vector<Region> partition(std::span<const double> l_values, double rho, ThresholdPair t) {
    std::vector<Region> out;
    out.reserve(l_values.size());
    for (double l : l_values) out.push_back(classify(l, rho * t.l_l, rho * t.l_u));
    return out;
}

double k_factor(ThresholdPair t, const NominalPair& nominals, double rho) {
    const auto m = masses_at(nominals, rho * t.l_l, rho * t.l_u);
    const double num = m.f1[0] - t.l_l * m.f0[0];
    const double den = t.l_u * m.f0[2] - m.f1[2];
    const double k = num / den;
    if (!(k > 0.0) || !std::isfinite(k)) {
        std::string which = den == 0.0 ? "region 3 is empty" : num == 0.0 ? "region 1 is empty"
                                                                         : "integrals disagree in sign";
        fail(ErrorKind::degenerate_region, "k = " + fmt_num(k) + ": " + which);
    }
    return k;
}

double normalizing_k(ThresholdPair t, const NominalPair& nominals, double alpha, double rho) {
    check_alpha(alpha);
    const auto k = solve_k(layout_at(nominals, t, alpha, rho), t, alpha, rho, 2.0);
    if (!k) fail(ErrorKind::degenerate_region, "no positive normalizing k at these thresholds");
    return *k;
}

double z_norm(ThresholdPair t, double alpha, double rho, const NominalPair& nominals) {
    const auto e = evaluate(t, {alpha, rho, 0.0, 0.0}, nominals);
    if (!e.ok) raise(e);
    return e.z;
}

double phi1(double l, ThresholdPair t, double alpha, double rho, double k, double z) {
    const double B = bracket(l, t, alpha, rho, k);
    if (!std::isfinite(B))
        fail(ErrorKind::parametric_infeasible, "region-2 base is not positive at l = " + fmt_num(l));
    return B / z;
}

double phi0(double l, ThresholdPair t, double alpha, double rho, double k, double z) {
    return phi1(l, t, alpha, rho, k, z) * l / rho;
}

std::array<double, 2> residuals(ThresholdPair t, const DivergenceSpec& spec,
                                const NominalPair& nominals) {
    spec.validate();
    const auto e = evaluate(t, spec, nominals);
    if (!e.ok) raise(e);
    return e.r;
}

double robust_rule(double l, ThresholdPair t, double alpha, double rho, double k) {
    const double lo = rho * t.l_l, hi = rho * t.l_u;
    if (l < lo) return 0.0;
    if (l > hi) return 1.0;
    if (l == lo) return 0.0;
    if (l == hi) return 1.0;
    const double a1 = alpha - 1.0;
    const double T = std::pow(l / rho, -a1);
    const double ll = std::pow(t.l_l, a1);
    const double kp = std::pow(k, a1);
    const double d = (ll * T - 1.0) / ((ll - kp * std::pow(t.l_u, a1)) * T + kp - 1.0);
    return std::clamp(d, 0.0, 1.0);
}

double robust_rule(double l, const RobustSolution& s) {
    return robust_rule(l, s.thresholds, s.spec.alpha, s.spec.rho, s.k);
}

double robust_lr(double l, ThresholdPair t, double rho) {
    switch (classify(l, rho * t.l_l, rho * t.l_u)) {
        case Region::lower: return l / t.l_l;
        case Region::upper: return l / t.l_u;
        default: return rho;
    }
}

double robust_lr(double l, const RobustSolution& s) { return robust_lr(l, s.thresholds, s.spec.rho); }

RobustSolution materialize(const DivergenceSpec& spec, const NominalPair& n, ThresholdPair t,
                           double k, double z) {
    const double alpha = spec.alpha, rho = spec.rho;
    const double lo = rho * t.l_l, hi = rho * t.l_u;
    RobustSolution s;
    s.spec = spec;
    s.thresholds = t;
    s.k = k;
    s.z = z;
    s.grid = n.grid;
    s.f0 = n.f0;
    s.f1 = n.f1;
    s.l = n.l;
    const std::size_t N = n.l.size();
    s.g0_hat.resize(N);
    s.g1_hat.resize(N);
    s.delta_hat.resize(N);
    s.l_hat.resize(N);
    s.region.resize(N);

    // Scaled densities per region, shared by the grid tabulation and the
    // region-split integrals.
    bool bad_base = false;
    auto lfd = [&](Region r, double l, double a, double b) -> std::pair<double, double> {
        switch (r) {
            case Region::lower: return {t.l_l / z * a, b / z};
            case Region::upper: return {k * t.l_u / z * a, k / z * b};
            default: {
                if (b == 0.0) return {0.0, 0.0};
                const double B = bracket(l, t, alpha, rho, k);
                if (!std::isfinite(B)) bad_base = true;
                return {B / z * b / rho, B / z * b};
            }
        }
    };
    for (std::size_t i = 0; i < N; ++i) {
        const Region r = classify(n.l[i], lo, hi);
        s.region[i] = static_cast<int>(r);
        const auto [g0, g1] = lfd(r, n.l[i], n.f0[i], n.f1[i]);
        s.g0_hat[i] = g0;
        s.g1_hat[i] = g1;
        s.delta_hat[i] = robust_rule(n.l[i], t, alpha, rho, k);
        s.l_hat[i] = g0 > 0.0 ? g1 / g0 : robust_lr(n.l[i], t, rho);
    }

    auto apow = [alpha](double g, double f) {
        if (g > 0.0 && f > 0.0) return std::exp(alpha * std::log(g) + (1.0 - alpha) * std::log(f));
        return 0.0;
    };
    const auto v = integrate_by_region<4>(
        n.grid, n.l, n.f0, n.f1, lo, hi, [&](Region r, double l, double a, double b) {
            const auto [g0, g1] = lfd(r, l, a, b);
            return std::array<double, 4>{g0, g1, apow(g0, a), apow(g1, b)};
        });
    s.mass0 = v[0];
    s.mass1 = v[1];
    const double scale = alpha * (1.0 - alpha);
    s.achieved_eps0 = (1.0 - v[2]) / scale;
    s.achieved_eps1 = (1.0 - v[3]) / scale;
    const auto m = masses_at(n, lo, hi);
    s.region_masses = {m.f0, m.f1};
    s.residual_norm = std::hypot(v[2] - x_of(alpha, spec.eps0), v[3] - x_of(alpha, spec.eps1));

    if (bad_base) s.diagnostics.push_back("region-2 base not positive at some grid points");
    for (std::size_t i = 0; i < N; ++i) {
        if (!(s.g0_hat[i] >= 0.0) || !(s.g1_hat[i] >= 0.0)) {
            s.diagnostics.push_back("positivity audit: negative or undefined density at y = " +
                                    fmt_num(n.grid.points()[i]));
            break;
        }
    }
    if (std::abs(s.mass0 - 1.0) > 1e-6 || std::abs(s.mass1 - 1.0) > 1e-6)
        s.diagnostics.push_back("normalization off: mass0 = " + fmt_num(s.mass0) +
                                ", mass1 = " + fmt_num(s.mass1));
    if (s.achieved_eps0 < 0.0 || s.achieved_eps1 < 0.0)
        s.diagnostics.push_back("negative achieved divergence (alpha = " + fmt_num(alpha) + ")");
    return s;
}

namespace {

/// Start-point scan followed by Newton. The coarse scan uses quadratic
/// spacing toward (1, 1); a second scan zooms on the best coarse cell.
std::optional<Point> scan_and_newton(const DivergenceSpec& spec, const NominalPair& nominals,
                                     const SolverConfig& config, int& iterations,
                                     std::vector<std::string>& diag, std::optional<Point>& best) {
    const Box box = search_box(nominals, spec.rho);
    const int S = std::max(config.scan_size, 2);
    auto scan = [&](auto u_at, auto v_at) {
        double hint = best ? best->e.k : kNaN;
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < S; ++j) {
                auto p = eval_point(u_at(i), v_at(j), spec, nominals, config, hint);
                if (!p.e.ok) continue;
                hint = p.e.k;
                if (!best || p.e.lnorm() < best->e.lnorm()) best = std::move(p);
            }
    };
    auto coarse_u = [&](double i) { const double w = (i + 0.5) / S; return box.u_lo * w * w; };
    auto coarse_v = [&](double j) { const double w = (j + 0.5) / S; return box.v_hi * w * w; };
    scan([&](int i) { return coarse_u(i); }, [&](int j) { return coarse_v(j); });
    if (!best) {
        diag.push_back("start scan found no admissible thresholds");
        return std::nullopt;
    }
    auto index_of = [&](double x, double top) { return std::sqrt(x / top) * S - 0.5; };
    const double iu = index_of(best->u, box.u_lo), iv = index_of(best->v, box.v_hi);
    const double u0 = std::min(coarse_u(std::max(iu - 1.0, -0.5)), 0.0);
    const double u1 = coarse_u(iu + 1.0);
    const double v0 = coarse_v(std::max(iv - 1.0, -0.5));
    const double v1 = std::min(coarse_v(iv + 1.0), box.v_hi);
    scan([&](int i) { return u0 + (u1 - u0) * (i + 0.5) / S; },
         [&](int j) { return v0 + (v1 - v0) * (j + 0.5) / S; });

    auto p = newton(*best, box, spec, nominals, config, iterations, diag);
    if (p.e.norm() < config.root_tol) return p;
    if (p.e.lnorm() < best->e.lnorm()) best = std::move(p);
    return std::nullopt;
}

/// Solves the ρ = 1 problem and follows the solution along a geometric
/// path in ρ to the requested value, halving the step whenever Newton fails.
std::optional<Point> continuation_in_rho(const DivergenceSpec& spec, const NominalPair& nominals,
                                         const SolverConfig& config, int& iterations,
                                         std::vector<std::string>& diag) {
    DivergenceSpec stage = spec;
    stage.rho = 1.0;
    std::optional<Point> best;
    std::vector<std::string> local;
    auto p = scan_and_newton(stage, nominals, config, iterations, local, best);
    if (!p) {
        diag.push_back("rho continuation: no solution at rho = 1");
        return std::nullopt;
    }
    const double target = std::log(spec.rho);
    double at = 0.0, step = target / 4.0;
    SolverConfig stage_cfg = config;
    stage_cfg.max_iter = 40;
    while (at != target) {
        const double next = std::abs(target - at) <= std::abs(step) ? target : at + step;
        stage.rho = next == target ? spec.rho : std::exp(next);
        const Box box = search_box(nominals, stage.rho);
        auto start = eval_point(std::clamp(p->u, box.u_lo, 0.0), std::clamp(p->v, 0.0, box.v_hi),
                                stage, nominals, config, p->e.k);
        int its = 0;
        std::optional<Point> q;
        if (start.e.ok) {
            auto r = newton(start, box, stage, nominals, stage_cfg, its, local);
            if (r.e.norm() < config.root_tol) q = std::move(r);
        }
        iterations += its;
        if (q) {
            p = std::move(q);
            at = next;
            step *= 1.5;
        } else {
            step *= 0.5;
            if (std::abs(step) < 1e-3 * std::abs(target)) {
                diag.push_back("rho continuation stalled at rho = " + fmt_num(std::exp(at)));
                return std::nullopt;
            }
        }
    }
    return p;
}

}  // namespace

RobustSolution solve_thresholds(const DivergenceSpec& spec, const NominalPair& nominals,
                                const SolverConfig& config) {
    spec.validate();
    if (spec.eps0 == 0.0 && spec.eps1 == 0.0) {
        // Both balls are single points: the nominals are their own LFDs.
        auto s = materialize(spec, nominals, ThresholdPair{1.0, 1.0}, 1.0, 1.0);
        s.method = "trivial";
        return s;
    }

    std::vector<std::string> diag;
    int iterations = 0;
    std::string method;
    std::optional<Point> best, sol;
    if (spec.rho != 1.0) {
        sol = continuation_in_rho(spec, nominals, config, iterations, diag);
        method = "rho-continuation";
    }
    if (!sol) {
        sol = scan_and_newton(spec, nominals, config, iterations, diag, best);
        method = "newton";
    }
    if (!sol) {
        method = "nested-bisection";
        const Box box = search_box(nominals, spec.rho);
        if (auto p = nested_bisection(box, spec, nominals, config)) {
            // Polish the bisection result with a few Newton steps.
            SolverConfig polish = config;
            polish.max_iter = 20;
            int extra = 0;
            auto q = newton(*p, box, spec, nominals, polish, extra, diag);
            iterations += extra;
            if (q.e.norm() < config.root_tol) sol = std::move(q);
            else if (!best || p->e.norm() < best->e.norm()) best = std::move(*p);
        }
    }
    if (!sol) {
        const double best_norm = best ? best->e.norm() : kNaN;
        try {
            const auto check = validate_eps(nominals, spec);
            if (!check.feasible && std::isfinite(check.margin))
                fail(ErrorKind::infeasible_radius,
                     "radii (" + fmt_num(spec.eps0) + ", " + fmt_num(spec.eps1) +
                         ") lie outside the feasibility boundary (limits margin " +
                         fmt_num(check.margin) + ")");
        } catch (const Error& err) {
            if (err.kind() == ErrorKind::infeasible_radius) throw;
        }
        std::string msg = "threshold solve did not converge; best residual " + fmt_num(best_norm);
        if (best)
            msg += " at l_l = " + fmt_num(std::exp(best->u)) + ", l_u = " + fmt_num(std::exp(best->v));
        for (const auto& d : diag) msg += "; " + d;
        fail(ErrorKind::no_convergence, msg);
    }

    const ThresholdPair t{std::exp(sol->u), std::exp(sol->v)};
    auto s = materialize(spec, nominals, t, sol->e.k, sol->e.z);
    s.residual_norm = sol->e.norm();
    s.iterations = iterations;
    s.method = method;
    s.diagnostics.insert(s.diagnostics.begin(), diag.begin(), diag.end());
    return s;
}

// ---------------------------------------------------------------------------
// Symmetric fast path

namespace {

struct SymmetricTables {
    std::span<const double> y, l, f1;
    std::size_t first, last;  // valid index range (both densities positive)
};

/// Position where l reaches `value`, with log l interpolated linearly inside
/// cells (the same rule the region-split integrals use).
double inverse_l(const SymmetricTables& s, double value) {
    if (value <= s.l[s.first]) return s.y[s.first];
    if (value >= s.l[s.last]) return s.y[s.last];
    const auto begin = s.l.begin() + static_cast<std::ptrdiff_t>(s.first);
    const auto end = s.l.begin() + static_cast<std::ptrdiff_t>(s.last) + 1;
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(begin, end, value) - s.l.begin()) - 1;
    const double w = std::log(value / s.l[i]) / std::log(s.l[i + 1] / s.l[i]);
    return s.y[i] + w * (s.y[i + 1] - s.y[i]);
}

/// Trapezoid integral over [a, b] of fn(l, f1). Inside partial cells l and f1
/// are interpolated geometrically where positive, linearly otherwise.
template <class Fn>
double integrate_between(const SymmetricTables& s, double a, double b, Fn&& fn) {
    if (!(b > a)) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < s.y.size(); ++i) {
        const double ya = s.y[i], yb = s.y[i + 1];
        const double lo = std::max(a, ya), hi = std::min(b, yb);
        if (!(hi > lo)) continue;
        const bool geometric = s.l[i] > 0.0 && s.l[i + 1] > 0.0 && std::isfinite(s.l[i]) &&
                               std::isfinite(s.l[i + 1]) && s.f1[i] > 0.0 && s.f1[i + 1] > 0.0;
        auto at = [&](double y) {
            if (y == ya) return fn(s.l[i], s.f1[i]);
            if (y == yb) return fn(s.l[i + 1], s.f1[i + 1]);
            const double w = (y - ya) / (yb - ya);
            if (geometric)
                return fn(s.l[i] * std::pow(s.l[i + 1] / s.l[i], w),
                          s.f1[i] * std::pow(s.f1[i + 1] / s.f1[i], w));
            return fn(s.l[i] + w * (s.l[i + 1] - s.l[i]), s.f1[i] + w * (s.f1[i + 1] - s.f1[i]));
        };
        acc += 0.5 * (hi - lo) * (at(lo) + at(hi));
    }
    return acc;
}

}  // namespace

RobustSolution solve_symmetric(double eps, double alpha, double rho, const NominalPair& n,
                               const SolverConfig& config) {
    const DivergenceSpec spec{alpha, rho, eps, eps};
    spec.validate();
    const std::string redirect = "; use solve_thresholds for this problem";
    if (rho != 1.0) fail(ErrorKind::precondition, "symmetric fast path needs rho = 1" + redirect);
    if (n.grid.rule() != QuadratureGrid::Rule::trapezoid || !n.grid.is_symmetric())
        fail(ErrorKind::precondition, "symmetric fast path needs a grid symmetric about 0" + redirect);
    const std::size_t N = n.l.size();
    for (std::size_t i = 0; i < N; ++i)
        if (std::abs(n.f1[i] - n.f0[N - 1 - i]) > 1e-8)
            fail(ErrorKind::precondition, "nominals are not mirror images (f1(y) != f0(-y))" + redirect);
    std::size_t first = N, last = 0;
    for (std::size_t i = 0; i < N; ++i)
        if (n.f0[i] > 0.0 && n.f1[i] > 0.0) {
            first = std::min(first, i);
            last = i;
        }
    if (first >= last) fail(ErrorKind::precondition, "nominals have no common support" + redirect);
    for (std::size_t i = first; i < last; ++i)
        if (!(n.f0[i + 1] > 0.0 && n.f1[i + 1] > 0.0) || !(n.l[i + 1] > n.l[i]))
            fail(ErrorKind::precondition, "likelihood ratio is not strictly increasing" + redirect);

    if (eps == 0.0) return solve_thresholds(spec, n, config);

    const SymmetricTables tab{n.grid.points(), n.l, n.f1, first, last};
    const double a1 = alpha - 1.0;
    const double x = x_of(alpha, eps);
    const double y_lo = n.grid.y_min(), y_hi = n.grid.y_max();

    struct Sums {
        double s1, sa;
    };
    auto sums = [&](double L) -> Sums {
        const double yl = inverse_l(tab, 1.0 / L), yu = inverse_l(tab, L);
        const double P1 = integrate_between(tab, y_lo, yl, [](double, double f) { return f; });
        const double P3 = integrate_between(tab, yu, y_hi, [](double, double f) { return f; });
        const double top = 1.0 + std::pow(L, a1);
        const double Q1 = integrate_between(tab, yl, yu, [&](double l, double f) {
            return std::pow(top / (1.0 + std::pow(l, a1)), 1.0 / a1) * f;
        });
        const double Qa = integrate_between(tab, yl, yu, [&](double l, double f) {
            return std::pow(top / (1.0 + std::pow(l, a1)), alpha / a1) * f;
        });
        return {L * P1 + Q1 + P3, std::pow(L, alpha) * P1 + Qa + P3};
    };
    auto equation = [&](double logL) {
        const auto s = sums(std::exp(logL));
        return s.sa - x * std::pow(s.s1, alpha);
    };

    const double log_max = std::min(std::log(n.l[last]), -std::log(n.l[first]));
    double a = 0.0, fa = equation(0.0);
    std::optional<double> root;
    for (double b = std::min(1e-3, 0.5 * log_max);; b = std::min(2.0 * b, log_max)) {
        const double fb = equation(b);
        if (std::isfinite(fb) && (fb < 0.0) != (fa < 0.0)) {
            root = detail::bracketed_root(equation, a, b, fa, fb, 1e-15, config.max_iter);
            break;
        }
        a = b;
        fa = fb;
        if (b >= log_max) break;
    }
    if (!root) {
        const auto check = validate_eps(n, spec);
        if (!check.feasible && std::isfinite(check.margin))
            fail(ErrorKind::infeasible_radius,
                 "radius " + fmt_num(eps) + " lies outside the feasibility boundary (limits margin " +
                     fmt_num(check.margin) + ")");
        fail(ErrorKind::no_convergence, "symmetric equation has no sign change on the grid");
    }
    const double L = std::exp(*root);
    const auto s = sums(L);
    const double c4 = 1.0 / s.s1;
    const ThresholdPair t{1.0 / L, L};
    const double k = t.l_l, z = t.l_l / c4;
    auto out = materialize(spec, n, t, k, z);
    out.method = "symmetric";
    return out;
}

// ---------------------------------------------------------------------------
// Unreduced four-equation system

double phi1_unreduced(double l, const KktParams& p, double alpha, double rho) {
    const double a1 = alpha - 1.0;
    const double num = p.lambda0 + p.lambda1 + (1.0 - alpha) * (p.mu0 + p.mu1 - 1.0);
    const double den = p.lambda1 + p.lambda0 * std::pow(l / rho, a1);
    const double base = num / den;
    if (!(base > 0.0) || !std::isfinite(base))
        fail(ErrorKind::parametric_infeasible, "multiplier form has a non-positive base");
    return std::pow(base, 1.0 / a1);
}

double delta_unreduced(double l, const KktParams& p, double alpha, double rho) {
    const double t = std::pow(l / rho, 1.0 - alpha);
    const double num = p.lambda0 * (p.lambda1 + (1.0 - alpha) * (p.mu1 - 1.0)) -
                       t * p.lambda1 * (p.lambda0 + (1.0 - alpha) * p.mu0);
    return num / ((alpha - 1.0) * (p.lambda0 + t * p.lambda1));
}

ReducedParams reduce(const KktParams& p) {
    return {{p.c1 / p.c3, p.c2 / p.c4}, p.c4 / p.c3, 1.0 / p.c3};
}

std::array<double, 4> raw_kkt_residuals(const KktParams& p, const DivergenceSpec& spec,
                                        const NominalPair& n) {
    const double alpha = spec.alpha, rho = spec.rho;
    const double lo = rho * p.c1 / p.c3, hi = rho * p.c2 / p.c4;
    bool bad = false;
    const auto v = integrate_by_region<4>(
        n.grid, n.l, n.f0, n.f1, lo, hi, [&](Region r, double l, double a, double b) {
            std::array<double, 4> out{};
            double g0 = 0.0, g1 = 0.0;
            switch (r) {
                case Region::lower: g0 = p.c1 * a; g1 = p.c3 * b; break;
                case Region::upper: g0 = p.c2 * a; g1 = p.c4 * b; break;
                default: {
                    if (b == 0.0) break;
                    double phi = kNaN;
                    try {
                        phi = phi1_unreduced(l, p, alpha, rho);
                    } catch (const Error&) {
                        bad = true;
                    }
                    g1 = phi * b;
                    g0 = phi * b / rho;
                }
            }
            out[0] = g0;
            out[1] = g1;
            out[2] = (g0 > 0.0 && a > 0.0) ? std::exp(alpha * std::log(g0) + (1 - alpha) * std::log(a)) : 0.0;
            out[3] = (g1 > 0.0 && b > 0.0) ? std::exp(alpha * std::log(g1) + (1 - alpha) * std::log(b)) : 0.0;
            return out;
        });
    if (bad) return {kNaN, kNaN, kNaN, kNaN};
    return {v[0] - 1.0, v[1] - 1.0, v[2] - x_of(alpha, spec.eps0), v[3] - x_of(alpha, spec.eps1)};
}

KktParams solve_raw_kkt(const DivergenceSpec& spec, const NominalPair& n, const SolverConfig& config,
                        std::optional<KktParams> initial) {
    spec.validate();
    const double alpha = spec.alpha;
    if (spec.eps0 == 0.0 && spec.eps1 == 0.0) {
        auto p = KktParams::from_scales(1.0, 1.0, 1.0, 1.0, alpha);
        p.lambda0 = p.lambda1 = std::numeric_limits<double>::infinity();
        p.mu0 = p.mu1 = 0.0;
        return p;
    }
    if (!initial) {
        // Start from the reduced solution of a coarser copy of the problem.
        std::optional<RobustSolution> coarse;
        const auto pts = n.grid.points();
        if (n.grid.rule() == QuadratureGrid::Rule::trapezoid && n.grid.count() >= 41) {
            std::vector<double> y, a, b;
            for (std::size_t i = 0; i < pts.size(); i += 4) {
                y.push_back(pts[i]);
                a.push_back(n.f0[i]);
                b.push_back(n.f1[i]);
            }
            try {
                coarse = solve_thresholds(
                    spec, NominalPair::from_values(QuadratureGrid::from_points(y), a, b), config);
            } catch (const Error&) {
            }
        }
        if (!coarse) coarse = solve_thresholds(spec, n, config);
        initial = to_kkt(coarse->thresholds, coarse->k, coarse->z, alpha);
    }

    Eigen::Vector4d x(std::log(initial->c1), std::log(initial->c2), std::log(initial->c3),
                      std::log(initial->c4));
    auto F = [&](const Eigen::Vector4d& q) {
        const auto p = KktParams::from_scales(std::exp(q(0)), std::exp(q(1)), std::exp(q(2)),
                                              std::exp(q(3)), alpha);
        const auto r = raw_kkt_residuals(p, spec, n);
        return Eigen::Vector4d(r[0], r[1], r[2], r[3]);
    };
    Eigen::Vector4d r = F(x);
    if (!r.allFinite()) fail(ErrorKind::parametric_infeasible, "raw system undefined at the start point");
    int it = 0;
    constexpr double h = 1e-7;
    for (; it < config.max_iter && r.norm() >= 0.01 * config.root_tol; ++it) {
        Eigen::Matrix4d J;
        for (int c = 0; c < 4; ++c) {
            Eigen::Vector4d e = Eigen::Vector4d::Zero();
            e(c) = h;
            J.col(c) = (F(x + e) - F(x - e)) / (2 * h);
        }
        if (!J.allFinite()) break;
        Eigen::Vector4d d = J.fullPivLu().solve(-r);
        const double dmax = d.cwiseAbs().maxCoeff();
        if (dmax > 1.0) d *= 1.0 / dmax;
        bool accepted = false;
        for (double lam = 1.0; lam > 1e-12; lam *= 0.5) {
            const Eigen::Vector4d xn = x + lam * d;
            const Eigen::Vector4d rn = F(xn);
            if (rn.allFinite() && rn.norm() < (1.0 - 1e-4 * lam) * r.norm()) {
                x = xn;
                r = rn;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (!(r.norm() < config.root_tol))
        fail(ErrorKind::no_convergence, "raw KKT solve stopped at residual " + fmt_num(r.norm()));
    auto p = KktParams::from_scales(std::exp(x(0)), std::exp(x(1)), std::exp(x(2)), std::exp(x(3)), alpha);
    p.residual_norm = r.norm();
    p.iterations = it;
    return p;
}

}  // namespace alpharobust
