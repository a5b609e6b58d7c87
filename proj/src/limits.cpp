#include "alpharobust/limits.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "alpharobust/errors.hpp"
#include "roots.hpp"

namespace alpharobust {

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

/// Power mean ((1-θ) f0^p + θ ρ^{-p} f1^p)^{1/p} with p = 1-α, evaluated in
/// log space. A zero density makes its term vanish for p > 0 and forces the
/// mean to zero for p < 0.
std::vector<double> power_mean(const NominalPair& n, double alpha, double rho, double w0,
                               double w1) {
    const double p = 1.0 - alpha;
    std::vector<double> m(n.f0.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        double terms[2];
        int count = 0;
        bool zero = false;
        for (int j = 0; j < 2; ++j) {
            const double w = j == 0 ? w0 : w1;
            const double f = j == 0 ? n.f0[i] : n.f1[i];
            if (!(w > 0.0)) continue;
            if (f > 0.0) {
                terms[count++] = std::log(w) + p * std::log(f) - (j == 1 ? p * std::log(rho) : 0.0);
            } else if (p < 0.0) {
                zero = true;
            }
        }
        if (zero || count == 0) continue;
        const double hi = count == 2 ? std::max(terms[0], terms[1]) : terms[0];
        double s = 0.0;
        for (int j = 0; j < count; ++j) s += std::exp(terms[j] - hi);
        m[i] = std::exp((hi + std::log(s)) / p);
    }
    return m;
}

double integral_pow(std::span<const double> g, std::span<const double> f, double alpha,
                    const QuadratureGrid& grid) {
    return alpha_integral(g, f, alpha, grid);
}

}  // namespace

double hellinger_root_a(double eps0, double eps1) {
    if (!(eps0 >= 0.0 && eps0 <= 8.0 && eps1 >= 0.0 && eps1 <= 8.0))
        fail(ErrorKind::invalid_argument, "Hellinger radii must lie in [0, 8]");
    const double disc = (eps0 * (eps0 - 8.0)) * (eps1 * (eps1 - 8.0));
    const double a = (16.0 - 4.0 * (eps0 + eps1) + eps0 * eps1 - std::sqrt(disc)) / 16.0;
    if (!(a >= 0.0 && a <= 1.0))
        fail(ErrorKind::infeasible_radius, "infeasible pair (" + num(eps0) + ", " + num(eps1) +
                                               "): boundary coefficient " + num(a) + " outside [0, 1]");
    return a;
}

double hellinger_eps_max(double a) {
    if (!(a >= 0.0 && a <= 1.0)) fail(ErrorKind::invalid_argument, "a must lie in [0, 1]");
    return 4.0 - 2.0 * std::sqrt(2.0 * (1.0 + a));
}

double hellinger_eps_other(double eps_fixed, double a) {
    if (!(a >= 0.0 && a <= 1.0)) fail(ErrorKind::invalid_argument, "a must lie in [0, 1]");
    const double b = a * (eps_fixed - 4.0) + 4.0;
    const double c = 4.0 * a + eps_fixed - 4.0;
    const double d = b * b - c * c;
    if (d < 0.0)
        fail(ErrorKind::infeasible_radius,
             "no boundary point with radius " + num(eps_fixed) + " for a = " + num(a));
    return b - std::sqrt(d);
}

BoundaryPoint boundary_at(const NominalPair& n, double alpha, double rho, double theta) {
    check_alpha(alpha);
    if (!(theta >= 0.0 && theta <= 1.0)) fail(ErrorKind::invalid_argument, "theta must lie in [0, 1]");
    const double p = 1.0 - alpha, s = std::abs(p);
    const auto m = power_mean(n, alpha, rho, 1.0 - theta, theta);
    const double I = integrate(m, n.grid);
    if (!(I > 0.0)) fail(ErrorKind::degenerate_region, "boundary density has no mass");
    std::vector<double> g(m.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = m[i] / I;

    const double scale = alpha * (1.0 - alpha);
    const double A0 = integral_pow(g, n.f0, alpha, n.grid);
    const double A1 = std::pow(rho, alpha) * integral_pow(g, n.f1, alpha, n.grid);
    BoundaryPoint b;
    b.theta = theta;
    b.eps0 = (1.0 - A0) / scale;
    b.eps1 = (1.0 - A1) / scale;
    const double r = s / std::pow(I, p);
    b.lambda0 = r * (1.0 - theta);
    b.lambda1 = r * theta;

    // Residuals of the defining equations in the multiplier form.
    const auto ml = power_mean(n, alpha, rho, b.lambda0, b.lambda1);
    const double e1 = integrate(ml, n.grid) - std::pow(s, 1.0 / p);
    const double e2 = integral_pow(ml, n.f0, alpha, n.grid) -
                      std::pow(s, alpha / p) * x_of(alpha, b.eps0);
    const double e3 = std::pow(rho, alpha) * integral_pow(ml, n.f1, alpha, n.grid) -
                      std::pow(s, alpha / p) * x_of(alpha, b.eps1);
    b.residual = std::max({std::abs(e1), std::abs(e2), std::abs(e3)});
    return b;
}

BoundaryPoint max_eps_general(const NominalPair& n, double alpha, double rho, int fixed_index,
                              double fixed_value, std::vector<std::string>* diagnostics) {
    if (fixed_index != 0 && fixed_index != 1)
        fail(ErrorKind::invalid_argument, "fixed_index must be 0 or 1");
    auto eps_at = [&](double theta) {
        const auto b = boundary_at(n, alpha, rho, theta);
        return fixed_index == 0 ? b.eps0 : b.eps1;
    };
    const double e_lo = eps_at(0.0), e_hi = eps_at(1.0);
    const double f_lo = e_lo - fixed_value, f_hi = e_hi - fixed_value;
    if ((f_lo > 0.0) == (f_hi > 0.0) && f_lo != 0.0 && f_hi != 0.0)
        fail(ErrorKind::infeasible_radius,
             "no boundary point with eps" + std::to_string(fixed_index) + " = " + num(fixed_value) +
                 " (boundary range " + num(std::min(e_lo, e_hi)) + " to " + num(std::max(e_lo, e_hi)) + ")");
    const double theta = detail::bracketed_root([&](double t) { return eps_at(t) - fixed_value; },
                                                0.0, 1.0, f_lo, f_hi, 1e-15);
    auto b = boundary_at(n, alpha, rho, theta);
    if (fixed_index == 0) b.eps0 = fixed_value;
    else b.eps1 = fixed_value;

    if (diagnostics) {
        const double lmin = n.l_min(), lmax = n.l_max();
        if (lmin > 0.0 || std::isfinite(lmax))
            diagnostics->push_back("likelihood ratio on the grid is bounded to [" + num(lmin) + ", " +
                                   num(lmax) + "]; the boundary assumes it spans (0, inf)");
        if (std::abs(alpha - 0.5) < 1e-12 && rho == 1.0) {
            const double a = bhattacharyya(n.f0, n.f1, n.grid);
            const double closed = hellinger_eps_other(fixed_value, a);
            const double other = fixed_index == 0 ? b.eps1 : b.eps0;
            if (std::abs(closed - other) > 1e-6)
                diagnostics->push_back("general and closed-form boundaries differ: " + num(other) +
                                       " vs " + num(closed));
        }
        if (rho != 1.0)
            diagnostics->push_back("for rho != 1 the common boundary density is not normalized "
                                   "under H1; boundary values are indicative only");
    }
    return b;
}

FeasibilityCheck validate_eps(const NominalPair& n, const DivergenceSpec& spec) {
    spec.validate();
    FeasibilityCheck out;
    double d0 = spec.eps0, d1 = spec.eps1;
    const double r = std::hypot(d0, d1);
    if (r == 0.0) d0 = d1 = 1.0;
    const double dn = std::hypot(d0, d1);
    d0 /= dn;
    d1 /= dn;
    auto h = [&](double theta) {
        const auto b = boundary_at(n, spec.alpha, spec.rho, theta);
        return b.eps0 * d1 - b.eps1 * d0;
    };
    const double h0 = h(0.0), h1 = h(1.0);
    if ((h0 > 0.0) == (h1 > 0.0) && h0 != 0.0 && h1 != 0.0) {
        out.feasible = false;
        out.margin = std::numeric_limits<double>::quiet_NaN();
        out.diagnostics.push_back("the ray through (eps0, eps1) does not meet the boundary");
        return out;
    }
    const double theta = detail::bracketed_root(h, 0.0, 1.0, h0, h1, 1e-15);
    out.boundary = boundary_at(n, spec.alpha, spec.rho, theta);
    const double reach = out.boundary.eps0 * d0 + out.boundary.eps1 * d1;
    out.margin = reach - r;
    out.feasible = out.margin > 1e-9 * std::max(1.0, std::abs(reach));
    return out;
}

FeasibilityReport eps_surface(double alpha, int n, const std::optional<NominalPair>& nominals,
                              double rho) {
    check_alpha(alpha);
    if (n < 2) fail(ErrorKind::invalid_argument, "surface needs at least 2 points per axis");
    FeasibilityReport rep;
    rep.alpha = alpha;
    rep.rho = rho;
    const bool hellinger = std::abs(alpha - 0.5) < 1e-12 && rho == 1.0;
    if (hellinger) {
        rep.mode = FeasibilityReport::Mode::hellinger;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double e0 = 4.0 * i / (n - 1), e1 = 4.0 * j / (n - 1);
                SurfaceCell c{e0, e1, std::numeric_limits<double>::quiet_NaN(), false};
                try {
                    c.a = hellinger_root_a(e0, e1);
                    c.feasible = true;
                } catch (const Error&) {
                }
                rep.cells.push_back(c);
            }
        if (nominals) {
            rep.a_value = bhattacharyya(nominals->f0, nominals->f1, nominals->grid);
            const double top = 4.0 * (1.0 - rep.a_value);
            for (int i = 0; i < n; ++i) {
                const double e0 = top * i / (n - 1);
                rep.pairs.emplace_back(e0, std::max(0.0, hellinger_eps_other(e0, rep.a_value)));
            }
            const double e = hellinger_eps_max(rep.a_value);
            const double q = 0.5 - e / 8.0;  // λ0 = λ1 on the diagonal
            rep.lambda0 = rep.lambda1 = q / (1.0 + rep.a_value);
        }
        return rep;
    }

    if (!nominals)
        fail(ErrorKind::invalid_argument, "surfaces for alpha != 1/2 or rho != 1 need nominal densities");
    rep.mode = FeasibilityReport::Mode::general;
    rep.a_value = bhattacharyya(nominals->f0, nominals->f1, nominals->grid);
    double top = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto b = boundary_at(*nominals, alpha, rho, static_cast<double>(i) / (n - 1));
        rep.pairs.emplace_back(b.eps0, b.eps1);
        top = std::max({top, b.eps0, b.eps1});
    }
    const auto diag = validate_eps(*nominals, {alpha, rho, 0.0, 0.0});
    rep.lambda0 = diag.boundary.lambda0;
    rep.lambda1 = diag.boundary.lambda1;
    rep.diagnostics = diag.diagnostics;

    // Inside test against the traced polyline, which runs from the ε1 axis to
    // the ε0 axis.
    auto inside = [&](double e0, double e1) {
        if (e0 == 0.0 && e1 == 0.0) return true;
        const double ang = std::atan2(e1, e0);
        for (std::size_t s = 0; s + 1 < rep.pairs.size(); ++s) {
            const auto [a0, a1] = rep.pairs[s];
            const auto [b0, b1] = rep.pairs[s + 1];
            const double angA = std::atan2(a1, a0), angB = std::atan2(b1, b0);
            if ((ang - angA) * (ang - angB) > 0.0) continue;
            // Point on segment along the ray.
            const double cr = std::cos(ang), sr = std::sin(ang);
            const double den = (b0 - a0) * sr - (b1 - a1) * cr;
            if (den == 0.0) continue;
            const double t = (a1 * cr - a0 * sr) / den;
            const double p0 = a0 + t * (b0 - a0), p1 = a1 + t * (b1 - a1);
            return std::hypot(e0, e1) < std::hypot(p0, p1);
        }
        return false;
    };
    const double span = 1.05 * top;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double e0 = span * i / (n - 1), e1 = span * j / (n - 1);
            rep.cells.push_back({e0, e1, std::numeric_limits<double>::quiet_NaN(), inside(e0, e1)});
        }
    return rep;
}

}  // namespace alpharobust
