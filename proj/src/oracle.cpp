#include "alpharobust/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "alpharobust/errors.hpp"
#include "roots.hpp"

namespace alpharobust {

namespace {

double prior_h0(double rho) { return rho / (1.0 + rho); }

void check_probability(std::span<const double> p, const char* name) {
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) fail(ErrorKind::invalid_argument, std::string(name) + " has a negative entry");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) fail(ErrorKind::invalid_argument, std::string(name) + " does not sum to 1");
}

// The inner maximizer for fixed multipliers: g_j = f_j * base_j^(1/(α-1)) with
// base_j = 1 + (α-1)(w_j - μ)/λ. Entries with base <= 0 vanish for α > 1.
struct Inner {
    std::span<const double> w, f;
    double alpha;

    double fill(double lambda, double mu, std::vector<double>& g) const {
        double s = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double base = 1.0 + (alpha - 1.0) * (w[j] - mu) / lambda;
            double v = 0.0;
            if (f[j] > 0.0) {
                if (base > 0.0)
                    v = f[j] * std::exp(std::log(base) / (alpha - 1.0));
                else if (alpha < 1.0)
                    v = std::numeric_limits<double>::infinity();
            }
            g[j] = v;
            s += v;
        }
        return s;
    }

    // Normalizing μ for a given λ; the total mass is decreasing in μ and the
    // bracket [min w, max w] always straddles 1 where every base is positive.
    double normalized(double lambda, std::vector<double>& g) const {
        double wmin = std::numeric_limits<double>::infinity(), wmax = -wmin;
        for (std::size_t j = 0; j < f.size(); ++j)
            if (f[j] > 0.0) {
                wmin = std::min(wmin, w[j]);
                wmax = std::max(wmax, w[j]);
            }
        auto excess = [&](double mu) { return fill(lambda, mu, g) - 1.0; };
        double lo = wmin;
        if (alpha < 1.0) {
            // Bases vanish at μ = max w - λ/(1-α); the mass blows up there.
            const double pole = wmax - lambda / (1.0 - alpha);
            if (pole >= lo) {
                double d = wmax - pole;
                do {
                    d *= 0.5;
                    lo = pole + d;
                } while (d > 0.0 && excess(lo) < 0.0);
            }
        }
        const double hi = wmax;
        const double flo = excess(lo), fhi = excess(hi);
        double mu;
        if (!(flo > 0.0) || !(fhi < 0.0))
            mu = (std::abs(flo) < std::abs(fhi)) ? lo : hi;
        else
            mu = detail::bracketed_root(excess, lo, hi, flo, fhi, 1e-16, 400);
        const double s = fill(lambda, mu, g);
        for (auto& v : g) v /= s;
        return mu;
    }
};

}  // namespace

void DiscreteProblem::validate() const {
    if (f0.size() != m || f1.size() != m || centers.size() != m)
        fail(ErrorKind::invalid_argument, "discrete problem: length mismatch");
    check_probability(f0, "f0");
    check_probability(f1, "f1");
    spec.validate();
}

NominalPair DiscreteProblem::as_nominals() const {
    return NominalPair::from_values(QuadratureGrid::point_masses(centers), f0, f1);
}

DiscreteProblem discretize(const NominalPair& nominals, std::size_t m, const DivergenceSpec& spec) {
    if (m < 8) fail(ErrorKind::invalid_argument, "discretize needs at least 8 bins");
    const auto& grid = nominals.grid;
    DiscreteProblem p;
    p.m = m;
    p.spec = spec;
    p.centers.resize(m);
    p.f0.resize(m);
    p.f1.resize(m);
    const double a = grid.y_min(), h = (grid.y_max() - grid.y_min()) / static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double lo = a + h * j, hi = (j + 1 == m) ? grid.y_max() : a + h * (j + 1);
        p.centers[j] = 0.5 * (lo + hi);
        p.f0[j] = integrate_interval(nominals.f0, grid, lo, hi);
        p.f1[j] = integrate_interval(nominals.f1, grid, lo, hi);
    }
    for (auto* v : {&p.f0, &p.f1}) {
        const double s = std::accumulate(v->begin(), v->end(), 0.0);
        if (!(s > 0.0)) fail(ErrorKind::invalid_argument, "discretize: nominal has no mass on the grid");
        for (auto& x : *v) x /= s;
    }
    return p;
}

double discrete_divergence(std::span<const double> g, std::span<const double> f, double alpha) {
    if (g.size() != f.size()) fail(ErrorKind::invalid_argument, "discrete_divergence: length mismatch");
    check_alpha(alpha);
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (g[j] > 0.0 && f[j] > 0.0)
            s += std::exp(alpha * std::log(g[j]) + (1.0 - alpha) * std::log(f[j]));
        else if (g[j] > 0.0 && alpha > 1.0)
            return std::numeric_limits<double>::infinity();
        else if (g[j] == 0.0 && f[j] > 0.0 && alpha < 0.0)
            return std::numeric_limits<double>::infinity();
    }
    return (1.0 - s) / (alpha * (1.0 - alpha));
}

BallMaximum maximize_over_ball(std::span<const double> weights, std::span<const double> f,
                               double alpha, double eps) {
    if (weights.size() != f.size()) fail(ErrorKind::invalid_argument, "maximize_over_ball: length mismatch");
    check_alpha(alpha);
    if (!(eps >= 0.0)) fail(ErrorKind::invalid_argument, "radius must be nonnegative");
    check_probability(f, "f");

    BallMaximum out;
    auto finish = [&](std::vector<double> g, double lambda) {
        out.value = std::inner_product(weights.begin(), weights.end(), g.begin(), 0.0);
        out.divergence = discrete_divergence(g, f, alpha);
        out.lambda = lambda;
        out.g = std::move(g);
        return out;
    };

    double wmin = std::numeric_limits<double>::infinity(), wmax = -wmin;
    for (std::size_t j = 0; j < f.size(); ++j)
        if (f[j] > 0.0) {
            wmin = std::min(wmin, weights[j]);
            wmax = std::max(wmax, weights[j]);
        }
    if (eps == 0.0 || !(wmax - wmin > 1e-15)) {
        out.active = (eps == 0.0);
        if (eps > 0.0) out.diagnostic = "objective is constant on the support; returning the nominal";
        return finish(std::vector<double>(f.begin(), f.end()), std::numeric_limits<double>::infinity());
    }

    const Inner inner{weights, f, alpha};
    std::vector<double> g(f.size());
    // The achieved divergence is nonincreasing in λ; search in log λ.
    auto excess = [&](double log_lambda) {
        inner.normalized(std::exp(log_lambda), g);
        return discrete_divergence(g, f, alpha) - eps;
    };
    const double scale = std::log(wmax - wmin);
    double lo = scale, hi = scale;
    double f_lo = excess(lo), f_hi = f_lo;
    while (f_hi > 0.0 && hi < scale + 200.0) f_hi = excess(hi += 2.0);
    while (!(f_lo > 0.0) && lo > scale - 200.0) f_lo = excess(lo -= 2.0);
    if (!(f_lo > 0.0)) {
        out.diagnostic = "divergence constraint cannot be activated; radius exceeds the reachable range";
        inner.normalized(std::exp(lo), g);
        return finish(g, std::exp(lo));
    }
    if (f_hi > 0.0) fail(ErrorKind::no_convergence, "maximize_over_ball: no multiplier bracket");
    {
        // Tighten the bracket before refining.
        while (hi - lo > 2.0) {
            const double mid = 0.5 * (lo + hi), fm = excess(mid);
            if (fm > 0.0) { lo = mid; f_lo = fm; } else { hi = mid; f_hi = fm; }
        }
    }
    double root = detail::bracketed_root(excess, lo, hi, f_lo, f_hi, 1e-15, 400);
    // Land on the feasible side of the root.
    for (double nudge = 1e-14; excess(root) > 0.0 && nudge < 1e-6; nudge *= 4.0)
        root += nudge * std::max(1.0, std::abs(root));
    inner.normalized(std::exp(root), g);
    out.active = std::abs(discrete_divergence(g, f, alpha) - eps) <= 1e-8;
    if (!out.active) out.diagnostic = "constraint not attained within 1e-8";
    return finish(g, std::exp(root));
}

std::vector<double> lrt_rule(std::span<const double> g0, std::span<const double> g1, double rho) {
    if (g0.size() != g1.size()) fail(ErrorKind::invalid_argument, "lrt_rule: length mismatch");
    std::vector<double> d(g0.size());
    for (std::size_t j = 0; j < d.size(); ++j) {
        const double lhs = g1[j], rhs = rho * g0[j];
        d[j] = lhs > rhs ? 1.0 : (lhs < rhs ? 0.0 : 0.5);
    }
    return d;
}

SaddleResult alternating_saddle(const DiscreteProblem& problem, int iters, double tol) {
    problem.validate();
    if (iters < 1) fail(ErrorKind::invalid_argument, "alternating_saddle needs at least one iteration");
    const auto& s = problem.spec;
    const double pi0 = prior_h0(s.rho), pi1 = 1.0 - pi0;
    const std::size_t m = problem.m;

    struct State {
        std::vector<double> rule, g0, g1;
        double upper = 0.0, lower = 0.0;
        std::vector<double> grad;
    };
    auto evaluate = [&](std::vector<double> rule) {
        State st;
        st.rule = std::move(rule);
        std::vector<double> miss(m);
        for (std::size_t j = 0; j < m; ++j) miss[j] = 1.0 - st.rule[j];
        auto b0 = maximize_over_ball(st.rule, problem.f0, s.alpha, s.eps0);
        auto b1 = maximize_over_ball(miss, problem.f1, s.alpha, s.eps1);
        st.upper = pi0 * b0.value + pi1 * b1.value;
        st.g0 = std::move(b0.g);
        st.g1 = std::move(b1.g);
        st.grad.resize(m);
        for (std::size_t j = 0; j < m; ++j) {
            st.grad[j] = pi0 * st.g0[j] - pi1 * st.g1[j];
            st.lower += std::min(pi0 * st.g0[j], pi1 * st.g1[j]);
        }
        return st;
    };

    std::vector<double> scaling(m);
    for (std::size_t j = 0; j < m; ++j)
        scaling[j] = 1.0 / std::max(pi0 * problem.f0[j] + pi1 * problem.f1[j], 1e-300);

    SaddleResult out;
    State cur = evaluate(lrt_rule(problem.f0, problem.f1, s.rho));
    double best_lower = cur.lower;
    double step = 1.0;
    for (int it = 1; it <= iters; ++it) {
        out.iterations = it;
        out.trace.push_back(cur.upper);
        best_lower = std::max(best_lower, cur.lower);
        out.lower_trace.push_back(best_lower);
        if (cur.upper - best_lower <= tol) {
            out.converged = true;
            break;
        }
        if (it == iters) break;

        bool moved = false;
        State lrt = evaluate(lrt_rule(cur.g0, cur.g1, s.rho));
        best_lower = std::max(best_lower, lrt.lower);
        for (int k = 0; k < 60; ++k) {
            std::vector<double> next(m);
            double decrease = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                next[j] = std::clamp(cur.rule[j] - step * scaling[j] * cur.grad[j], 0.0, 1.0);
                decrease += cur.grad[j] * (next[j] - cur.rule[j]);
            }
            if (decrease == 0.0) break;
            State cand = evaluate(std::move(next));
            if (cand.upper <= cur.upper + 1e-4 * decrease) {
                cur = std::move(cand);
                step = std::min(step * 2.0, 1e6);
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (lrt.upper < cur.upper) {
            cur = std::move(lrt);
            moved = true;
        }
        if (!moved) {
            out.diagnostic = "no descent direction left; stopped at numerical precision";
            best_lower = std::max(best_lower, cur.lower);
            out.trace.push_back(cur.upper);
            out.lower_trace.push_back(best_lower);
            break;
        }
    }
    if (!out.converged && out.diagnostic.empty())
        out.diagnostic = "iteration cap reached before the gap closed";
    out.p_error = cur.upper;
    out.gap = cur.upper - best_lower;
    out.converged = out.converged || out.gap <= tol;
    out.rule = std::move(cur.rule);
    out.g0 = std::move(cur.g0);
    out.g1 = std::move(cur.g1);
    return out;
}

}  // namespace alpharobust
