#include "alpharobust/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "alpharobust/errors.hpp"
#include "alpharobust/limits.hpp"
#include "roots.hpp"

namespace alpharobust {

namespace {

void check_rule(std::span<const double> delta) {
    for (double d : delta)
        if (!(d >= -1e-12 && d <= 1.0 + 1e-12))
            fail(ErrorKind::invalid_argument, "decision rule values must lie in [0, 1]");
}

ErrorReport finish(double pf, double pm, double rho) {
    ErrorReport r;
    r.p_false_alarm = pf;
    r.p_miss = pm;
    r.p_error = prior0(rho) * pf + prior1(rho) * pm;
    return r;
}

}  // namespace

ErrorReport error_probs(std::span<const double> delta, std::span<const double> g0,
                        std::span<const double> g1, double rho, const QuadratureGrid& grid) {
    const std::size_t n = grid.count();
    if (delta.size() != n || g0.size() != n || g1.size() != n)
        fail(ErrorKind::invalid_argument, "error_probs: length mismatch");
    if (!(rho > 0.0)) fail(ErrorKind::invalid_argument, "rho must be positive");
    check_rule(delta);
    std::vector<double> fa(n), miss(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::clamp(delta[i], 0.0, 1.0);
        fa[i] = d * g0[i];
        miss[i] = (1.0 - d) * g1[i];
    }
    return finish(std::clamp(integrate(fa, grid), 0.0, 1.0), std::clamp(integrate(miss, grid), 0.0, 1.0),
                  rho);
}

ErrorReport error_probs(const TabulatedFunction& delta, const DensityModel& g0,
                        const DensityModel& g1, double rho, const QuadratureGrid& grid) {
    std::vector<double> d(grid.count());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = delta(grid.points()[i]);
    return error_probs(d, g0.on_grid(grid), g1.on_grid(grid), rho, grid);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined key.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

ErrorReport monte_carlo_errors(const std::function<double(double)>& delta,
                               const DensityModel& model0, const DensityModel& model1, double rho,
                               std::size_t n, std::uint64_t seed) {
    if (n < 1000) fail(ErrorKind::invalid_argument, "Monte Carlo needs at least 1000 samples");
    if (!(rho > 0.0)) fail(ErrorKind::invalid_argument, "rho must be positive");
    const auto y0 = sample(model0, n, stream_seed(seed, 0));
    const auto y1 = sample(model1, n, stream_seed(seed, 1));
    std::mt19937_64 u0(stream_seed(seed, 2)), u1(stream_seed(seed, 3));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::size_t fa = 0, miss = 0;
    for (double y : y0)
        if (unif(u0) < delta(y)) ++fa;
    for (double y : y1)
        if (!(unif(u1) < delta(y))) ++miss;
    const double N = static_cast<double>(n);
    auto r = finish(fa / N, miss / N, rho);
    r.method = ErrorReport::Method::monte_carlo;
    r.n = n;
    r.seed = seed;
    r.se_false_alarm = std::sqrt(r.p_false_alarm * (1.0 - r.p_false_alarm) / N);
    r.se_miss = std::sqrt(r.p_miss * (1.0 - r.p_miss) / N);
    r.half_width_false_alarm = 1.959963984540054 * r.se_false_alarm;
    r.half_width_miss = 1.959963984540054 * r.se_miss;
    return r;
}

double nominal_rule(double l, double rho) {
    if (l > rho) return 1.0;
    if (l < rho) return 0.0;
    return 0.5;
}

std::vector<double> nominal_rule(const NominalPair& nominals, double rho) {
    // Tabulated ratios carry the rounding of the two separate normalizations;
    // ratios within that noise of rho are ties.
    std::vector<double> d(nominals.l.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double l = nominals.l[i];
        d[i] = std::abs(l - rho) <= 1e-12 * rho ? 0.5 : nominal_rule(l, rho);
    }
    return d;
}

std::vector<SnrRow> snr_sweep(const SnrSweepConfig& cfg) {
    check_alpha(cfg.alpha);
    if (!(cfg.sigma > 0.0)) fail(ErrorKind::invalid_argument, "sigma must be positive");
    std::vector<SnrRow> rows;
    std::uint64_t stream = 0;
    for (double snr : cfg.snr_db) {
        const double A = cfg.sigma * std::pow(10.0, snr / 20.0);
        const auto grid = QuadratureGrid::uniform(-cfg.margin * cfg.sigma, A + cfg.margin * cfg.sigma,
                                                  cfg.grid_points);
        const auto f1_model = DensityModel::shifted(cfg.noise, A);
        const auto n = NominalPair::on_grid(cfg.noise, f1_model, grid);
        const std::vector<double> ys(grid.points().begin(), grid.points().end());

        SnrRow nominal;
        nominal.snr_db = snr;
        nominal.test = "nominal";
        const auto d_nom = nominal_rule(n, cfg.rho);
        nominal.quadrature = error_probs(d_nom, n.f0, n.f1, cfg.rho, grid);
        if (cfg.mc_samples > 0) {
            const TabulatedFunction rule(ys, d_nom);
            nominal.monte_carlo = monte_carlo_errors([&](double y) { return rule(y); }, cfg.noise,
                                                     f1_model, cfg.rho, cfg.mc_samples,
                                                     stream_seed(cfg.mc_seed, stream++));
        }
        rows.push_back(std::move(nominal));

        for (const auto& [e0, e1] : cfg.eps) {
            SnrRow row;
            row.snr_db = snr;
            row.test = "robust";
            row.eps0 = e0;
            row.eps1 = e1;
            const DivergenceSpec spec{cfg.alpha, cfg.rho, e0, e1};
            try {
                const auto sol = solve_thresholds(spec, n);
                row.quadrature = error_probs(sol.delta_hat, sol.g0_hat, sol.g1_hat, cfg.rho, grid);
                if (cfg.mc_samples > 0) {
                    const auto rule = sol.delta_function();
                    row.monte_carlo = monte_carlo_errors([&](double y) { return rule(y); },
                                                         sol.g0_model(), sol.g1_model(), cfg.rho,
                                                         cfg.mc_samples, stream_seed(cfg.mc_seed, stream++));
                }
            } catch (const Error& err) {
                row.feasible = false;
                row.note = err.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<AlphaRow> alpha_sweep(const DivergenceSpec& base, std::span<const double> alphas,
                                  const NominalPair& nominals, const SolverConfig& config) {
    std::vector<AlphaRow> rows;
    for (double a : alphas) {
        AlphaRow row;
        row.alpha = a;
        try {
            DivergenceSpec spec = base;
            spec.alpha = a;
            const auto sol = solve_thresholds(spec, nominals, config);
            row.ok = true;
            row.l_l = sol.thresholds.l_l;
            row.l_u = sol.thresholds.l_u;
            row.residual = sol.residual_norm;
            row.achieved_eps0 = sol.achieved_eps0;
            row.achieved_eps1 = sol.achieved_eps1;
        } catch (const Error& err) {
            row.error = err.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<double> random_direction(const QuadratureGrid& grid, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> amp(-1.0, 1.0), freq(0.2, 2.0), phase(0.0, 2.0 * M_PI);
    double a[4], w[4], p[4];
    for (int j = 0; j < 4; ++j) {
        a[j] = amp(rng);
        w[j] = freq(rng);
        p[j] = phase(rng);
    }
    std::vector<double> h(grid.count());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double y = grid.points()[i];
        double s = 0.0;
        for (int j = 0; j < 4; ++j) s += a[j] * std::sin(w[j] * y + p[j]);
        h[i] = s;
    }
    return h;
}

std::vector<double> tilted_member(std::span<const double> f, std::span<const double> h,
                                  double alpha, double target, const QuadratureGrid& grid) {
    if (f.size() != grid.count() || h.size() != grid.count())
        fail(ErrorKind::invalid_argument, "tilted_member: length mismatch");
    if (!(target >= 0.0)) fail(ErrorKind::invalid_argument, "target divergence must be nonnegative");
    auto member = [&](double t) {
        double hmax = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < f.size(); ++i)
            if (f[i] > 0.0) hmax = std::max(hmax, t * h[i]);
        std::vector<double> g(f.size(), 0.0);
        for (std::size_t i = 0; i < f.size(); ++i)
            if (f[i] > 0.0) g[i] = f[i] * std::exp(t * h[i] - hmax);
        const double z = integrate(g, grid);
        for (auto& v : g) v /= z;
        return g;
    };
    auto excess = [&](double t) { return alpha_divergence(member(t), f, alpha, grid) - target; };
    if (target == 0.0) return member(0.0);
    double hi = 0.25, f_hi = excess(hi);
    while (f_hi < 0.0 && hi < 64.0) {
        hi *= 2.0;
        f_hi = excess(hi);
    }
    if (!(f_hi >= 0.0) || !std::isfinite(f_hi)) return member(hi);
    const double t = detail::bracketed_root(excess, 0.0, hi, -target, f_hi, 1e-13);
    // Stay on the feasible side of the root.
    auto g = member(t);
    for (double tt = t; alpha_divergence(g, f, alpha, grid) > target && tt > 0.0;) {
        tt *= 1.0 - 1e-9;
        g = member(tt);
    }
    return g;
}

}  // namespace alpharobust
