#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "alpharobust/quadrature.hpp"

namespace alpharobust {

/// Probability density on the real line: Gaussian, Gaussian mixture, a shifted
/// copy of another model, or a tabulated (piecewise-linear) density.
///
/// Models are immutable values. Analytic models are truncated where their
/// density falls below 1e-16 of the peak; tabulated models are renormalized to
/// unit trapezoid mass at construction.
class DensityModel {
public:
    struct Component {
        double weight;
        double mean;
        double stddev;
    };

    static DensityModel gaussian(double mean, double stddev);
    static DensityModel mixture(std::vector<Component> components);
    static DensityModel shifted(const DensityModel& base, double shift);
    static DensityModel tabulated(std::vector<double> points, std::vector<double> values);

    double operator()(double y) const;
    double support_min() const;
    double support_max() const;

    /// Density values on every grid point.
    std::vector<double> on_grid(const QuadratureGrid& grid) const;

    /// Canonical spec string (the grammar accepted by `parse_density_spec`,
    /// with tables rendered as `table(<n points>)`).
    std::string describe() const;

    /// Flattened Gaussian components (empty for tabulated bases).
    std::vector<Component> components() const;
    bool is_tabulated() const;

private:
    struct Mixture {
        std::vector<Component> comps;
    };
    struct Shifted {
        std::shared_ptr<const DensityModel> base;
        double shift;
    };
    struct Table {
        std::vector<double> y;
        std::vector<double> v;
        std::vector<double> cdf;
    };
    using Repr = std::variant<Mixture, Shifted, Table>;

    explicit DensityModel(Repr r) : repr_(std::move(r)) {}

    friend std::vector<double> sample(const DensityModel&, std::size_t, std::uint64_t);

    Repr repr_;
};

/// Likelihood ratio with the conventions +inf for f0 = 0 < f1 and 1 for 0/0.
double likelihood_ratio(double f0, double f1);
double likelihood_ratio(const DensityModel& f0, const DensityModel& f1, double y);

/// i.i.d. draws; deterministic for a given seed. Tabulated models are
/// sampled by inverting the piecewise-linear CDF.
std::vector<double> sample(const DensityModel& model, std::size_t n, std::uint64_t seed);

/// Parses `gaussian(mu,sigma)`, `mixture(w1*gaussian(m1,s1)+...)`,
/// `shift(<spec>,A)` and `table(<path.csv>)`.
DensityModel parse_density_spec(const std::string& spec);

/// Reads a `y,value` CSV with strictly increasing y.
DensityModel load_density_table(const std::string& path);

/// The pair of nominal densities tabulated on a common grid, together with
/// the nominal likelihood ratio. Both tables are renormalized to unit mass on
/// the grid so the discretized problem is exactly a pair of probability laws.
struct NominalPair {
    QuadratureGrid grid;
    std::vector<double> f0;
    std::vector<double> f1;
    std::vector<double> l;

    static NominalPair on_grid(const DensityModel& f0, const DensityModel& f1,
                               const QuadratureGrid& grid);
    static NominalPair from_values(const QuadratureGrid& grid, std::vector<double> f0,
                                   std::vector<double> f1);

    double l_min() const;  ///< smallest finite positive ratio on the grid
    double l_max() const;  ///< largest finite ratio on the grid
};

}  // namespace alpharobust
