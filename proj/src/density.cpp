#include "alpharobust/density.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "alpharobust/errors.hpp"

namespace alpharobust {

namespace {

// exp(-c^2/2) = 1e-16
const double kTruncationSigmas = std::sqrt(2.0 * 16.0 * std::numbers::ln10);

double normal_pdf(double y, double mean, double stddev) {
    const double u = (y - mean) / stddev;
    if (std::abs(u) > kTruncationSigmas) return 0.0;
    return std::exp(-0.5 * u * u) / (stddev * std::sqrt(2.0 * std::numbers::pi));
}

std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

DensityModel DensityModel::gaussian(double mean, double stddev) {
    return mixture({{1.0, mean, stddev}});
}

DensityModel DensityModel::mixture(std::vector<Component> comps) {
    if (comps.empty()) fail(ErrorKind::invalid_argument, "mixture needs at least one component");
    double total = 0.0;
    for (const auto& c : comps) {
        if (!(c.stddev > 0.0) || !std::isfinite(c.stddev))
            fail(ErrorKind::invalid_argument, "gaussian stddev must be positive");
        if (!std::isfinite(c.mean)) fail(ErrorKind::invalid_argument, "gaussian mean must be finite");
        if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
            fail(ErrorKind::invalid_argument, "mixture weights must be nonnegative");
        total += c.weight;
    }
    if (!(total > 0.0)) fail(ErrorKind::invalid_argument, "mixture weights sum to zero");
    for (auto& c : comps) c.weight /= total;
    return DensityModel(Mixture{std::move(comps)});
}

DensityModel DensityModel::shifted(const DensityModel& base, double shift) {
    if (!std::isfinite(shift)) fail(ErrorKind::invalid_argument, "shift must be finite");
    return DensityModel(Shifted{std::make_shared<const DensityModel>(base), shift});
}

DensityModel DensityModel::tabulated(std::vector<double> points, std::vector<double> values) {
    if (points.size() != values.size() || points.size() < 2)
        fail(ErrorKind::invalid_argument, "table needs >= 2 matching (y, value) rows");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!std::isfinite(points[i]) || !std::isfinite(values[i]))
            fail(ErrorKind::invalid_argument, "table entries must be finite");
        if (values[i] < 0.0) fail(ErrorKind::invalid_argument, "table values must be nonnegative");
        if (i > 0 && !(points[i] > points[i - 1]))
            fail(ErrorKind::invalid_argument, "table y must be strictly increasing");
    }
    std::vector<double> cdf(points.size(), 0.0);
    for (std::size_t i = 1; i < points.size(); ++i)
        cdf[i] = cdf[i - 1] + 0.5 * (points[i] - points[i - 1]) * (values[i] + values[i - 1]);
    const double mass = cdf.back();
    if (!(mass > 0.0)) fail(ErrorKind::invalid_argument, "table has zero mass");
    for (auto& v : values) v /= mass;
    for (auto& c : cdf) c /= mass;
    cdf.back() = 1.0;
    return DensityModel(Table{std::move(points), std::move(values), std::move(cdf)});
}

double DensityModel::operator()(double y) const {
    return std::visit(
        [y](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Mixture>) {
                double acc = 0.0;
                for (const auto& c : r.comps) acc += c.weight * normal_pdf(y, c.mean, c.stddev);
                return acc;
            } else if constexpr (std::is_same_v<T, Shifted>) {
                return (*r.base)(y - r.shift);
            } else {
                if (y < r.y.front() || y > r.y.back()) return 0.0;
                const auto it = std::upper_bound(r.y.begin(), r.y.end(), y);
                if (it == r.y.end()) return r.v.back();
                const std::size_t j = static_cast<std::size_t>(it - r.y.begin());
                const double t = (y - r.y[j - 1]) / (r.y[j] - r.y[j - 1]);
                return r.v[j - 1] + t * (r.v[j] - r.v[j - 1]);
            }
        },
        repr_);
}

double DensityModel::support_min() const {
    return std::visit(
        [](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Mixture>) {
                double lo = std::numeric_limits<double>::infinity();
                for (const auto& c : r.comps)
                    if (c.weight > 0.0) lo = std::min(lo, c.mean - kTruncationSigmas * c.stddev);
                return lo;
            } else if constexpr (std::is_same_v<T, Shifted>) {
                return r.base->support_min() + r.shift;
            } else {
                return r.y.front();
            }
        },
        repr_);
}

double DensityModel::support_max() const {
    return std::visit(
        [](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Mixture>) {
                double hi = -std::numeric_limits<double>::infinity();
                for (const auto& c : r.comps)
                    if (c.weight > 0.0) hi = std::max(hi, c.mean + kTruncationSigmas * c.stddev);
                return hi;
            } else if constexpr (std::is_same_v<T, Shifted>) {
                return r.base->support_max() + r.shift;
            } else {
                return r.y.back();
            }
        },
        repr_);
}

std::vector<double> DensityModel::on_grid(const QuadratureGrid& grid) const {
    std::vector<double> out;
    out.reserve(grid.count());
    for (double y : grid.points()) out.push_back((*this)(y));
    return out;
}

std::string DensityModel::describe() const {
    return std::visit(
        [](const auto& r) -> std::string {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Mixture>) {
                auto g = [](const Component& c) {
                    return "gaussian(" + fmt_num(c.mean) + "," + fmt_num(c.stddev) + ")";
                };
                if (r.comps.size() == 1) return g(r.comps.front());
                std::string s = "mixture(";
                for (std::size_t i = 0; i < r.comps.size(); ++i) {
                    if (i) s += "+";
                    s += fmt_num(r.comps[i].weight) + "*" + g(r.comps[i]);
                }
                return s + ")";
            } else if constexpr (std::is_same_v<T, Shifted>) {
                return "shift(" + r.base->describe() + "," + fmt_num(r.shift) + ")";
            } else {
                return "table(<" + std::to_string(r.y.size()) + " points>)";
            }
        },
        repr_);
}

std::vector<DensityModel::Component> DensityModel::components() const {
    return std::visit(
        [](const auto& r) -> std::vector<Component> {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Mixture>) {
                return r.comps;
            } else if constexpr (std::is_same_v<T, Shifted>) {
                auto comps = r.base->components();
                for (auto& c : comps) c.mean += r.shift;
                return comps;
            } else {
                return {};
            }
        },
        repr_);
}

bool DensityModel::is_tabulated() const {
    if (std::holds_alternative<Table>(repr_)) return true;
    if (const auto* s = std::get_if<Shifted>(&repr_)) return s->base->is_tabulated();
    return false;
}

double likelihood_ratio(double f0, double f1) {
    if (f0 > 0.0) return f1 / f0;
    if (f1 > 0.0) return std::numeric_limits<double>::infinity();
    return 1.0;
}

double likelihood_ratio(const DensityModel& f0, const DensityModel& f1, double y) {
    return likelihood_ratio(f0(y), f1(y));
}

std::vector<double> sample(const DensityModel& model, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> out;
    out.reserve(n);
    // Resolve shifts down to the underlying base once.
    double offset = 0.0;
    const DensityModel* base = &model;
    while (const auto* s = std::get_if<DensityModel::Shifted>(&base->repr_)) {
        offset += s->shift;
        base = s->base.get();
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (const auto* mix = std::get_if<DensityModel::Mixture>(&base->repr_)) {
        std::vector<double> cum;
        double acc = 0.0;
        for (const auto& c : mix->comps) cum.push_back(acc += c.weight);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = 0;
            if (cum.size() > 1) {
                const double u = unif(rng) * acc;
                j = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
                j = std::min(j, cum.size() - 1);
            }
            const auto& c = mix->comps[j];
            out.push_back(offset + c.mean + c.stddev * gauss(rng));
        }
        return out;
    }
    const auto& t = std::get<DensityModel::Table>(base->repr_);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = unif(rng);
        auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), u);
        std::size_t j = static_cast<std::size_t>(it - t.cdf.begin());
        j = std::clamp<std::size_t>(j, 1, t.cdf.size() - 1);
        const double c0 = t.cdf[j - 1], c1 = t.cdf[j];
        const double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
        out.push_back(offset + t.y[j - 1] + frac * (t.y[j] - t.y[j - 1]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// spec parser

namespace {

class SpecParser {
public:
    explicit SpecParser(std::string text) : s_(std::move(text)) {}

    DensityModel parse() {
        auto m = parse_model();
        skip_ws();
        if (pos_ != s_.size()) error("trailing characters");
        return m;
    }

private:
    DensityModel parse_model() {
        const std::string name = ident();
        if (name == "gaussian") {
            expect('(');
            const double mu = number();
            expect(',');
            const double sigma = number();
            expect(')');
            return DensityModel::gaussian(mu, sigma);
        }
        if (name == "mixture") {
            expect('(');
            std::vector<DensityModel::Component> comps;
            do {
                const double w = number();
                expect('*');
                if (ident() != "gaussian") error("mixture terms must be w*gaussian(mu,sigma)");
                expect('(');
                const double mu = number();
                expect(',');
                const double sigma = number();
                expect(')');
                comps.push_back({w, mu, sigma});
            } while (accept('+'));
            expect(')');
            return DensityModel::mixture(std::move(comps));
        }
        if (name == "shift") {
            expect('(');
            auto base = parse_model();
            expect(',');
            const double a = number();
            expect(')');
            return DensityModel::shifted(base, a);
        }
        if (name == "table") {
            expect('(');
            const auto close = s_.find(')', pos_);
            if (close == std::string::npos) error("unterminated table(...)");
            std::string path = s_.substr(pos_, close - pos_);
            while (!path.empty() && std::isspace(static_cast<unsigned char>(path.back()))) path.pop_back();
            while (!path.empty() && std::isspace(static_cast<unsigned char>(path.front()))) path.erase(0, 1);
            pos_ = close + 1;
            return load_density_table(path);
        }
        error("unknown density '" + name + "'");
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    std::string ident() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        if (start == pos_) error("expected a density name");
        return s_.substr(start, pos_ - start);
    }
    double number() {
        skip_ws();
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) error("expected a number");
        pos_ += static_cast<std::size_t>(end - begin);
        return v;
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) error(std::string("expected '") + c + "'");
    }
    [[noreturn]] void error(const std::string& msg) const {
        fail(ErrorKind::invalid_argument,
             "density spec '" + s_ + "': " + msg + " at offset " + std::to_string(pos_));
    }

    std::string s_;
    std::size_t pos_ = 0;
};

}  // namespace

DensityModel parse_density_spec(const std::string& spec) { return SpecParser(spec).parse(); }

DensityModel load_density_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::invalid_argument, "cannot open density table '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::invalid_argument, "empty density table '" + path + "'");
    line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }),
               line.end());
    if (line != "y,value")
        fail(ErrorKind::invalid_argument, "density table '" + path + "' must start with header y,value");
    std::vector<double> ys, vs;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            fail(ErrorKind::invalid_argument, path + ":" + std::to_string(row) + ": expected y,value");
        char* end = nullptr;
        const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
        const double y = std::strtod(a.c_str(), &end);
        if (end == a.c_str()) fail(ErrorKind::invalid_argument, path + ":" + std::to_string(row) + ": bad y");
        const double v = std::strtod(b.c_str(), &end);
        if (end == b.c_str()) fail(ErrorKind::invalid_argument, path + ":" + std::to_string(row) + ": bad value");
        if (!ys.empty() && !(y > ys.back()))
            fail(ErrorKind::invalid_argument, path + ":" + std::to_string(row) + ": y not strictly increasing");
        ys.push_back(y);
        vs.push_back(v);
    }
    return DensityModel::tabulated(std::move(ys), std::move(vs));
}

// ---------------------------------------------------------------------------

NominalPair NominalPair::on_grid(const DensityModel& f0, const DensityModel& f1,
                                 const QuadratureGrid& grid) {
    return from_values(grid, f0.on_grid(grid), f1.on_grid(grid));
}

NominalPair NominalPair::from_values(const QuadratureGrid& grid, std::vector<double> f0,
                                     std::vector<double> f1) {
    if (f0.size() != grid.count() || f1.size() != grid.count())
        fail(ErrorKind::invalid_argument, "nominal tables must match the grid");
    for (std::size_t i = 0; i < f0.size(); ++i)
        if (!(f0[i] >= 0.0) || !(f1[i] >= 0.0) || !std::isfinite(f0[i]) || !std::isfinite(f1[i]))
            fail(ErrorKind::invalid_argument, "nominal densities must be finite and nonnegative");
    const double m0 = integrate(f0, grid), m1 = integrate(f1, grid);
    if (!(m0 > 0.0) || !(m1 > 0.0)) fail(ErrorKind::invalid_argument, "nominal density has no mass on grid");
    for (auto& v : f0) v /= m0;
    for (auto& v : f1) v /= m1;
    std::vector<double> l(f0.size());
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = likelihood_ratio(f0[i], f1[i]);
    return NominalPair{grid, std::move(f0), std::move(f1), std::move(l)};
}

double NominalPair::l_min() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < l.size(); ++i)
        if (f0[i] > 0.0 && f1[i] > 0.0) m = std::min(m, l[i]);
    return m;
}

double NominalPair::l_max() const {
    double m = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i)
        if (f0[i] > 0.0 && f1[i] > 0.0) m = std::max(m, l[i]);
    return m;
}

}  // namespace alpharobust
