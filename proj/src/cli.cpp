#include "alpharobust/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <variant>

#include "alpharobust/density.hpp"
#include "alpharobust/divergence.hpp"
#include "alpharobust/errors.hpp"
#include "alpharobust/evaluation.hpp"
#include "alpharobust/lfd_solver.hpp"
#include "alpharobust/limits.hpp"

namespace alpharobust::cli {

namespace {

using Json = nlohmann::ordered_json;

const std::vector<std::string> kCommands{"solve",    "solve-symmetric", "limits",   "surface",
                                         "evaluate", "sweep-alpha",     "sweep-snr"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
    return parts;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        fail(ErrorKind::invalid_argument, "setting '" + key + "': not a number: '" + v + "'");
    }
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    if (!(x >= 0.0) || x != std::floor(x) || x > 1.8e19)
        fail(ErrorKind::invalid_argument, "setting '" + key + "': not a nonnegative integer: '" + v + "'");
    return static_cast<std::uint64_t>(x);
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> xs;
    for (const auto& p : split(v, ',')) xs.push_back(to_double(key, p));
    if (xs.empty()) fail(ErrorKind::invalid_argument, "setting '" + key + "': empty list");
    return xs;
}

// ---- output tables ---------------------------------------------------------

using Cell = std::variant<double, std::string>;

struct Table {
    std::vector<std::pair<std::string, Json>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.12g}", v);
}

std::string meta_value(const Json& j) {
    if (j.is_number_float()) return format_number(j.get<double>());
    if (j.is_string()) return j.get<std::string>();
    return j.dump();
}

void write_table(const Table& t, const std::string& command, Format format, std::ostream& os) {
    if (format == Format::csv) {
        for (const auto& [k, v] : t.meta) os << "# " << k << '=' << meta_value(v) << '\n';
        for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
        os << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) os << ',';
                if (const auto* d = std::get_if<double>(&row[i]))
                    os << format_number(*d);
                else
                    os << std::get<std::string>(row[i]);
            }
            os << '\n';
        }
        return;
    }
    Json j;
    j["command"] = command;
    Json meta = Json::object();
    for (const auto& [k, v] : t.meta) meta[k] = v;
    j["meta"] = meta;
    j["columns"] = t.columns;
    Json rows = Json::array();
    for (const auto& row : t.rows) {
        Json r = Json::array();
        for (const auto& c : row) {
            if (const auto* d = std::get_if<double>(&c))
                r.push_back(std::isfinite(*d) ? Json(*d) : Json(nullptr));
            else
                r.push_back(std::get<std::string>(c));
        }
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    os << j.dump(2) << '\n';
}

// ---- commands --------------------------------------------------------------

DivergenceSpec spec_of(const RunConfig& c) { return {c.alpha, c.rho, c.eps0, c.eps1}; }

NominalPair nominals_of(const RunConfig& c) {
    const auto grid = QuadratureGrid::uniform(c.grid.min, c.grid.max, c.grid.points);
    return NominalPair::on_grid(parse_density_spec(c.nominal0), parse_density_spec(c.nominal1), grid);
}

void add_problem_meta(Table& t, const RunConfig& c) {
    t.meta.emplace_back("alpha", c.alpha);
    t.meta.emplace_back("rho", c.rho);
    t.meta.emplace_back("eps0", c.eps0);
    t.meta.emplace_back("eps1", c.eps1);
    t.meta.emplace_back("nominal0", c.nominal0);
    t.meta.emplace_back("nominal1", c.nominal1);
    t.meta.emplace_back("grid", fmt::format("{}:{}:{}", format_number(c.grid.min),
                                            format_number(c.grid.max), c.grid.points));
}

Table solve_table(const RunConfig& c, const NominalPair& n) {
    const auto spec = spec_of(c);
    if (c.command == "solve-symmetric" && c.eps0 != c.eps1)
        fail(ErrorKind::invalid_argument, "solve-symmetric needs eps0 == eps1");
    const auto sol = c.command == "solve-symmetric" ? solve_symmetric(c.eps0, c.alpha, c.rho, n)
                                                    : solve_thresholds(spec, n);
    Table t;
    add_problem_meta(t, c);
    t.meta.emplace_back("l_l", sol.thresholds.l_l);
    t.meta.emplace_back("l_u", sol.thresholds.l_u);
    t.meta.emplace_back("k", sol.k);
    t.meta.emplace_back("z", sol.z);
    t.meta.emplace_back("residual_norm", sol.residual_norm);
    t.meta.emplace_back("achieved_eps0", sol.achieved_eps0);
    t.meta.emplace_back("achieved_eps1", sol.achieved_eps1);
    t.meta.emplace_back("mass0", sol.mass0);
    t.meta.emplace_back("mass1", sol.mass1);
    t.meta.emplace_back("method", sol.method);
    t.meta.emplace_back("iterations", sol.iterations);
    t.columns = {"y", "f0", "f1", "l", "g0_hat", "g1_hat", "delta_hat", "l_hat", "region"};
    const auto ys = n.grid.points();
    for (std::size_t i = 0; i < ys.size(); ++i)
        t.rows.push_back({ys[i], sol.f0[i], sol.f1[i], sol.l[i], sol.g0_hat[i], sol.g1_hat[i],
                          sol.delta_hat[i], sol.l_hat[i], static_cast<double>(sol.region[i])});
    return t;
}

Table limits_table(const RunConfig& c, const NominalPair& n) {
    Table t;
    add_problem_meta(t, c);
    std::vector<std::string> diag;
    const auto b = max_eps_general(n, c.alpha, c.rho, 0, c.eps0, &diag);
    double closed = std::numeric_limits<double>::quiet_NaN();
    const double a = bhattacharyya(n.f0, n.f1, n.grid);
    if (c.alpha == 0.5 && c.rho == 1.0) closed = hellinger_eps_other(c.eps0, a);
    const auto check = validate_eps(n, spec_of(c));
    for (std::size_t i = 0; i < diag.size(); ++i) t.meta.emplace_back(fmt::format("diagnostic{}", i), diag[i]);
    t.columns = {"alpha", "rho",     "eps0",  "eps1_boundary", "eps1_closed_form", "bhattacharyya",
                 "lambda0", "lambda1", "theta", "residual",    "eps1",             "feasible",
                 "margin"};
    t.rows.push_back({c.alpha, c.rho, c.eps0, b.eps1, closed, a, b.lambda0, b.lambda1, b.theta,
                      b.residual, c.eps1, std::string(check.feasible ? "1" : "0"), check.margin});
    return t;
}

Table surface_table(const RunConfig& c, const NominalPair& n) {
    const auto rep = eps_surface(c.alpha, c.surface_n, n, c.rho);
    Table t;
    t.meta.emplace_back("alpha", c.alpha);
    t.meta.emplace_back("rho", c.rho);
    t.meta.emplace_back("mode", rep.mode == FeasibilityReport::Mode::hellinger ? "hellinger" : "general");
    t.meta.emplace_back("bhattacharyya", rep.a_value);
    for (std::size_t i = 0; i < rep.diagnostics.size(); ++i)
        t.meta.emplace_back(fmt::format("diagnostic{}", i), rep.diagnostics[i]);
    t.columns = {"eps0", "eps1", "a", "feasible"};
    for (const auto& cell : rep.cells)
        t.rows.push_back({cell.eps0, cell.eps1, cell.a, std::string(cell.feasible ? "1" : "0")});
    return t;
}

Table evaluate_table(const RunConfig& c, const NominalPair& n) {
    const auto sol = solve_thresholds(spec_of(c), n);
    const auto m0 = parse_density_spec(c.nominal0), m1 = parse_density_spec(c.nominal1);
    const std::vector<double> ys(n.grid.points().begin(), n.grid.points().end());
    const auto d_nom = nominal_rule(n, c.rho);
    const TabulatedFunction nom_rule(ys, d_nom);
    const auto rob_rule = sol.delta_function();
    const auto g0m = sol.g0_model(), g1m = sol.g1_model();

    struct Case {
        const char* test;
        const char* densities;
        const std::vector<double>& delta;
        const TabulatedFunction& rule;
        const std::vector<double>& g0;
        const std::vector<double>& g1;
        const DensityModel& s0;
        const DensityModel& s1;
    };
    const Case cases[] = {
        {"nominal", "nominal", d_nom, nom_rule, n.f0, n.f1, m0, m1},
        {"nominal", "least_favorable", d_nom, nom_rule, sol.g0_hat, sol.g1_hat, g0m, g1m},
        {"robust", "nominal", sol.delta_hat, rob_rule, n.f0, n.f1, m0, m1},
        {"robust", "least_favorable", sol.delta_hat, rob_rule, sol.g0_hat, sol.g1_hat, g0m, g1m},
    };
    Table t;
    add_problem_meta(t, c);
    t.meta.emplace_back("l_l", sol.thresholds.l_l);
    t.meta.emplace_back("l_u", sol.thresholds.l_u);
    t.columns = {"test", "densities", "method", "p_fa", "p_miss", "p_error", "se_fa", "se_miss"};
    std::uint64_t stream = 0;
    for (const auto& k : cases) {
        const auto q = error_probs(k.delta, k.g0, k.g1, c.rho, n.grid);
        t.rows.push_back({std::string(k.test), std::string(k.densities), std::string("quadrature"),
                          q.p_false_alarm, q.p_miss, q.p_error, 0.0, 0.0});
        if (c.mc) {
            const auto& rule = k.rule;
            const auto r = monte_carlo_errors([&](double y) { return rule(y); }, k.s0, k.s1, c.rho,
                                              c.mc->n, stream_seed(c.mc->seed, stream++));
            t.rows.push_back({std::string(k.test), std::string(k.densities), std::string("monte_carlo"),
                              r.p_false_alarm, r.p_miss, r.p_error, r.se_false_alarm, r.se_miss});
        }
    }
    return t;
}

Table sweep_alpha_table(const RunConfig& c, const NominalPair& n) {
    const auto rows = alpha_sweep(spec_of(c), c.alphas, n);
    Table t;
    add_problem_meta(t, c);
    t.columns = {"alpha", "l_l", "l_u", "residual"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rows) {
        if (!r.ok) t.meta.emplace_back(fmt::format("failed_alpha_{}", format_number(r.alpha)), r.error);
        t.rows.push_back({r.alpha, r.ok ? r.l_l : nan, r.ok ? r.l_u : nan, r.ok ? r.residual : nan});
    }
    return t;
}

Table sweep_snr_table(const RunConfig& c) {
    SnrSweepConfig s;
    s.noise = parse_density_spec(c.noise);
    s.sigma = c.sigma;
    s.snr_db = c.snr_db;
    s.eps = c.eps_pairs;
    s.alpha = c.alpha;
    s.rho = c.rho;
    s.grid_points = c.grid.points;
    if (c.mc) {
        s.mc_samples = c.mc->n;
        s.mc_seed = c.mc->seed;
    }
    const auto rows = snr_sweep(s);
    Table t;
    t.meta.emplace_back("alpha", c.alpha);
    t.meta.emplace_back("rho", c.rho);
    t.meta.emplace_back("noise", c.noise);
    t.meta.emplace_back("sigma", c.sigma);
    t.columns = {"snr_db", "test", "eps0", "eps1", "p_fa", "p_miss"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rows) {
        const std::string test = r.feasible ? r.test : r.test + "-infeasible";
        t.rows.push_back({r.snr_db, test, r.eps0, r.eps1, r.feasible ? r.quadrature.p_false_alarm : nan,
                          r.feasible ? r.quadrature.p_miss : nan});
        if (c.mc && r.feasible)
            t.rows.push_back({r.snr_db, r.test + "-mc", r.eps0, r.eps1, r.monte_carlo.p_false_alarm,
                              r.monte_carlo.p_miss});
    }
    return t;
}

void write_error(std::ostream& err, const std::string& kind, const std::string& message,
                 std::optional<double> margin = std::nullopt) {
    Json j;
    j["error"] = kind;
    j["message"] = message;
    if (margin) j["margin"] = std::isfinite(*margin) ? Json(*margin) : Json(nullptr);
    err << j.dump() << '\n';
}

}  // namespace

void RunConfig::validate() const {
    if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
        fail(ErrorKind::invalid_argument, "unknown command '" + command + "'");
    if (grid.points < 3) fail(ErrorKind::invalid_argument, "grid needs at least 3 points");
    if (!(grid.max > grid.min)) fail(ErrorKind::invalid_argument, "grid needs min < max");
    if (mc && mc->n < 1000) fail(ErrorKind::invalid_argument, "Monte Carlo needs at least 1000 samples");
    if (surface_n < 2) fail(ErrorKind::invalid_argument, "surface_n must be at least 2");
    if (command != "sweep-alpha") spec_of(*this).validate();
}

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key), v = trim(raw_value);
    if (key == "command") c.command = v;
    else if (key == "nominal0") c.nominal0 = v;
    else if (key == "nominal1") c.nominal1 = v;
    else if (key == "alpha") c.alpha = to_double(key, v);
    else if (key == "rho") c.rho = to_double(key, v);
    else if (key == "eps0") c.eps0 = to_double(key, v);
    else if (key == "eps1") c.eps1 = to_double(key, v);
    else if (key == "grid") {
        const auto p = split(v, ':');
        if (p.size() != 3) fail(ErrorKind::invalid_argument, "grid must be min:max:n");
        c.grid = {to_double(key, p[0]), to_double(key, p[1]), static_cast<std::size_t>(to_count(key, p[2]))};
    } else if (key == "mc") {
        const auto p = split(v, ':');
        if (p.size() != 2) fail(ErrorKind::invalid_argument, "mc must be n:seed");
        c.mc = McSpec{static_cast<std::size_t>(to_count(key, p[0])), to_count(key, p[1])};
    } else if (key == "out") c.out = v;
    else if (key == "format") {
        if (v == "csv") c.format = Format::csv;
        else if (v == "json") c.format = Format::json;
        else fail(ErrorKind::invalid_argument, "format must be csv or json");
    } else if (key == "alphas") c.alphas = to_list(key, v);
    else if (key == "snr_db") c.snr_db = to_list(key, v);
    else if (key == "eps_pairs") {
        c.eps_pairs.clear();
        for (const auto& item : split(v, ',')) {
            const auto p = split(item, ':');
            if (p.size() != 2) fail(ErrorKind::invalid_argument, "eps_pairs must be e0:e1,e0:e1,...");
            c.eps_pairs.emplace_back(to_double(key, p[0]), to_double(key, p[1]));
        }
    } else if (key == "noise") c.noise = v;
    else if (key == "sigma") c.sigma = to_double(key, v);
    else if (key == "surface_n") c.surface_n = static_cast<int>(to_count(key, v));
    else fail(ErrorKind::invalid_argument, "unknown setting '" + key + "'");
}

void load_config_file(RunConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::invalid_argument, "cannot open config file '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::invalid_argument, fmt::format("{}:{}: expected key=value", path, lineno));
        apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
    }
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    std::optional<NominalPair> nominals;
    try {
        config.validate();
        Table table;
        if (config.command != "sweep-snr") nominals = nominals_of(config);
        if (config.command == "solve" || config.command == "solve-symmetric")
            table = solve_table(config, *nominals);
        else if (config.command == "limits")
            table = limits_table(config, *nominals);
        else if (config.command == "surface")
            table = surface_table(config, *nominals);
        else if (config.command == "evaluate")
            table = evaluate_table(config, *nominals);
        else if (config.command == "sweep-alpha")
            table = sweep_alpha_table(config, *nominals);
        else
            table = sweep_snr_table(config);

        if (config.out.empty()) {
            write_table(table, config.command, config.format, out);
        } else {
            std::ofstream file(config.out);
            if (!file) fail(ErrorKind::invalid_argument, "cannot write '" + config.out + "'");
            write_table(table, config.command, config.format, file);
        }
        return kExitOk;
    } catch (const Error& e) {
        switch (e.kind()) {
            case ErrorKind::infeasible_radius: {
                std::optional<double> margin;
                if (nominals) {
                    try {
                        margin = validate_eps(*nominals, spec_of(config)).margin;
                    } catch (const Error&) {
                    }
                }
                write_error(err, to_string(e.kind()), e.what(), margin);
                return kExitInfeasible;
            }
            case ErrorKind::no_convergence:
                write_error(err, to_string(e.kind()), e.what());
                return kExitNoConvergence;
            default:
                write_error(err, to_string(e.kind()), e.what());
                return kExitInvalid;
        }
    } catch (const std::exception& e) {
        write_error(err, "error", e.what());
        return kExitInvalid;
    }
}

int main(int argc, char** argv) {
    CLI::App app{"Minimax robust binary hypothesis tests under alpha-divergence uncertainty"};
    std::string config_path, command_pos, command_flag;
    std::map<std::string, std::string> overrides;
    std::vector<std::string> extra;
    app.add_option("cmd", command_pos, "solve | solve-symmetric | limits | surface | evaluate | "
                                           "sweep-alpha | sweep-snr");
    app.add_option("--config", config_path, "key=value configuration file");
    app.add_option("--command", command_flag, "command (alternative to the positional form)");
    for (const char* key : {"alpha", "rho", "eps0", "eps1", "nominal0", "nominal1", "out", "format",
                            "alphas", "snr_db", "eps_pairs", "noise", "sigma", "surface_n"})
        app.add_option_function<std::string>(
            std::string("--") + key, [key, &overrides](const std::string& v) { overrides[key] = v; });
    app.add_option_function<std::string>("--grid", [&](const std::string& v) { overrides["grid"] = v; },
                                         "min:max:n");
    app.add_option_function<std::string>("--mc", [&](const std::string& v) { overrides["mc"] = v; },
                                         "n:seed");
    app.add_option("--set", extra, "additional key=value settings");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInvalid;
    }

    RunConfig config;
    try {
        if (!config_path.empty()) load_config_file(config, config_path);
        for (const auto& kv : extra) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) fail(ErrorKind::invalid_argument, "--set expects key=value");
            apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
        }
        for (const auto& [k, v] : overrides) apply_setting(config, k, v);
        if (!command_pos.empty()) config.command = command_pos;
        if (!command_flag.empty()) config.command = command_flag;
    } catch (const Error& e) {
        write_error(std::cerr, to_string(e.kind()), e.what());
        return kExitInvalid;
    }
    return run(config, std::cout, std::cerr);
}

}  // namespace alpharobust::cli
