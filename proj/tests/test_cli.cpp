#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "alpharobust/cli.hpp"
#include "alpharobust/errors.hpp"
#include "alpharobust/limits.hpp"

using namespace alpharobust;
using namespace alpharobust::cli;

namespace {

const char* kNoise = "mixture(0.5*gaussian(-2,1)+0.5*gaussian(2,1))";

RunConfig mixture_config(const std::string& command) {
    RunConfig c;
    c.command = command;
    c.nominal0 = kNoise;
    c.nominal1 = std::string("shift(") + kNoise + ",1)";
    c.alpha = 4.0;
    c.eps0 = 0.02;
    c.eps1 = 0.03;
    return c;
}

struct Csv {
    std::map<std::string, std::string> meta;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::vector<double> column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        const std::size_t k = it - header.begin();
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(std::stod(r.at(k)));
        return v;
    }
};

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string cell;
    while (std::getline(in, cell, ',')) out.push_back(cell);
    return out;
}

Csv parse_csv(const std::string& text) {
    Csv csv;
    std::stringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0) {
            const auto eq = line.find('=');
            csv.meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
        } else if (csv.header.empty()) {
            csv.header = split(line);
        } else {
            csv.rows.push_back(split(line));
        }
    }
    return csv;
}

double trapezoid(const std::vector<double>& y, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 1; i < y.size(); ++i) s += 0.5 * (y[i] - y[i - 1]) * (v[i] + v[i - 1]);
    return s;
}

}  // namespace

TEST(ApplySetting, ParsesEveryField) {
    RunConfig c;
    apply_setting(c, "grid", "-4:5:101");
    apply_setting(c, "mc", "20000:9");
    apply_setting(c, " alpha ", " 2.5 ");
    apply_setting(c, "eps_pairs", "0.01:0.02,0.03:0.04");
    apply_setting(c, "format", "json");
    EXPECT_EQ(c.grid.points, 101u);
    EXPECT_DOUBLE_EQ(c.grid.min, -4.0);
    ASSERT_TRUE(c.mc.has_value());
    EXPECT_EQ(c.mc->seed, 9u);
    EXPECT_DOUBLE_EQ(c.alpha, 2.5);
    ASSERT_EQ(c.eps_pairs.size(), 2u);
    EXPECT_DOUBLE_EQ(c.eps_pairs[1].second, 0.04);
    EXPECT_EQ(c.format, Format::json);
}

TEST(ApplySetting, RejectsBadInput) {
    RunConfig c;
    EXPECT_THROW(apply_setting(c, "colour", "red"), Error);
    EXPECT_THROW(apply_setting(c, "alpha", "four"), Error);
    EXPECT_THROW(apply_setting(c, "grid", "0:1"), Error);
    EXPECT_THROW(apply_setting(c, "format", "xml"), Error);
}

TEST(LoadConfigFile, KeyValueWithComments) {
    const std::string path = ::testing::TempDir() + "run.cfg";
    std::ofstream(path) << "# anchor problem\ncommand = solve\nalpha=4   # order\n\neps0=0.02\n";
    RunConfig c;
    load_config_file(c, path);
    EXPECT_EQ(c.command, "solve");
    EXPECT_DOUBLE_EQ(c.alpha, 4.0);
    EXPECT_DOUBLE_EQ(c.eps0, 0.02);
    std::ofstream(path) << "alpha 4\n";
    EXPECT_THROW(load_config_file(c, path), Error);
    std::remove(path.c_str());
}

TEST(Run, SolveRecordsThresholdsAndNormalizedColumns) {
    std::ostringstream out, err;
    ASSERT_EQ(run(mixture_config("solve"), out, err), kExitOk) << err.str();
    const auto csv = parse_csv(out.str());
    EXPECT_NEAR(std::stod(csv.meta.at("l_l")), 0.605, 0.01);
    EXPECT_NEAR(std::stod(csv.meta.at("l_u")), 1.618, 0.01);
    EXPECT_EQ(csv.header, (std::vector<std::string>{"y", "f0", "f1", "l", "g0_hat", "g1_hat",
                                                    "delta_hat", "l_hat", "region"}));
    const auto y = csv.column("y");
    for (const char* col : {"f0", "f1", "g0_hat", "g1_hat"})
        EXPECT_NEAR(trapezoid(y, csv.column(col)), 1.0, 1e-5) << col;
}

TEST(Run, ZeroRadiiCopyTheNominals) {
    auto c = mixture_config("solve");
    c.eps0 = c.eps1 = 0.0;
    c.grid.points = 401;
    std::ostringstream out, err;
    ASSERT_EQ(run(c, out, err), kExitOk);
    const auto csv = parse_csv(out.str());
    EXPECT_EQ(csv.column("g0_hat"), csv.column("f0"));
    EXPECT_EQ(csv.column("g1_hat"), csv.column("f1"));
}

TEST(Run, JsonMirror) {
    auto c = mixture_config("solve");
    c.format = Format::json;
    std::ostringstream out, err;
    ASSERT_EQ(run(c, out, err), kExitOk);
    const auto j = nlohmann::json::parse(out.str());
    for (const char* key : {"alpha", "rho", "eps0", "eps1", "l_l", "l_u", "k", "z", "residual_norm",
                            "achieved_eps0", "achieved_eps1"})
        EXPECT_TRUE(j["meta"].contains(key)) << key;
    EXPECT_EQ(j["rows"].size(), 4001u);
}

TEST(Run, LimitsAtHalfOrderUseTheClosedForm) {
    RunConfig c;
    c.command = "limits";
    c.alpha = 0.5;
    c.eps0 = 0.2;
    std::ostringstream out, err;
    ASSERT_EQ(run(c, out, err), kExitOk) << err.str();
    const auto csv = parse_csv(out.str());
    const double a = csv.column("bhattacharyya")[0];
    EXPECT_NEAR(a, std::exp(-0.5), 1e-8);
    EXPECT_NEAR(csv.column("eps1_boundary")[0], hellinger_eps_other(0.2, a), 1e-6);
}

TEST(Run, InfeasibleRadiiExitWithMargin) {
    RunConfig c;
    c.command = "solve";
    c.eps0 = c.eps1 = 3.0;
    std::ostringstream out, err;
    EXPECT_EQ(run(c, out, err), kExitInfeasible);
    const auto j = nlohmann::json::parse(err.str());
    EXPECT_LT(j["margin"].get<double>(), 0.0);
}

TEST(Run, InvalidInputsExitWithOne) {
    RunConfig c;
    c.command = "solve";
    c.nominal0 = "cauchy(0,1)";
    std::ostringstream out, err;
    EXPECT_EQ(run(c, out, err), kExitInvalid);
    c.nominal0 = "gaussian(-1,1)";
    c.alpha = 1.0;
    EXPECT_EQ(run(c, out, err), kExitInvalid);
    c.alpha = 0.5;
    c.command = "plot";
    EXPECT_EQ(run(c, out, err), kExitInvalid);
}

TEST(Run, SweepsFollowTheirSchemas) {
    auto a = mixture_config("sweep-alpha");
    std::ostringstream out, err;
    ASSERT_EQ(run(a, out, err), kExitOk);
    EXPECT_EQ(parse_csv(out.str()).header, (std::vector<std::string>{"alpha", "l_l", "l_u", "residual"}));

    RunConfig s;
    s.command = "sweep-snr";
    s.snr_db = {0.0};
    s.grid.points = 1001;
    std::ostringstream o2;
    ASSERT_EQ(run(s, o2, err), kExitOk);
    const auto csv = parse_csv(o2.str());
    EXPECT_EQ(csv.header, (std::vector<std::string>{"snr_db", "test", "eps0", "eps1", "p_fa", "p_miss"}));
    EXPECT_EQ(csv.rows.size(), 3u);

    RunConfig f;
    f.command = "surface";
    f.surface_n = 5;
    std::ostringstream o3;
    ASSERT_EQ(run(f, o3, err), kExitOk);
    const auto surf = parse_csv(o3.str());
    EXPECT_EQ(surf.header, (std::vector<std::string>{"eps0", "eps1", "a", "feasible"}));
    EXPECT_EQ(surf.rows.size(), 25u);
}

TEST(Run, ByteIdenticalAcrossRuns) {
    RunConfig c;
    c.command = "evaluate";
    c.eps0 = c.eps1 = 0.05;
    c.grid = {-7.5, 7.5, 1501};
    c.mc = McSpec{5000, 21};
    std::ostringstream a, b, err;
    ASSERT_EQ(run(c, a, err), kExitOk) << err.str();
    ASSERT_EQ(run(c, b, err), kExitOk);
    EXPECT_EQ(a.str(), b.str());
}

TEST(Main, FlagsOverrideTheConfigFile) {
    const std::string cfg = ::testing::TempDir() + "main.cfg";
    const std::string out = ::testing::TempDir() + "main.csv";
    std::ofstream(cfg) << "command=limits\nalpha=4\neps0=0.01\n";
    std::vector<std::string> args{"alpharobust", "--config", cfg, "--alpha", "0.5", "--eps0", "0.2",
                                  "--out", out};
    std::vector<char*> argv;
    for (auto& s : args) argv.push_back(s.data());
    ASSERT_EQ(cli::main(static_cast<int>(argv.size()), argv.data()), kExitOk);
    std::ifstream in(out);
    std::stringstream text;
    text << in.rdbuf();
    const auto csv = parse_csv(text.str());
    EXPECT_EQ(csv.meta.at("alpha"), "0.5");
    EXPECT_DOUBLE_EQ(csv.column("eps0")[0], 0.2);
    std::remove(cfg.c_str());
    std::remove(out.c_str());
}
