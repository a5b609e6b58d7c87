#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace alpharobust::cli {

enum class Format { csv, json };

struct GridSpec {
    double min = -8.0;
    double max = 9.0;
    std::size_t points = 4001;
};

struct McSpec {
    std::size_t n = 100000;
    std::uint64_t seed = 1;
};

/// Flat run configuration. Every field can be set from a `key=value` file
/// and overridden on the command line.
struct RunConfig {
    std::string command;
    std::string nominal0 = "gaussian(-1,1)";
    std::string nominal1 = "gaussian(1,1)";
    double alpha = 0.5;
    double rho = 1.0;
    double eps0 = 0.0;
    double eps1 = 0.0;
    GridSpec grid;
    std::optional<McSpec> mc;
    std::string out;  ///< empty writes to the standard output
    Format format = Format::csv;

    // Sweep and surface settings.
    std::vector<double> alphas{2.0, 4.0, 10.0, 50.0};
    std::vector<double> snr_db{-5.0, 0.0, 5.0, 10.0};
    std::vector<std::pair<double, double>> eps_pairs{{0.005, 0.005}, {0.01, 0.01}};
    std::string noise = "gaussian(0,1)";
    double sigma = 1.0;
    int surface_n = 41;

    /// Throws invalid_argument when the command is unknown or a required
    /// field is out of range.
    void validate() const;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitNoConvergence = 3;

/// Applies one `key=value` setting. Throws invalid_argument for unknown keys
/// or malformed values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Reads a flat `key=value` file ('#' starts a comment) into `config`.
void load_config_file(RunConfig& config, const std::string& path);

/// Executes the configured command, writing the artifact to `config.out`
/// (or `out` when no path is set) and error payloads to `err`. Returns the
/// process exit status.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Command-line entry point: parses flags, loads the config file, applies
/// overrides and calls `run`.
int main(int argc, char** argv);

}  // namespace alpharobust::cli
