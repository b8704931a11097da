#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ksv/errors.hpp"
#include "ksv/geometry.hpp"

namespace ksv {

/// Malformed or inconsistent configuration. `line` is 0 when the problem is not tied to one line.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, std::size_t line, const std::string& what);
    const std::string& field() const noexcept { return field_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string field_;
    std::size_t line_;
};

struct SpecConfig {
    std::size_t n = 1;
    std::vector<double> coupling;  // row-major n x n
    std::vector<double> beta;
    std::vector<Point> centers;
    friend bool operator==(const SpecConfig&, const SpecConfig&) = default;
};

struct GridConfig {
    double half_width = 12.0;
    std::size_t cells_per_side = 256;
    friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct SolverConfig {
    double tol_fp = 1e-9;
    int max_iterations = 20000;
    double theta0 = 0.5;
    double theta_floor = 1e-4;
    std::string init = "gaussian";  // gaussian | random
    double t_end = 10.0;
    std::size_t trace_samples = 200;
    double blow_up_factor = 100.0;
    std::size_t radial_points = 4096;
    double s_min = -12.0;
    double s_max = 3.0;
    friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct SweepConfig {
    std::string axis;            // mass | separation | approach (empty when unused)
    std::vector<double> values;  // explicit points; take precedence over from/to/count
    double from = 0.0;
    double to = 1.0;
    std::size_t count = 0;
    /// Resolved sweep points.
    std::vector<double> points() const;
    friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct OutputConfig {
    std::string dir = "out";
    bool dump_fields = false;
    friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct ExperimentConfig {
    std::string command;  // classify | minimize | radial | evolve | inequality | sweep
    std::uint64_t seed = 0;
    SpecConfig spec;
    GridConfig grid;
    SolverConfig solver;
    SweepConfig sweep;
    OutputConfig output;
    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses the INI-style configuration; throws ConfigError naming the line and field.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Writes every field back in the same format; parse_config inverts it exactly.
std::string serialize_config(const ExperimentConfig& config);

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitConvergence = 3, kExitSignal = 4 };

struct RunOutcome {
    int exit_code = kExitOk;
    std::string classification;  // ok | config-error | domain-error | convergence-failure | concentration | blow-up
    std::string message;
    std::filesystem::path result_path;
};

/// Runs the configured command, writing result.json, trace CSV files and optional
/// field dumps below config.output.dir. Never throws for module errors: they are
/// reported through the outcome and the result document.
RunOutcome run(const ExperimentConfig& config);

}  // namespace ksv
