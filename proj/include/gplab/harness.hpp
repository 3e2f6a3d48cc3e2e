#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gplab/grid.hpp"
#include "gplab/potential.hpp"

namespace gplab {

enum class Mode { gp, manybody, sweep, props };

struct GridSpec {
    double L = 12.0;
    int M = 64;
    BoundaryCondition bc = BoundaryCondition::dirichlet;
    int dim = 3;
};

struct TrapSpec {
    std::string type = "harmonic";  // harmonic | none
    std::array<double, 3> omega{1.0, 1.0, 1.0};
};

struct InteractionSpec {
    std::string type = "zero";  // zero | hard_sphere | soft_sphere
    double radius = 0.0;
    double height = 0.0;
};

/// Either g directly or (N, a) in two or three dimensions.
struct CouplingSpec {
    std::optional<double> g;
    std::optional<double> N;
    std::optional<double> a;
    int dim = 3;
};

struct SolverSpec {
    double gp_tol = 1e-8;
    int gp_max_iters = 200000;
    double mb_tol = 1e-8;
    int mb_max_iters = 20000;
    int max_krylov = 60;
};

struct SweepSpec {
    std::vector<int> N{1, 2, 3};
    /// continuum: scale v₁ so its scattering length is a.
    /// lattice: additionally rescale the height so the lattice a_eff equals a.
    std::string calibrate = "lattice";
};

struct PropsSpec {
    std::vector<std::string> suites{"dyson", "poincare", "increment", "localization"};
    /// Radial test functions per potential in the dyson suite.
    std::size_t samples = 100;
    // poincare
    std::size_t poincare_samples = 1000;
    int poincare_M = 16;
    double poincare_g = 10.0;
    int poincare_gp_M = 32;
    // increment
    int increment_n = 1;
    int increment_M = 12;
    // localization
    int localization_M = 8;
};

struct ExperimentConfig {
    Mode mode = Mode::gp;
    GridSpec grid;
    TrapSpec trap;
    InteractionSpec interaction;
    std::optional<CouplingSpec> coupling;
    SolverSpec solver;
    int particles = 2;  // manybody mode
    SweepSpec sweep;
    PropsSpec props;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";
};

const char* to_string(Mode m);

/// Throws ConfigError naming the line and column of malformed JSON, or the
/// dotted path of an invalid field.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Command-line overrides for props mode; --samples sets both sample counts.
/// Throws ConfigError on unknown suites or a zero count.
void apply_props_overrides(ExperimentConfig& cfg, const std::vector<std::string>& suites,
                           std::optional<std::size_t> samples);

UniformGrid grid_of(const GridSpec& g);
TrapPotential trap_of(const TrapSpec& t);
InteractionPotential interaction_of(const InteractionSpec& s);
/// g from the coupling spec.
double coupling_of(const CouplingSpec& c);

namespace exit_code {
inline constexpr int pass = 0;
inline constexpr int assertion_failure = 1;
inline constexpr int config_error = 2;
inline constexpr int resource_failure = 3;
}  // namespace exit_code

/// Drivers write into cfg.output_dir and return an exit code.
int run_gp(const ExperimentConfig& cfg);
int run_manybody(const ExperimentConfig& cfg);
/// sweep.csv holds only deterministic columns; wall-clock times go to sweep_runtimes.csv.
int run_sweep(const ExperimentConfig& cfg, int jobs = 1);
int run_props(const ExperimentConfig& cfg, int jobs = 1);

/// Dispatches on cfg.mode and maps library exceptions to exit codes,
/// printing the message to stderr.
int run_experiment(const ExperimentConfig& cfg, int jobs = 1);

/// "%.17g".
std::string format_double(double x);

}  // namespace gplab
