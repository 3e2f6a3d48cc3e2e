#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gplab/gp_solver.hpp"
#include "gplab/grid.hpp"
#include "gplab/manybody.hpp"
#include "gplab/potential.hpp"

namespace gplab {

/// f_X(x) = Ψ(x, X) / φ(x) for the remaining particles fixed at sites X.
ScalarField conditional_factor(const ManyBodyState& state, const GPState& phi, const std::vector<std::size_t>& X);

struct LocalizationDiagnostic {
    double r_loc = 0.0;
    double I_far = 0.0;
    double I_total = 0.0;
    /// I_total / (g ∫φ⁴), present when g > 0.
    std::optional<double> s_estimate;
};

/// N^{-7/17}.
double default_localization_radius(int N);

/// Σ_X h^{3(N-1)} Σ_x φ² |∇f_X|² h³, once over every site (I_total) and once
/// over sites at distance ≥ r_loc from all of X (I_far). Gradients use lattice
/// faces inside the box only, since f_X has no value beyond the walls.
LocalizationDiagnostic localization_diagnostic(const ManyBodyState& state, const GPState& phi, double r_loc);

struct RadialSamples {
    std::vector<double> r;    // increasing nodes
    std::vector<double> psi;  // ψ(r) at the nodes
};

struct DysonReport {
    double lhs = 0.0;  // ∫_B |∇ψ|² + ½ v ψ²
    double rhs = 0.0;  // a ∫_B U ψ²
    double a = 0.0;
    bool satisfied = false;
};

/// Nodes from 0 through each breakpoint in turn, uniform between consecutive
/// breakpoints with step ≤ max_step, so every breakpoint is a node.
std::vector<double> radial_nodes(const std::vector<double>& breakpoints, double max_step);

/// Midpoint radial quadrature (weight 4πr²) of both sides over the cells
/// inside the ball; ψ is zeroed inside a hard core. satisfied = lhs ≥ rhs·(1 - slack).
DysonReport dyson_check(const InteractionPotential& v, const SoftPotentialU& U, const RadialSamples& psi,
                        double R_ball, double slack = 0.01);

struct PoincareDomain {
    enum class Kind { cube, ball };
    Kind kind = Kind::cube;
    double size = 1.0;  // side or radius, centred at the origin
};

enum class OmegaFamily { mixed, disconnected };

struct PoincareSample {
    std::size_t index = 0;
    double ratio = 0.0;
    double omega_fraction = 0.0;  // |Ω| / |K|
    int components = 0;
    std::string omega_kind;
};

struct PoincareProbeResult {
    PoincareDomain domain;
    std::size_t sample_count = 0;
    std::size_t skipped = 0;
    double C_estimate = 0.0;
    PoincareSample worst;
    /// C over all samples divided by C over the first half.
    double stability_ratio = 0.0;
    std::vector<PoincareSample> samples;
};

/// Draws band-limited f with ∫_K f h = 0 and random site sets Ω ⊂ K and
/// reports the largest ∫_K f² / [∫_Ω|∇f|² + (|Ω^c|/|K|)^{2/m} ∫_K|∇f|²].
/// K is the set of grid sites inside the domain; h must satisfy ∫_K h = 1.
/// Sample i draws from a generator seeded by (seed, i), so a larger run
/// extends a smaller one.
PoincareProbeResult poincare_probe(const PoincareDomain& K, const ScalarField& h, std::size_t samples,
                                   std::uint64_t seed, OmegaFamily family = OmegaFamily::mixed);

/// |φ|² trilinearly interpolated onto `target` and normalised over the sites
/// inside K.
ScalarField poincare_weight(const ScalarField& phi, const UniformGrid& target, const PoincareDomain& K);

struct BoxLowerBoundReference {
    double leading_term = 0.0;  // 4π a n² / L³
    double Y = 0.0;             // a³ n / L³
    bool eps_condition_met = false;  // ε ≥ Y^{1/17}
};

BoxLowerBoundReference box_lower_bound_reference(int n, double L, double a, double eps);

}  // namespace gplab
