#pragma once

#include <cstdint>
#include <vector>

#include "gplab/grid.hpp"
#include "gplab/potential.hpp"

namespace gplab {

struct GPEnergy {
    double kinetic = 0.0;
    double trap = 0.0;
    double interaction = 0.0;
    double total = 0.0;
};

/// Normalised minimiser of ∫ |∇φ|² + V φ² + g φ⁴.
struct GPState {
    ScalarField phi;
    double g = 0.0;
    GPEnergy energy;
    /// E + g ∫ φ⁴.
    double mu = 0.0;
    double residual = 0.0;
};

enum class SeedKind { gaussian, random };

struct GPParams {
    /// Upper bound on the imaginary-time step; 0 picks the stability limit.
    double step = 0.0;
    int max_iters = 200000;
    /// Stop once gp_residual ≤ tol. 0 selects 1e-6·max(1, |E|).
    double residual_tol = 0.0;
    SeedKind seed_kind = SeedKind::gaussian;
    std::uint64_t seed = 1;
};

struct GPTracePoint {
    int iteration;
    double energy;
    double residual;
    double step;
};

struct GPResult {
    GPState state;
    bool converged = false;
    int iterations = 0;
    /// Energies of accepted iterates; non-increasing up to 1e-14 relative round-off.
    std::vector<GPTracePoint> trace;
};

/// Energy split of a normalised φ (∫φ² = 1 within 1e-8).
GPEnergy gp_energy(const ScalarField& phi, const TrapPotential& trap, double g);
GPEnergy gp_energy(const ScalarField& phi, const ScalarField& trap_samples, double g);

/// Normalised gradient flow from a positive seed, renormalised every step and
/// stopped when the GP-equation residual drops below tolerance. Steps that
/// would raise the energy are rejected and retried with half the step.
GPResult minimize_gp(const TrapPotential& trap, double g, const UniformGrid& grid, const GPParams& params = {});

/// ⟨φ, (-Δ + V + 2gφ²) φ⟩.
double rayleigh_mu(const GPState& state, const TrapPotential& trap);
/// ‖-Δφ + Vφ + 2gφ³ - μφ‖₂ with μ the Rayleigh quotient above.
double gp_residual(const GPState& state, const TrapPotential& trap);
/// E + g ∫ φ⁴.
double chemical_potential(const GPState& state);

/// Builds a full GPState (energies, μ, residual) around a given normalised φ.
GPState make_gp_state(ScalarField phi, const TrapPotential& trap, double g);

/// g = 4π N a.
double coupling_3d(double n, double a);
/// g = 4π N / |ln(a² N)|.
double coupling_2d(double n, double a);

}  // namespace gplab
