#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gplab/gp_solver.hpp"
#include "gplab/grid.hpp"
#include "gplab/potential.hpp"

namespace gplab {

struct SolverOptions {
    /// Eigen-residual tolerance relative to max(1, |E|) for the unit vector.
    double tol = 1e-10;
    int max_iters = 20000;  // Hamiltonian applications
    std::uint64_t seed = 1;
    int max_krylov = 60;
    /// State-vector memory cap in MiB; 0 reads GPLAB_BUDGET_MB (default 2048).
    std::size_t budget_mb = 0;
};

/// Memory cap in bytes resolved from options and environment.
std::size_t state_budget_bytes(const SolverOptions& opts);

/// Configurations ψ(s_0, …, s_{N-1}) stored with particle 0 fastest; each s_i
/// is a flat grid site. Σψ² h^{3N} = 1 and ψ ≥ 0 after sign fixing.
struct ManyBodyState {
    int N = 0;
    UniformGrid grid;
    std::vector<double> psi;
    double energy = 0.0;
    double residual = 0.0;
    bool converged = false;
    int matvecs = 0;
    int krylov_dim = 0;
    /// max |ψ - ψ∘τ| / max|ψ| over particle transpositions τ.
    double symmetry_error = 0.0;
};

/// Lowest eigenpair of Σ_i(-Δ_i + V(x_i)) + Σ_{i<j} v(|x_i - x_j|) on a 3D
/// grid. Pair distances use the minimum image for periodic grids. Hard cores
/// pin excluded configurations to zero. Throws ResourceError when the Krylov
/// basis cannot fit the budget; a stalled solve returns converged = false.
ManyBodyState ground_state(int N, const UniformGrid& grid, const TrapPotential& trap,
                           const InteractionPotential& v, const SolverOptions& opts = {});

/// Kernel γ(x, x') with Tr γ = Σ γ(x, x) h³.
struct OneParticleDensityMatrix {
    UniformGrid grid;
    int N = 0;
    Eigen::MatrixXd kernel;

    double trace() const;
};

OneParticleDensityMatrix reduced_density_matrix(const ManyBodyState& state);

/// Ascending eigenvalues of γ as an integral operator (kernel times h³).
Eigen::VectorXd density_matrix_spectrum(const OneParticleDensityMatrix& gamma);

struct MomentumDensity {
    MomentumGrid kgrid;
    std::vector<double> values;

    /// Σ ρ̂ Δk³/(2π)³
    double integral() const;
};

/// ρ̂(k) = Σ_{x,x'} γ(x,x') e^{ik(x-x')} h⁶.
MomentumDensity momentum_density(const OneParticleDensityMatrix& gamma);

struct CondensateReport {
    double lambda_max_over_N = 0.0;
    double overlap = 0.0;
    double trace_distance = 0.0;
    double momentum_l1_distance = 0.0;
};

CondensateReport condensate_report(const OneParticleDensityMatrix& gamma, const GPState& gp);

/// E^U_ε(n, L): lowest eigenvalue of Σ_i(-½εΔ_i + a U(t_i)) on a Neumann box
/// of side L with M cells per axis, t_i the distance to the nearest other
/// particle. Throws ConvergenceError if the solve stalls.
double soft_box_energy(int n, double L, double eps, double a, const SoftPotentialU& U, int M,
                       const SolverOptions& opts = {});

struct IncrementReport {
    double e_n = 0.0;
    double e_n1 = 0.0;
    double lhs = 0.0;  // e_n1 - e_n
    double rhs = 0.0;  // 8π a n / L³
    bool satisfied = false;
};

IncrementReport verify_increment_bound(int n, double L, double eps, double a, const SoftPotentialU& U, int M,
                                       double slack = 0.02, const SolverOptions& opts = {});

struct LatticeScattering {
    double a_eff = 0.0;
    double a_small_window = 0.0;
    double a_large_window = 0.0;
};

/// Scattering length of -2Δ_h + v on the lattice hZ³: the zero-energy
/// relative-motion problem with u = 1 outside a cube of half-width W sites
/// gives a_W = E_W / 8π, extrapolated linearly in 1/W from W and 2W.
LatticeScattering lattice_scattering_length(const InteractionPotential& v, double h, int window = 16);

}  // namespace gplab
