#include "gplab/gp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gplab/error.hpp"
#include "gplab/summation.hpp"

namespace gplab {

namespace {

void require_normalized(const ScalarField& phi) {
    const double norm = integrate_square(phi);
    if (std::abs(norm - 1.0) > 1e-8)
        throw InvalidArgument("GP energy needs a normalised field (∫φ² = " + std::to_string(norm) + ")");
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct Terms {
    double kinetic, trap, interaction;
    double total() const { return kinetic + trap + interaction; }
};

// Energy of φ given its -Δφ, using ⟨φ, -Δφ⟩ for the kinetic part.
Terms energy_terms(std::span<const double> phi, std::span<const double> lap, std::span<const double> v,
                   double g, double dv) {
    const std::size_t n = phi.size();
    const double k = pairwise_reduce(n, [&](std::size_t i) { return phi[i] * lap[i]; }) * dv;
    const double t = pairwise_reduce(n, [&](std::size_t i) { return v[i] * phi[i] * phi[i]; }) * dv;
    const double q = pairwise_reduce(n, [&](std::size_t i) {
                         const double p2 = phi[i] * phi[i];
                         return p2 * p2;
                     }) * dv;
    return {k, t, g * q};
}

ScalarField seed_field(const UniformGrid& grid, const TrapPotential& trap, const GPParams& params) {
    std::array<double, 3> w{1.0, 1.0, 1.0};
    if (!trap.is_tabulated()) {
        for (int a = 0; a < 3; ++a) w[a] = trap.omega()[a];
    }
    ScalarField f = ScalarField::sample(grid, [&](const auto& x) {
        double e = 0.0;
        for (int a = 0; a < grid.dim(); ++a) e += 0.5 * w[a] * x[a] * x[a];
        return std::exp(-e);
    });
    if (params.seed_kind == SeedKind::random) {
        std::mt19937_64 rng(params.seed);
        std::uniform_real_distribution<double> u(0.5, 1.5);
        for (auto& x : f.values()) x *= u(rng);
    }
    // Keep the seed strictly positive even where the envelope underflows.
    const double floor = 1e-300;
    for (auto& x : f.values()) x = std::max(x, floor);
    return f;
}

void normalize(const UniformGrid& grid, std::span<double> phi) {
    const double norm = std::sqrt(pairwise_dot(phi, phi) * grid.cell_volume());
    for (auto& x : phi) x /= norm;
}

}  // namespace

GPEnergy gp_energy(const ScalarField& phi, const ScalarField& trap_samples, double g) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidArgument("coupling g must be >= 0");
    if (!(phi.grid() == trap_samples.grid())) throw InvalidArgument("trap and field grids differ");
    require_normalized(phi);
    const double dv = phi.grid().cell_volume();
    const auto p = phi.values();
    const auto v = trap_samples.values();
    GPEnergy e;
    e.kinetic = kinetic_energy(phi);
    e.trap = pairwise_reduce(p.size(), [&](std::size_t i) { return v[i] * p[i] * p[i]; }) * dv;
    e.interaction = g * pairwise_reduce(p.size(), [&](std::size_t i) {
                            const double p2 = p[i] * p[i];
                            return p2 * p2;
                        }) * dv;
    e.total = e.kinetic + e.trap + e.interaction;
    return e;
}

GPEnergy gp_energy(const ScalarField& phi, const TrapPotential& trap, double g) {
    return gp_energy(phi, trap.sample(phi.grid()), g);
}

double chemical_potential(const GPState& state) {
    const auto p = state.phi.values();
    const double quartic = pairwise_reduce(p.size(), [&](std::size_t i) {
                               const double p2 = p[i] * p[i];
                               return p2 * p2;
                           }) * state.phi.grid().cell_volume();
    return state.energy.total + state.g * quartic;
}

namespace {

// Returns (μ_Rayleigh, residual) and optionally the residual vector.
std::pair<double, double> residual_parts(const ScalarField& phi, std::span<const double> lap,
                                         std::span<const double> v, double g, std::vector<double>* out) {
    const auto p = phi.values();
    const std::size_t n = p.size();
    const double dv = phi.grid().cell_volume();
    std::vector<double> hphi(n);
    for (std::size_t i = 0; i < n; ++i) hphi[i] = lap[i] + (v[i] + 2.0 * g * p[i] * p[i]) * p[i];
    const double norm2 = pairwise_dot(p, p) * dv;
    const double mu = pairwise_dot(p, hphi) * dv / norm2;
    for (std::size_t i = 0; i < n; ++i) hphi[i] -= mu * p[i];
    const double res = std::sqrt(pairwise_dot(hphi, hphi) * dv);
    if (out) *out = std::move(hphi);
    return {mu, res};
}

}  // namespace

double rayleigh_mu(const GPState& state, const TrapPotential& trap) {
    const ScalarField v = trap.sample(state.phi.grid());
    const ScalarField lap = laplacian_apply(state.phi);
    return residual_parts(state.phi, lap.values(), v.values(), state.g, nullptr).first;
}

double gp_residual(const GPState& state, const TrapPotential& trap) {
    const ScalarField v = trap.sample(state.phi.grid());
    const ScalarField lap = laplacian_apply(state.phi);
    return residual_parts(state.phi, lap.values(), v.values(), state.g, nullptr).second;
}

GPState make_gp_state(ScalarField phi, const TrapPotential& trap, double g) {
    const ScalarField v = trap.sample(phi.grid());
    GPState s{std::move(phi), g, {}, 0.0, 0.0};
    s.energy = gp_energy(s.phi, v, g);
    s.mu = chemical_potential(s);
    const ScalarField lap = laplacian_apply(s.phi);
    s.residual = residual_parts(s.phi, lap.values(), v.values(), g, nullptr).second;
    return s;
}

GPResult minimize_gp(const TrapPotential& trap, double g, const UniformGrid& grid, const GPParams& params) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidArgument("minimize_gp: coupling g must be >= 0");
    if (params.max_iters < 1) throw InvalidArgument("minimize_gp: max_iters must be positive");
    if (params.step < 0.0 || params.residual_tol < 0.0)
        throw InvalidArgument("minimize_gp: step and tolerance must be nonnegative");

    const ScalarField vfield = trap.sample(grid);
    const auto v = vfield.values();
    const double vmax = max_abs(v);
    const double dv = grid.cell_volume();
    const double h = grid.spacing();
    const double stencil_diag = 2.0 * grid.dim() / (h * h);
    const std::size_t n = grid.size();

    ScalarField phi = seed_field(grid, trap, params);
    normalize(grid, phi.values());
    std::vector<double> lap(n);
    apply_neg_laplacian(grid, phi.values(), lap);
    Terms terms = energy_terms(phi.values(), lap, v, g, dv);
    std::vector<double> r;
    auto [mu, res] = residual_parts(phi, lap, v, g, &r);

    GPResult out{GPState{phi, g, {}, 0.0, 0.0}, false, 0, {}};
    out.trace.push_back({0, terms.total(), res, 0.0});

    ScalarField trial(grid);
    std::vector<double> trial_lap(n);
    double shrink = 1.0;
    int it = 0;
    while (true) {
        const double tol = params.residual_tol > 0.0 ? params.residual_tol
                                                     : 1e-6 * std::max(1.0, std::abs(terms.total()));
        if (res <= tol) {
            out.converged = true;
            break;
        }
        if (it >= params.max_iters) break;
        ++it;

        // With dt·(diagonal of the linearised operator) < 1 the update map
        // has nonnegative entries, so positivity carries over from the seed.
        const double pmax = max_abs(phi.values());
        double dt = 0.9 / (stencil_diag + vmax + 2.0 * g * pmax * pmax);
        if (params.step > 0.0) dt = std::min(dt, params.step);
        dt *= shrink;

        auto p = phi.values();
        auto q = trial.values();
        for (std::size_t i = 0; i < n; ++i) q[i] = p[i] - dt * r[i];
        normalize(grid, q);
        apply_neg_laplacian(grid, q, trial_lap);
        const Terms trial_terms = energy_terms(q, trial_lap, v, g, dv);
        // Near convergence the energy change drops below round-off.
        if (trial_terms.total() > terms.total() + 1e-14 * std::abs(terms.total())) {
            shrink *= 0.5;
            if (shrink < 1e-12) break;
            continue;
        }
        shrink = std::min(1.0, shrink * 2.0);
        std::swap(phi, trial);
        std::swap(lap, trial_lap);
        terms = trial_terms;
        std::tie(mu, res) = residual_parts(phi, lap, v, g, &r);
        out.trace.push_back({it, terms.total(), res, dt});
    }
    out.iterations = it;
    out.state = make_gp_state(std::move(phi), trap, g);
    return out;
}

double coupling_3d(double n, double a) {
    if (!(n >= 1.0)) throw InvalidArgument("coupling: N must be >= 1");
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("coupling: a must be >= 0");
    return 4.0 * std::numbers::pi * n * a;
}

double coupling_2d(double n, double a) {
    if (!(n >= 1.0)) throw InvalidArgument("coupling: N must be >= 1");
    if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("coupling: a must be > 0");
    const double lg = std::log(a * a * n);
    if (lg == 0.0) throw InvalidArgument("coupling_2d: a²N = 1 makes the logarithm vanish");
    return 4.0 * std::numbers::pi * n / std::abs(lg);
}

}  // namespace gplab
