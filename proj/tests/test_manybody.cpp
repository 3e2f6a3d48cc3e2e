#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "dense_oracle.hpp"
#include "gplab/error.hpp"
#include "gplab/manybody.hpp"

using namespace gplab;
using std::numbers::pi;

namespace {

const TrapPotential ho = TrapPotential::harmonic({1.0, 1.0, 1.0});

SolverOptions tight() {
    SolverOptions o;
    o.tol = 1e-12;
    return o;
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

// N-fold product state of a normalised single-particle field.
ManyBodyState product_state(const ScalarField& phi, int N) {
    const std::size_t S = phi.size();
    std::size_t D = 1;
    for (int i = 0; i < N; ++i) D *= S;
    ManyBodyState st{N, phi.grid(), std::vector<double>(D), 0.0, 0.0, true, 0, 0, 0.0};
    for (std::size_t c = 0; c < D; ++c) {
        std::size_t r = c;
        double v = 1.0;
        for (int i = 0; i < N; ++i) {
            v *= phi[r % S];
            r /= S;
        }
        st.psi[c] = v;
    }
    return st;
}

ScalarField normalised(ScalarField f) {
    const double n = std::sqrt(integrate_square(f));
    for (auto& v : f.values()) v /= n;
    return f;
}

GPState gp_of(const ScalarField& phi) { return make_gp_state(phi, ho, 0.0); }

void check_gamma_contract(const OneParticleDensityMatrix& g) {
    CHECK(max_abs_diff(g.kernel, g.kernel.transpose()) == 0.0);
    const auto ev = density_matrix_spectrum(g);
    CHECK(ev(0) >= -1e-10 * ev(ev.size() - 1));
    CHECK(std::abs(g.trace() - g.N) <= 1e-8 * g.N);
    const auto rho = momentum_density(g);
    CHECK(std::abs(rho.integral() - g.N) <= 1e-3 * g.N);
    for (double v : rho.values) CHECK(v >= -1e-10);
}

}  // namespace

TEST_CASE("single particle in a harmonic trap") {
    const auto st = ground_state(1, make_grid(12.0, 32, BoundaryCondition::dirichlet), ho, InteractionPotential::zero());
    REQUIRE(st.converged);
    CHECK(st.energy == doctest::Approx(3.0).epsilon(0.02));
}

TEST_CASE("non-interacting pair is a product state") {
    const auto grid = make_grid(6.0, 8, BoundaryCondition::dirichlet);
    const auto one = ground_state(1, grid, ho, InteractionPotential::zero(), tight());
    const auto two = ground_state(2, grid, ho, InteractionPotential::zero(), tight());
    REQUIRE(one.converged);
    REQUIRE(two.converged);
    CHECK(two.energy == doctest::Approx(2.0 * one.energy).epsilon(1e-10));
    const auto prod = product_state(ScalarField(grid, one.psi), 2);
    double worst = 0.0, peak = 0.0;
    for (std::size_t c = 0; c < prod.psi.size(); ++c) {
        worst = std::max(worst, std::abs(prod.psi[c] - two.psi[c]));
        peak = std::max(peak, prod.psi[c]);
    }
    CHECK(worst <= 1e-8 * peak);
}

TEST_CASE("dense oracle: soft sphere, M = 4") {
    const auto grid = make_grid(4.0, 4, BoundaryCondition::dirichlet);
    const auto v = InteractionPotential::soft_sphere(3.0, 1.5);
    const auto ref = oracle::two_particle(grid, ho, v);
    const auto st = ground_state(2, grid, ho, v, tight());
    REQUIRE(st.converged);
    CHECK(std::abs(st.energy - ref.energy) <= 1e-9);
    CHECK(max_abs_diff(reduced_density_matrix(st).kernel, ref.gamma) <= 1e-8);
}

TEST_CASE("dense oracle: hard core under every boundary condition") {
    const auto v = InteractionPotential::hard_sphere(1.2);
    for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::neumann, BoundaryCondition::periodic}) {
        CAPTURE(to_string(bc));
        const auto grid = make_grid(3.0, 3, bc);
        const auto trap = bc == BoundaryCondition::periodic ? TrapPotential::none() : ho;
        const auto ref = oracle::two_particle(grid, trap, v);
        const auto st = ground_state(2, grid, trap, v, tight());
        REQUIRE(st.converged);
        CHECK(std::abs(st.energy - ref.energy) <= 1e-9);
        CHECK(max_abs_diff(reduced_density_matrix(st).kernel, ref.gamma) <= 1e-8);
    }
}

TEST_CASE("ground state invariants") {
    const auto grid = make_grid(6.0, 6, BoundaryCondition::dirichlet);
    for (const auto& v : {InteractionPotential::soft_sphere(4.0, 1.5), InteractionPotential::hard_sphere(1.1)}) {
        const auto st = ground_state(2, grid, ho, v);
        REQUIRE(st.converged);
        CHECK(st.symmetry_error <= 1e-10);
        double peak = 0.0, low = 0.0, norm = 0.0;
        for (double x : st.psi) {
            peak = std::max(peak, x);
            low = std::min(low, x);
            norm += x * x;
        }
        CHECK(low >= -1e-12 * peak);
        CHECK(norm * std::pow(grid.cell_volume(), 2) == doctest::Approx(1.0).epsilon(1e-12));
        check_gamma_contract(reduced_density_matrix(st));
    }
}

TEST_CASE("energy and condensate fraction across a repulsion ladder") {
    const auto grid = make_grid(6.0, 6, BoundaryCondition::dirichlet);
    const auto gp = minimize_gp(ho, 0.0, grid, GPParams{0.0, 200000, 1e-12});
    const double e1 = ground_state(1, grid, ho, InteractionPotential::zero()).energy;
    double prev_e = -1.0, prev_lambda = 2.0;
    for (double v0 : {0.0, 1.0, 4.0, 16.0}) {
        const auto st = ground_state(2, grid, ho, InteractionPotential::soft_sphere(v0, 1.5));
        REQUIRE(st.converged);
        const auto rep = condensate_report(reduced_density_matrix(st), gp.state);
        CHECK(st.energy >= 2.0 * e1 - 1e-10);
        CHECK(st.energy > prev_e);
        CHECK(rep.lambda_max_over_N < prev_lambda);
        CHECK(rep.overlap <= rep.lambda_max_over_N + 1e-12);
        CHECK(rep.lambda_max_over_N <= 1.0 + 1e-12);
        CHECK(rep.trace_distance >= 0.0);
        CHECK(rep.trace_distance <= 2.0 + 1e-12);
        CHECK(rep.momentum_l1_distance <= rep.trace_distance + 1e-10);
        prev_e = st.energy;
        prev_lambda = rep.lambda_max_over_N;
    }
}

TEST_CASE("product states give rank-one density matrices") {
    const auto grid = make_grid(6.0, 6, BoundaryCondition::dirichlet);
    const auto phi = normalised(ScalarField::sample(grid, [](const auto& x) {
        return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
    }));
    for (int N : {1, 2, 3}) {
        const auto g = reduced_density_matrix(product_state(phi, N));
        check_gamma_contract(g);
        const auto ev = density_matrix_spectrum(g);
        CHECK(ev(ev.size() - 1) == doctest::Approx(N).epsilon(1e-12));
        CHECK(std::abs(ev(ev.size() - 2)) <= 1e-12 * N);
        const auto rep = condensate_report(g, gp_of(phi));
        CHECK(rep.lambda_max_over_N == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(rep.overlap == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rep.trace_distance <= 1e-10);
        CHECK(rep.momentum_l1_distance <= 1e-10);
    }
}

TEST_CASE("orthogonal projectors are at trace distance 2") {
    const auto grid = make_grid(6.0, 6, BoundaryCondition::dirichlet);
    const auto phi = normalised(ScalarField::sample(grid, [](const auto& x) {
        return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
    }));
    const auto chi = normalised(ScalarField::sample(grid, [](const auto& x) {
        return x[0] * std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
    }));
    const auto rep = condensate_report(reduced_density_matrix(product_state(chi, 2)), gp_of(phi));
    CHECK(rep.trace_distance == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(std::abs(rep.overlap) <= 1e-12);
}

TEST_CASE("momentum density of a Gaussian product state") {
    const auto grid = make_grid(10.0, 12, BoundaryCondition::dirichlet);
    const auto phi = normalised(ScalarField::sample(grid, [](const auto& x) {
        return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
    }));
    const auto rho = momentum_density(reduced_density_matrix(product_state(phi, 2)));
    // |φ̂|² = 8 π^{3/2} e^{-k²} for φ = π^{-3/4} e^{-x²/2}.
    const double peak = 2.0 * 8.0 * std::pow(pi, 1.5);
    for (std::size_t i = 0; i < rho.values.size(); ++i) {
        const auto k = rho.kgrid.wavevector(i);
        const double exact = peak * std::exp(-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
        CHECK(std::abs(rho.values[i] - exact) <= 2e-3 * peak);
    }
    CHECK(rho.integral() == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("grid mismatch is rejected") {
    const auto a = make_grid(6.0, 6, BoundaryCondition::dirichlet);
    const auto b = make_grid(6.0, 4, BoundaryCondition::dirichlet);
    const auto phi = normalised(ScalarField::sample(b, [](const auto&) { return 1.0; }));
    const auto st = ground_state(1, a, ho, InteractionPotential::zero());
    CHECK_THROWS_AS(condensate_report(reduced_density_matrix(st), gp_of(phi)), InvalidArgument);
}

TEST_CASE("preconditions and resource limits") {
    const auto grid = make_grid(6.0, 6, BoundaryCondition::dirichlet);
    CHECK_THROWS_AS(ground_state(4, grid, ho, InteractionPotential::zero()), InvalidArgument);
    CHECK_THROWS_AS(ground_state(2, grid, ho, InteractionPotential::hard_sphere(7.0)), InvalidArgument);
    SolverOptions small;
    small.budget_mb = 16;
    CHECK_THROWS_AS(ground_state(3, grid, ho, InteractionPotential::zero(), small), ResourceError);

    setenv("GPLAB_BUDGET_MB", "16", 1);
    CHECK(state_budget_bytes({}) == (std::size_t{16} << 20));
    CHECK_THROWS_AS(ground_state(3, grid, ho, InteractionPotential::zero()), ResourceError);
    setenv("GPLAB_BUDGET_MB", "lots", 1);
    CHECK_THROWS_AS(state_budget_bytes({}), ConfigError);
    unsetenv("GPLAB_BUDGET_MB");
}

TEST_CASE("stalled solve reports failure with its residual") {
    SolverOptions o;
    o.max_iters = 3;
    const auto st = ground_state(2, make_grid(6.0, 6, BoundaryCondition::dirichlet), ho,
                                 InteractionPotential::soft_sphere(4.0, 1.5), o);
    CHECK_FALSE(st.converged);
    CHECK(st.residual > o.tol);
}

TEST_CASE("soft box energies") {
    const auto U = softened_potential(0.02, 0.2);
    SUBCASE("one particle feels no interaction") {
        for (double eps : {0.0, 0.1, 1.0}) CHECK(soft_box_energy(1, 1.0, eps, 0.01, U, 6) == 0.0);
    }
    SUBCASE("static particles sit out of range") {
        CHECK(soft_box_energy(2, 1.0, 0.0, 0.01, U, 6) == 0.0);
    }
    SUBCASE("pair energy is positive and below the bound") {
        const double e = soft_box_energy(2, 1.0, 0.1, 0.01, U, 6);
        CHECK(e > 0.0);
        CHECK(e <= 8.0 * pi * 0.01);
    }
    SUBCASE("zero coupling") {
        const auto r = verify_increment_bound(1, 1.0, 0.1, 0.0, U, 6);
        CHECK(r.lhs == 0.0);
        CHECK(r.rhs == 0.0);
        CHECK(r.satisfied);
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(soft_box_energy(4, 1.0, 0.1, 0.01, U, 4), InvalidArgument);
        CHECK_THROWS_AS(soft_box_energy(2, 1.0, -0.1, 0.01, U, 4), InvalidArgument);
    }
}

TEST_CASE("lattice scattering length") {
    SUBCASE("on-site hard core") {
        // u = 1 - G/G(0) with G(0) = 0.252731... h⁻¹ (Watson's integral).
        const double watson = 0.2527310098;
        const auto s = lattice_scattering_length(InteractionPotential::hard_sphere(0.3), 1.0);
        CHECK(s.a_eff == doctest::Approx(1.0 / (4.0 * pi * watson)).epsilon(2e-3));
        CHECK(s.a_small_window > s.a_large_window);
    }
    SUBCASE("approaches the continuum value as the lattice refines") {
        const auto v = InteractionPotential::soft_sphere(0.2, 4.0);
        const double a = scattering_length(v);
        const double coarse = std::abs(lattice_scattering_length(v, 1.0).a_eff - a);
        const double fine = std::abs(lattice_scattering_length(v, 0.5, 24).a_eff - a);
        CHECK(fine < coarse);
        CHECK(fine < 0.05 * a);
    }
    SUBCASE("zero potential") { CHECK(lattice_scattering_length(InteractionPotential::zero(), 1.0).a_eff == 0.0); }
}
