#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "gplab/error.hpp"
#include "gplab/inequality.hpp"

using namespace gplab;
using std::numbers::pi;

namespace {

const TrapPotential ho = TrapPotential::harmonic({1.0, 1.0, 1.0});

ScalarField gaussian(const UniformGrid& grid) {
    auto f = ScalarField::sample(grid, [](const auto& x) {
        return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
    });
    const double n = std::sqrt(integrate_square(f));
    for (auto& v : f.values()) v /= n;
    return f;
}

ManyBodyState product_state(const ScalarField& phi) {
    const std::size_t S = phi.size();
    ManyBodyState st{2, phi.grid(), std::vector<double>(S * S), 0.0, 0.0, true, 0, 0, 0.0};
    for (std::size_t b = 0; b < S; ++b)
        for (std::size_t a = 0; a < S; ++a) st.psi[a + S * b] = phi[a] * phi[b];
    return st;
}

struct HardCoreCase {
    ManyBodyState state;
    GPState gp;
};

// Two hard-core bosons with GP coupling from the lattice scattering length.
const HardCoreCase& hard_core_case() {
    static const HardCoreCase c = [] {
        const auto grid = make_grid(6.0, 8, BoundaryCondition::dirichlet);
        const auto v = InteractionPotential::hard_sphere(0.3);
        auto st = ground_state(2, grid, ho, v);
        const double a_eff = lattice_scattering_length(v, grid.spacing()).a_eff;
        auto gp = minimize_gp(ho, coupling_3d(2, a_eff), grid, GPParams{0.0, 200000, 1e-10});
        return HardCoreCase{std::move(st), std::move(gp.state)};
    }();
    return c;
}

}  // namespace

TEST_CASE("conditional factor of a product state is one") {
    const auto grid = make_grid(6.0, 6, BoundaryCondition::dirichlet);
    const auto phi = gaussian(grid);
    const auto gp = make_gp_state(phi, ho, 0.0);
    const auto st = product_state(phi);
    for (std::size_t X : {0ul, 17ul, 100ul}) {
        const auto f = conditional_factor(st, gp, {X});
        for (double v : f.values()) CHECK(v == doctest::Approx(phi[X]).epsilon(1e-14));
    }
}

TEST_CASE("conditional factor reconstructs the wavefunction") {
    const auto& c = hard_core_case();
    const std::size_t S = c.state.grid.size();
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<std::size_t> pick(0, S - 1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t X = pick(rng);
        const auto f = conditional_factor(c.state, c.gp, {X});
        double worst = 0.0;
        for (std::size_t x = 0; x < S; ++x) {
            CHECK(f[x] >= -1e-12);
            worst = std::max(worst, std::abs(f[x] * c.gp.phi[x] - c.state.psi[x + S * X]));
        }
        CHECK(worst <= 1e-12);
        // The hard core removes the coincident configuration.
        CHECK(f[X] == 0.0);
    }
}

TEST_CASE("conditional factor preconditions") {
    const auto grid = make_grid(6.0, 6, BoundaryCondition::dirichlet);
    auto phi = gaussian(grid);
    const auto st = product_state(phi);
    phi[3] = 0.0;
    const GPState bad{phi, 0.0, {}, 0.0, 0.0};
    CHECK_THROWS_AS(conditional_factor(st, bad, {0}), InvalidArgument);
    CHECK_THROWS_AS(localization_diagnostic(st, bad, 1.0), InvalidArgument);
    const auto good = make_gp_state(gaussian(grid), ho, 0.0);
    CHECK_THROWS_AS(conditional_factor(st, good, {0, 1}), InvalidArgument);
    CHECK_THROWS_AS(localization_diagnostic(st, good, 0.0), InvalidArgument);
}

TEST_CASE("localization of a product state vanishes") {
    const auto grid = make_grid(6.0, 6, BoundaryCondition::dirichlet);
    const auto phi = gaussian(grid);
    const auto d = localization_diagnostic(product_state(phi), make_gp_state(phi, ho, 0.0), 1.0);
    CHECK(d.I_total == doctest::Approx(0.0).epsilon(1e-20));
    CHECK(d.I_far == doctest::Approx(0.0).epsilon(1e-20));
    CHECK_FALSE(d.s_estimate.has_value());
}

TEST_CASE("localization diagnostics on a hard-core pair") {
    const auto& c = hard_core_case();
    const auto& grid = c.state.grid;
    const double h = grid.spacing();
    double prev = std::numeric_limits<double>::infinity();
    std::vector<LocalizationDiagnostic> ladder;
    for (double r : {0.5 * h, h, 1.5 * h, 2.0 * h, 3.0 * h}) ladder.push_back(localization_diagnostic(c.state, c.gp, r));
    for (const auto& d : ladder) {
        CHECK(d.I_far >= 0.0);
        CHECK(d.I_far <= d.I_total);
        CHECK(d.I_far <= prev);
        prev = d.I_far;
        REQUIRE(d.s_estimate.has_value());
        CHECK(*d.s_estimate > 0.0);
        CHECK(*d.s_estimate <= 1.5);
    }
    CHECK(ladder.back().I_far < ladder.back().I_total);

    // Below one lattice spacing only the coincident site is removed.
    const std::size_t S = grid.size();
    std::vector<double> f(S);
    double coincident = 0.0;
    for (std::size_t X = 0; X < S; ++X) {
        for (std::size_t x = 0; x < S; ++x) f[x] = c.state.psi[x + S * X] / c.gp.phi[x];
        coincident += c.gp.phi[X] * c.gp.phi[X] * gradient_density(grid, f, true)[X];
    }
    coincident *= std::pow(grid.cell_volume(), 2);
    CHECK(ladder.front().I_far == doctest::Approx(ladder.front().I_total - coincident).epsilon(1e-10));
}

TEST_CASE("radial nodes") {
    const auto r = radial_nodes({0.1, 0.5, 1.0}, 0.03);
    CHECK(r.front() == 0.0);
    CHECK(r.back() == 1.0);
    for (double b : {0.1, 0.5}) CHECK(std::find(r.begin(), r.end(), b) != r.end());
    for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] - r[i - 1] <= 0.03 + 1e-15);
}

TEST_CASE("Dyson lemma: closed-form hard-core example") {
    const double R0 = 0.1, R = 0.5;
    const auto U = softened_potential(R0, R);
    RadialSamples s;
    s.r = radial_nodes({R0, R}, R0 / 100.0);
    for (double r : s.r) s.psi.push_back(r > R0 ? 1.0 - R0 / r : 0.0);
    const auto rep = dyson_check(InteractionPotential::hard_sphere(R0), U, s, R);
    CHECK(rep.lhs == doctest::Approx(4.0 * pi * R0 * (1.0 - R0 / R)).epsilon(5e-3));
    // rhs = R0·U·4π∫(1 - R0/r)² r² dr in closed form.
    auto prim = [&](double r) { return r * r * r / 3.0 - R0 * r * r + R0 * R0 * r; };
    const double rhs = R0 * U.height * 4.0 * pi * (prim(R) - prim(R0));
    CHECK(rep.rhs == doctest::Approx(rhs).epsilon(5e-3));
    CHECK(rep.satisfied);
}

TEST_CASE("Dyson lemma: zero potential") {
    const auto U = softened_potential(0.1, 0.3);
    RadialSamples s;
    s.r = radial_nodes({0.1, 0.3}, 0.001);
    for (double r : s.r) s.psi.push_back(std::cos(7.0 * r));
    const auto rep = dyson_check(InteractionPotential::zero(), U, s, 0.3);
    CHECK(rep.rhs == 0.0);
    CHECK(rep.satisfied);
}

TEST_CASE("Dyson lemma: seeded property sweep") {
    const double R0 = 0.1, R = 0.4, Rb = 0.5;
    const auto U = softened_potential(R0, R);
    const auto nodes = radial_nodes({R0, R, Rb}, R0 / 100.0);
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n(0.0, 1.0);
    int violations = 0;
    for (const auto& v : {InteractionPotential::hard_sphere(R0), InteractionPotential::soft_sphere(50.0, R0)}) {
        for (int t = 0; t < 100; ++t) {
            std::array<double, 5> c;
            for (auto& x : c) x = n(rng);
            RadialSamples s{nodes, {}};
            for (double r : nodes) {
                double g = 1.0 + 0.5 * c[0];
                for (int j = 1; j < 5; ++j) g += c[j] * std::cos(j * pi * r / Rb) / (j + 1);
                s.psi.push_back(v.has_hard_core() ? g * std::max(0.0, 1.0 - R0 / r) : g);
            }
            violations += !dyson_check(v, U, s, Rb).satisfied;
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("Dyson lemma preconditions") {
    RadialSamples s;
    s.r = radial_nodes({0.1, 0.5}, 0.001);
    s.psi.assign(s.r.size(), 1.0);
    const auto v = InteractionPotential::hard_sphere(0.1);
    auto U = softened_potential(0.1, 0.5);
    U.height *= 2.0;
    CHECK_THROWS_AS(dyson_check(v, U, s, 0.5), InvalidArgument);
    CHECK_THROWS_AS(dyson_check(v, softened_potential(0.1, 0.6), s, 0.5), InvalidArgument);
    CHECK_THROWS_AS(dyson_check(InteractionPotential::hard_sphere(0.2), softened_potential(0.1, 0.5), s, 0.5),
                    InvalidArgument);
    RadialSamples coarse;
    coarse.r = radial_nodes({0.1, 0.5}, 0.01);
    coarse.psi.assign(coarse.r.size(), 1.0);
    CHECK_THROWS_AS(dyson_check(v, softened_potential(0.1, 0.5), coarse, 0.5), InvalidArgument);
}

TEST_CASE("Poincare probe") {
    const PoincareDomain K{PoincareDomain::Kind::cube, 1.0};
    const auto grid = make_grid(1.0, 16, BoundaryCondition::neumann);
    const auto h = ScalarField::sample(grid, [](const auto&) { return 1.0; });

    SUBCASE("finite and stable under doubling") {
        const auto a = poincare_probe(K, h, 1000, 7);
        const auto b = poincare_probe(K, h, 2000, 7);
        CHECK(std::isfinite(a.C_estimate));
        CHECK(a.C_estimate > 0.0);
        CHECK(b.C_estimate >= a.C_estimate);
        CHECK(b.C_estimate < 1.2 * a.C_estimate);
        CHECK(b.stability_ratio == doctest::Approx(b.C_estimate / a.C_estimate));
        for (const auto& s : b.samples) {
            CHECK(s.ratio <= b.C_estimate);
            if (s.omega_kind == "full") CHECK(s.omega_fraction == 1.0);
            if (s.omega_kind == "empty") CHECK(s.omega_fraction == 0.0);
            CHECK(std::isfinite(s.ratio));
        }
    }
    SUBCASE("disconnected sets") {
        const auto mixed = poincare_probe(K, h, 200, 3);
        const auto disc = poincare_probe(K, h, 200, 3, OmegaFamily::disconnected);
        for (const auto& s : disc.samples) CHECK(s.components >= 2);
        CHECK(disc.C_estimate <= 2.0 * mixed.C_estimate);
    }
    SUBCASE("ball domain") {
        const PoincareDomain B{PoincareDomain::Kind::ball, 0.5};
        auto gp = minimize_gp(ho, 0.0, make_grid(8.0, 32, BoundaryCondition::dirichlet));
        const auto w = poincare_weight(gp.state.phi, grid, B);
        CHECK(integrate(w) == doctest::Approx(1.0).epsilon(1e-12));
        const auto r = poincare_probe(B, w, 100, 1);
        CHECK(std::isfinite(r.C_estimate));
    }
    SUBCASE("weight must be normalised") {
        const auto h2 = ScalarField::sample(grid, [](const auto&) { return 2.0; });
        CHECK_THROWS_AS(poincare_probe(K, h2, 10, 1), InvalidArgument);
        CHECK_THROWS_AS(poincare_probe(K, h, 0, 1), InvalidArgument);
    }
}

TEST_CASE("box lower bound reference") {
    const auto r = box_lower_bound_reference(2, 1.0, 0.01, 0.5);
    CHECK(r.leading_term == doctest::Approx(16.0 * pi * 0.01).epsilon(1e-14));
    CHECK(r.Y == doctest::Approx(2e-6).epsilon(1e-12));
    CHECK(r.eps_condition_met == (0.5 >= std::pow(2e-6, 1.0 / 17.0)));
    CHECK(box_lower_bound_reference(2, 1.0, 0.0, 0.1).leading_term == 0.0);
    CHECK_THROWS_AS(box_lower_bound_reference(0, 1.0, 0.01, 0.1), InvalidArgument);
}
