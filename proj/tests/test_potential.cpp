#include <doctest.h>

#include <cmath>
#include <limits>

#include "gplab/error.hpp"
#include "gplab/potential.hpp"

using namespace gplab;

namespace {

// Zero-energy solution of -2u'' + v₀u = 0 inside a square well of radius R:
// u = sinh(κr), κ = √(v₀/2); matching u'/u to the exterior line r - a gives
// a = R - tanh(κR)/κ.
double soft_sphere_closed_form(double v0, double r0) {
    const double kappa = std::sqrt(0.5 * v0);
    return r0 - std::tanh(kappa * r0) / kappa;
}

}  // namespace

TEST_CASE("scattering length oracles") {
    CHECK(scattering_length(InteractionPotential::hard_sphere(1.0)) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(scattering_length(InteractionPotential::zero()) == 0.0);
    CHECK(scattering_length(InteractionPotential::soft_sphere(0.0, 1.0)) == 0.0);
    for (double v0 : {1.0, 10.0, 50.0, 200.0}) {
        const double a = scattering_length(InteractionPotential::soft_sphere(v0, 1.0));
        CHECK(a == doctest::Approx(soft_sphere_closed_form(v0, 1.0)).epsilon(5e-3));
    }
}

TEST_CASE("tabulated profile reproduces the soft sphere it samples") {
    // Step approximated by a steep linear ramp at the edge.
    const double v0 = 50.0;
    const auto tab = InteractionPotential::tabulated({0.0, 1.0 - 1e-6, 1.0}, {v0, v0, 0.0});
    CHECK(scattering_length(tab) == doctest::Approx(soft_sphere_closed_form(v0, 1.0)).epsilon(5e-3));
    CHECK(tab(0.5) == v0);
    CHECK(tab(2.0) == 0.0);

    const auto cored = InteractionPotential::tabulated({0.0, 1.0}, {0.0, 0.0}, 0.7);
    CHECK(cored.has_hard_core());
    CHECK(scattering_length(cored) == doctest::Approx(0.7).epsilon(1e-3));
}

TEST_CASE("invalid interaction profiles") {
    CHECK_THROWS_AS(InteractionPotential::soft_sphere(-1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(InteractionPotential::soft_sphere(std::numeric_limits<double>::infinity(), 1.0),
                    InvalidArgument);
    CHECK_THROWS_AS(InteractionPotential::tabulated({0.0, 1.0}, {1.0, -2.0}), InvalidArgument);
    CHECK_THROWS_AS(InteractionPotential::tabulated({0.0, 1.0}, {1.0, std::nan("")}), InvalidArgument);
    CHECK_THROWS_AS(InteractionPotential::tabulated({1.0, 0.5}, {1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(InteractionPotential::hard_sphere(0.0), InvalidArgument);
}

TEST_CASE("scale_interaction") {
    const auto v1 = InteractionPotential::soft_sphere(50.0, 1.0);
    const auto same = scale_interaction(v1, 1.0);
    CHECK(same.height() == v1.height());
    CHECK(same.range() == v1.range());

    const auto hs = scale_interaction(InteractionPotential::hard_sphere(1.0), 0.01);
    CHECK(hs.core_radius() == doctest::Approx(0.01));
    CHECK(scattering_length(hs) == doctest::Approx(0.01).epsilon(1e-3));

    CHECK_THROWS_AS(scale_interaction(v1, -1.0), InvalidArgument);
    CHECK_THROWS_AS(scale_interaction(v1, 0.0), InvalidArgument);
}

TEST_CASE("scattering length is scale covariant") {
    for (const auto& v1 : {InteractionPotential::soft_sphere(10.0, 1.0), InteractionPotential::soft_sphere(200.0, 1.5),
                           InteractionPotential::hard_sphere(0.8)}) {
        const double a1 = scattering_length(v1);
        for (double s : {1e-3, 3e-3, 1e-2, 0.1, 0.5, 1.0}) {
            const auto v = scale_interaction(v1, s);
            CHECK(v.range() == doctest::Approx(s * v1.range()));
            CHECK(scattering_length(v) == doctest::Approx(s * a1).epsilon(5e-3));
        }
    }
}

TEST_CASE("soft-sphere scattering length is monotone in height and bounded by the range") {
    double prev = 0.0;
    for (double v0 = 0.25; v0 < 1e5; v0 *= 2.0) {
        const double a = scattering_length(InteractionPotential::soft_sphere(v0, 1.0));
        CHECK(a >= prev);
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
        prev = a;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("softened potential U") {
    const auto u = softened_potential(0.0, 1.0);
    CHECK(u.height == 3.0);
    CHECK(u.radial_moment() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(softened_potential(1.0, 2.0).height == doctest::Approx(3.0 / 7.0));
    CHECK_THROWS_AS(softened_potential(1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(softened_potential(2.0, 1.0), InvalidArgument);

    // Midpoint quadrature of ∫ U r² dr.
    const auto w = softened_potential(0.3, 1.7);
    const int n = 200000;
    const double dr = 2.0 / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = (i + 0.5) * dr;
        s += w(r) * r * r * dr;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(w(0.2) == 0.0);
    CHECK(w(1.8) == 0.0);
}

TEST_CASE("trap potential") {
    const auto g = make_grid(4.0, 8, BoundaryCondition::dirichlet);
    const auto t = TrapPotential::harmonic();
    CHECK(t({1.0, 2.0, 0.5}) == doctest::Approx(5.25));
    CHECK(t.confines_on(g));
    CHECK_FALSE(TrapPotential::none().confines_on(g));
    const auto tab = TrapPotential::tabulated(t.sample(g));
    CHECK(tab.sample(g)[17] == t.sample(g)[17]);
    CHECK_THROWS_AS(tab.sample(make_grid(4.0, 6, BoundaryCondition::dirichlet)), InvalidArgument);
}
