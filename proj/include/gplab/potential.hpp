#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gplab/grid.hpp"

namespace gplab {

/// External confinement. The harmonic form is V(x) = Σ_a (ω_a x_a)², so
/// ω = (1,1,1) gives |x|².
class TrapPotential {
public:
    static TrapPotential harmonic(std::array<double, 3> omega = {1.0, 1.0, 1.0});
    static TrapPotential tabulated(ScalarField samples);
    static TrapPotential none();

    bool is_tabulated() const { return table_.has_value(); }
    const std::array<double, 3>& omega() const { return omega_; }

    /// Only valid for the analytic forms.
    double operator()(const std::array<double, 3>& x) const;
    /// Samples on a grid; tabulated traps must match the grid exactly.
    ScalarField sample(const UniformGrid& grid) const;

    /// Confinement proxy: the minimum over the outermost shell of sites
    /// exceeds the interior minimum.
    bool confines_on(const UniformGrid& grid) const;

private:
    std::array<double, 3> omega_{0.0, 0.0, 0.0};
    std::optional<ScalarField> table_;
};

/// Nonnegative radial pair potential of finite range, optionally with a hard
/// core. Inside the core the wavefunction is required to vanish.
class InteractionPotential {
public:
    enum class Kind { zero, hard_sphere, soft_sphere, tabulated };

    static InteractionPotential zero();
    static InteractionPotential hard_sphere(double core_radius);
    static InteractionPotential soft_sphere(double height, double radius);
    /// Piecewise-linear profile through (r_i, v_i); zero beyond the last node.
    /// A positive `core_radius` adds a hard core.
    static InteractionPotential tabulated(std::vector<double> r, std::vector<double> v,
                                          double core_radius = 0.0);

    Kind kind() const { return kind_; }
    std::string kind_name() const;
    double range() const { return range_; }
    double core_radius() const { return core_; }
    bool has_hard_core() const { return core_ > 0.0; }
    double height() const { return height_; }
    const std::vector<double>& table_r() const { return table_r_; }
    const std::vector<double>& table_v() const { return table_v_; }

    /// Finite part of the profile; 0 inside the hard core (excluded region).
    double operator()(double r) const;
    bool excludes(double r) const { return r < core_; }
    bool is_zero() const { return kind_ == Kind::zero; }

    /// v(r) ↦ v(r/s)/s². Scattering length scales by s.
    InteractionPotential scaled(double s) const;

private:
    Kind kind_ = Kind::zero;
    double core_ = 0.0;
    double height_ = 0.0;
    double range_ = 0.0;
    std::vector<double> table_r_, table_v_;
};

struct ShootingOptions {
    /// Steps per R₀; the step is never larger than R₀/2000.
    int steps_per_range = 4000;
};

/// s-wave scattering length from the zero-energy equation -2u'' + v u = 0,
/// u(core) = 0, read off the exterior line u ∝ (r - a) on [R₀, 2R₀].
double scattering_length(const InteractionPotential& v, const ShootingOptions& opts = {});

/// v(x) = v₁(x/a)/a².
InteractionPotential scale_interaction(const InteractionPotential& v1, double a);

/// Shell potential U(r) = 3/(R³ - R₀³) on R₀ < r < R, normalised so that
/// ∫ U(r) r² dr = 1.
struct SoftPotentialU {
    double inner;
    double outer;
    double height;

    double operator()(double r) const { return (r > inner && r < outer) ? height : 0.0; }
    /// Closed form of ∫ U r² dr.
    double radial_moment() const { return height * (outer * outer * outer - inner * inner * inner) / 3.0; }
};

SoftPotentialU softened_potential(double inner, double outer);

}  // namespace gplab
