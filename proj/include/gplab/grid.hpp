#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace gplab {

enum class BoundaryCondition : std::uint8_t { dirichlet = 0, neumann = 1, periodic = 2 };

const char* to_string(BoundaryCondition bc);
BoundaryCondition boundary_from_string(const std::string_view name);

/// Cubic (or square, for dim = 2) box of side L centred at the origin, split
/// into M cells per axis. Samples live at cell centres
/// x_i = -L/2 + (i + 1/2) h, and site indices run x-fastest.
class UniformGrid {
public:
    UniformGrid(double side_length, int points_per_axis, BoundaryCondition bc, int dim = 3);

    double side_length() const { return side_length_; }
    int points_per_axis() const { return points_; }
    double spacing() const { return side_length_ / points_; }
    BoundaryCondition boundary() const { return bc_; }
    int dim() const { return dim_; }

    std::size_t size() const { return size_; }
    double cell_volume() const;
    double volume() const;

    /// Cell-centre coordinate along one axis.
    double coordinate(int i) const { return -0.5 * side_length_ + (i + 0.5) * spacing(); }
    /// Per-axis indices of a flat site index; unused axes are 0.
    std::array<int, 3> unflatten(std::size_t site) const;
    std::size_t flatten(const std::array<int, 3>& idx) const;
    std::array<double, 3> position(std::size_t site) const;
    /// Stride of the flat index along an axis.
    std::size_t stride(int axis) const;

    bool operator==(const UniformGrid& other) const = default;

private:
    double side_length_;
    int points_;
    BoundaryCondition bc_;
    int dim_;
    std::size_t size_;
};

UniformGrid make_grid(double side_length, int points_per_axis, BoundaryCondition bc, int dim = 3);

/// Real samples on a grid. Finite values only.
class ScalarField {
public:
    explicit ScalarField(UniformGrid grid);
    ScalarField(UniformGrid grid, std::vector<double> values);

    static ScalarField sample(const UniformGrid& grid,
                              const std::function<double(const std::array<double, 3>&)>& fn);

    const UniformGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    std::vector<double>& storage() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    bool all_finite() const;

private:
    UniformGrid grid_;
    std::vector<double> values_;
};

/// Σ f·h^d over sites.
double integrate(const ScalarField& f);
/// Σ f²·h^d over sites.
double integrate_square(const ScalarField& f);
/// Σ f·g·h^d over sites.
double inner_product(const ScalarField& f, const ScalarField& g);
double l2_distance(const ScalarField& f, const ScalarField& g);

/// Discrete Dirichlet energy Σ_faces (Δf/h)² h^d. Boundary faces follow the
/// grid's boundary condition: zero ghost for dirichlet, mirrored ghost for
/// neumann, wrap-around for periodic.
double kinetic_energy(const ScalarField& f);

/// Second-order 2d+1 point stencil for -Δ with the same ghost conventions as
/// kinetic_energy, so that <f, laplacian_apply(f)> == kinetic_energy(f).
ScalarField laplacian_apply(const ScalarField& f);

/// Span form used by the solvers: out = scale·(-Δ in).
void apply_neg_laplacian(const UniformGrid& grid, std::span<const double> in, std::span<double> out,
                         double scale = 1.0);

/// Per-site share of |∇f|²: half of every adjacent squared face difference.
/// Summing it with weight h^d reproduces kinetic_energy. With
/// `interior_faces_only` the box boundary contributes nothing regardless of bc.
std::vector<double> gradient_density(const ScalarField& f, bool interior_faces_only = false);
std::vector<double> gradient_density(const UniformGrid& grid, std::span<const double> f,
                                     bool interior_faces_only = false);

/// Conjugate momentum grid: k_n = (n - M/2)·2π/L, n = 0..M-1 per axis.
struct MomentumGrid {
    int dim;
    int points_per_axis;
    double spacing;  // Δk = 2π/L

    std::size_t size() const;
    double k(int n) const { return (n - points_per_axis / 2) * spacing; }
    std::array<double, 3> wavevector(std::size_t index) const;
    /// Δk^d / (2π)^d
    double measure() const;
};

MomentumGrid momentum_grid(const UniformGrid& grid);

struct ComplexField {
    MomentumGrid kgrid;
    std::vector<std::complex<double>> values;
};

/// f̂(k) = Σ_x f(x) e^{-ik·x} h^d on the centred momentum grid. Satisfies
/// Σ|f|² h^d = Σ|f̂|² Δk^d/(2π)^d.
ComplexField discrete_fourier(const ScalarField& f);
std::vector<std::complex<double>> discrete_fourier(const UniformGrid& grid,
                                                   std::span<const std::complex<double>> f);

}  // namespace gplab
