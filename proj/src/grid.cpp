#include "gplab/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "gplab/error.hpp"
#include "gplab/summation.hpp"

namespace gplab {

const char* to_string(BoundaryCondition bc) {
    switch (bc) {
        case BoundaryCondition::dirichlet: return "dirichlet";
        case BoundaryCondition::neumann: return "neumann";
        case BoundaryCondition::periodic: return "periodic";
    }
    return "unknown";
}

BoundaryCondition boundary_from_string(std::string_view name) {
    if (name == "dirichlet") return BoundaryCondition::dirichlet;
    if (name == "neumann") return BoundaryCondition::neumann;
    if (name == "periodic") return BoundaryCondition::periodic;
    throw InvalidArgument("unknown boundary condition '" + std::string(name) + "'");
}

UniformGrid::UniformGrid(double side_length, int points_per_axis, BoundaryCondition bc, int dim)
    : side_length_(side_length), points_(points_per_axis), bc_(bc), dim_(dim), size_(1) {
    if (!(side_length > 0.0) || !std::isfinite(side_length))
        throw InvalidArgument("grid side length must be positive and finite");
    if (points_per_axis < 2) throw InvalidArgument("grid needs at least 2 points per axis");
    if (dim != 2 && dim != 3) throw InvalidArgument("grid dimension must be 2 or 3");
    for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(points_per_axis);
}

UniformGrid make_grid(double side_length, int points_per_axis, BoundaryCondition bc, int dim) {
    return UniformGrid(side_length, points_per_axis, bc, dim);
}

double UniformGrid::cell_volume() const { return std::pow(spacing(), dim_); }
double UniformGrid::volume() const { return std::pow(side_length_, dim_); }

std::size_t UniformGrid::stride(int axis) const {
    std::size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= static_cast<std::size_t>(points_);
    return s;
}

std::array<int, 3> UniformGrid::unflatten(std::size_t site) const {
    std::array<int, 3> idx{0, 0, 0};
    const auto m = static_cast<std::size_t>(points_);
    for (int a = 0; a < dim_; ++a) {
        idx[a] = static_cast<int>(site % m);
        site /= m;
    }
    return idx;
}

std::size_t UniformGrid::flatten(const std::array<int, 3>& idx) const {
    std::size_t site = 0;
    for (int a = dim_ - 1; a >= 0; --a) site = site * static_cast<std::size_t>(points_) + idx[a];
    return site;
}

std::array<double, 3> UniformGrid::position(std::size_t site) const {
    const auto idx = unflatten(site);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim_; ++a) x[a] = coordinate(idx[a]);
    return x;
}

ScalarField::ScalarField(UniformGrid grid) : grid_(grid), values_(grid.size(), 0.0) {}

ScalarField::ScalarField(UniformGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
        throw InvalidArgument("field length " + std::to_string(values_.size()) +
                              " does not match grid size " + std::to_string(grid_.size()));
}

ScalarField ScalarField::sample(const UniformGrid& grid,
                                const std::function<double(const std::array<double, 3>&)>& fn) {
    ScalarField f(grid);
    for (std::size_t s = 0; s < grid.size(); ++s) f[s] = fn(grid.position(s));
    return f;
}

bool ScalarField::all_finite() const {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

double integrate(const ScalarField& f) {
    return pairwise_sum(f.values()) * f.grid().cell_volume();
}

double integrate_square(const ScalarField& f) {
    return pairwise_dot(f.values(), f.values()) * f.grid().cell_volume();
}

double inner_product(const ScalarField& f, const ScalarField& g) {
    if (!(f.grid() == g.grid())) throw InvalidArgument("inner_product: grid mismatch");
    return pairwise_dot(f.values(), g.values()) * f.grid().cell_volume();
}

double l2_distance(const ScalarField& f, const ScalarField& g) {
    if (!(f.grid() == g.grid())) throw InvalidArgument("l2_distance: grid mismatch");
    const auto a = f.values();
    const auto b = g.values();
    const double s = pairwise_reduce(a.size(), [&](std::size_t i) {
        const double d = a[i] - b[i];
        return d * d;
    });
    return std::sqrt(s * f.grid().cell_volume());
}

namespace {

// Visits every site along one axis as (flat index, position along axis).
template <class F>
void for_each_along(const UniformGrid& grid, int axis, F&& fn) {
    const std::size_t m = static_cast<std::size_t>(grid.points_per_axis());
    const std::size_t s = grid.stride(axis);
    const std::size_t blocks = grid.size() / (s * m);
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t base = b * s * m;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t t = 0; t < s; ++t) fn(base + i * s + t, i);
    }
}

}  // namespace

void apply_neg_laplacian(const UniformGrid& grid, std::span<const double> in, std::span<double> out,
                         double scale) {
    const std::size_t m = static_cast<std::size_t>(grid.points_per_axis());
    const double c = scale / (grid.spacing() * grid.spacing());
    const auto bc = grid.boundary();
    std::fill(out.begin(), out.end(), 0.0);
    for (int axis = 0; axis < grid.dim(); ++axis) {
        const std::size_t s = grid.stride(axis);
        for_each_along(grid, axis, [&](std::size_t idx, std::size_t i) {
            const double f = in[idx];
            double left, right;
            if (i > 0) {
                left = in[idx - s];
            } else {
                left = bc == BoundaryCondition::dirichlet ? 0.0
                       : bc == BoundaryCondition::neumann ? f
                                                          : in[idx + (m - 1) * s];
            }
            if (i + 1 < m) {
                right = in[idx + s];
            } else {
                right = bc == BoundaryCondition::dirichlet ? 0.0
                        : bc == BoundaryCondition::neumann ? f
                                                           : in[idx - (m - 1) * s];
            }
            out[idx] += c * ((f - left) + (f - right));
        });
    }
}

ScalarField laplacian_apply(const ScalarField& f) {
    ScalarField out(f.grid());
    apply_neg_laplacian(f.grid(), f.values(), out.values());
    return out;
}

std::vector<double> gradient_density(const UniformGrid& grid, std::span<const double> f,
                                     bool interior_faces_only) {
    const std::size_t m = static_cast<std::size_t>(grid.points_per_axis());
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    const auto bc = grid.boundary();
    std::vector<double> density(grid.size(), 0.0);
    for (int axis = 0; axis < grid.dim(); ++axis) {
        const std::size_t s = grid.stride(axis);
        for_each_along(grid, axis, [&](std::size_t idx, std::size_t i) {
            if (i + 1 < m) {
                const double d = f[idx + s] - f[idx];
                const double half = 0.5 * d * d * inv_h2;
                density[idx] += half;
                density[idx + s] += half;
                return;
            }
            if (interior_faces_only) return;
            if (bc == BoundaryCondition::periodic) {
                const std::size_t first = idx - (m - 1) * s;
                const double d = f[first] - f[idx];
                const double half = 0.5 * d * d * inv_h2;
                density[idx] += half;
                density[first] += half;
            } else if (bc == BoundaryCondition::dirichlet) {
                // Faces against the zero ghost belong wholly to the boundary site.
                const std::size_t first = idx - (m - 1) * s;
                density[idx] += f[idx] * f[idx] * inv_h2;
                density[first] += f[first] * f[first] * inv_h2;
            }
        });
    }
    return density;
}

std::vector<double> gradient_density(const ScalarField& f, bool interior_faces_only) {
    return gradient_density(f.grid(), f.values(), interior_faces_only);
}

double kinetic_energy(const ScalarField& f) {
    const auto density = gradient_density(f);
    return pairwise_sum(density) * f.grid().cell_volume();
}

std::size_t MomentumGrid::size() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(points_per_axis);
    return n;
}

std::array<double, 3> MomentumGrid::wavevector(std::size_t index) const {
    std::array<double, 3> k{0.0, 0.0, 0.0};
    const auto m = static_cast<std::size_t>(points_per_axis);
    for (int a = 0; a < dim; ++a) {
        k[a] = this->k(static_cast<int>(index % m));
        index /= m;
    }
    return k;
}

double MomentumGrid::measure() const {
    return std::pow(spacing / (2.0 * std::numbers::pi), dim);
}

MomentumGrid momentum_grid(const UniformGrid& grid) {
    return {grid.dim(), grid.points_per_axis(), 2.0 * std::numbers::pi / grid.side_length()};
}

std::vector<std::complex<double>> discrete_fourier(const UniformGrid& grid,
                                                   std::span<const std::complex<double>> f) {
    if (f.size() != grid.size()) throw InvalidArgument("discrete_fourier: length mismatch");
    const int m = grid.points_per_axis();
    const int d = grid.dim();
    std::vector<std::complex<double>> in(f.begin(), f.end());
    std::vector<std::complex<double>> raw(grid.size());
    std::array<int, 3> dims{m, m, m};
    // FFTW planning is not thread-safe; execution is.
    static std::mutex planner;
    fftw_plan plan;
    {
        std::lock_guard lock(planner);
        plan = fftw_plan_dft(d, dims.data(), reinterpret_cast<fftw_complex*>(in.data()),
                             reinterpret_cast<fftw_complex*>(raw.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner);
        fftw_destroy_plan(plan);
    }

    // Reorder to the centred grid and restore the cell-centre phase
    // e^{-ik(-L/2 + h/2)} dropped by the index-based transform.
    const MomentumGrid kg = momentum_grid(grid);
    const double shift = 0.5 * grid.side_length() - 0.5 * grid.spacing();
    std::vector<std::complex<double>> phase(static_cast<std::size_t>(m));
    for (int n = 0; n < m; ++n) phase[n] = std::polar(1.0, kg.k(n) * shift);
    const double weight = grid.cell_volume();

    std::vector<std::complex<double>> out(grid.size());
    const auto um = static_cast<std::size_t>(m);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::size_t rest = k;
        std::size_t src = 0, src_stride = 1;
        std::complex<double> ph = weight;
        for (int a = 0; a < d; ++a) {
            const int n = static_cast<int>(rest % um);
            rest /= um;
            const int freq = ((n - m / 2) % m + m) % m;
            src += static_cast<std::size_t>(freq) * src_stride;
            src_stride *= um;
            ph *= phase[n];
        }
        out[k] = raw[src] * ph;
    }
    return out;
}

ComplexField discrete_fourier(const ScalarField& f) {
    std::vector<std::complex<double>> c(f.values().begin(), f.values().end());
    return {momentum_grid(f.grid()), discrete_fourier(f.grid(), c)};
}

}  // namespace gplab
