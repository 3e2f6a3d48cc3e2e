#pragma once

// Brute-force two-particle reference: assembles the full Hamiltonian matrix
// from per-axis grid indices and diagonalises it with LAPACK.

#include <lapacke.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gplab/grid.hpp"
#include "gplab/potential.hpp"

namespace oracle {

struct DenseResult {
    double energy;
    Eigen::MatrixXd gamma;  // γ(x, x'), grid-site indexed
};

inline double pair_distance(const gplab::UniformGrid& g, std::size_t s, std::size_t t) {
    const auto a = g.unflatten(s), b = g.unflatten(t);
    const int m = g.points_per_axis();
    double d2 = 0.0;
    for (int ax = 0; ax < 3; ++ax) {
        int d = a[ax] > b[ax] ? a[ax] - b[ax] : b[ax] - a[ax];
        if (g.boundary() == gplab::BoundaryCondition::periodic && m - d < d) d = m - d;
        d2 += double(d) * d;
    }
    return std::sqrt(d2) * g.spacing();
}

inline DenseResult two_particle(const gplab::UniformGrid& g, const gplab::TrapPotential& trap,
                                const gplab::InteractionPotential& v) {
    const std::size_t S = g.size();
    const int m = g.points_per_axis();
    const double h = g.spacing();
    const double k = 1.0 / (h * h);
    const auto vt = trap.sample(g);

    // Basis: allowed (s1, s2) pairs, particle 1 slow.
    std::vector<long> index(S * S, -1);
    std::vector<std::pair<std::size_t, std::size_t>> basis;
    for (std::size_t s1 = 0; s1 < S; ++s1)
        for (std::size_t s2 = 0; s2 < S; ++s2)
            if (!v.excludes(pair_distance(g, s1, s2))) {
                index[s1 * S + s2] = static_cast<long>(basis.size());
                basis.push_back({s1, s2});
            }
    const lapack_int n = static_cast<lapack_int>(basis.size());
    std::vector<double> H(static_cast<std::size_t>(n) * n, 0.0);
    auto at = [&](long i, long j) -> double& { return H[static_cast<std::size_t>(i) * n + j]; };

    for (long row = 0; row < n; ++row) {
        const auto [s1, s2] = basis[static_cast<std::size_t>(row)];
        at(row, row) += vt[s1] + vt[s2] + v(pair_distance(g, s1, s2));
        for (int p = 0; p < 2; ++p) {
            const std::size_t moving = p == 0 ? s1 : s2;
            const auto idx = g.unflatten(moving);
            for (int ax = 0; ax < 3; ++ax) {
                for (int dir : {-1, 1}) {
                    at(row, row) += k;
                    auto nb = idx;
                    nb[ax] += dir;
                    if (nb[ax] < 0 || nb[ax] >= m) {
                        if (g.boundary() == gplab::BoundaryCondition::neumann) {
                            at(row, row) -= k;
                            continue;
                        }
                        if (g.boundary() == gplab::BoundaryCondition::dirichlet) continue;
                        nb[ax] = (nb[ax] + m) % m;
                    }
                    const std::size_t t = g.flatten(nb);
                    const long col = p == 0 ? index[t * S + s2] : index[s1 * S + t];
                    if (col >= 0) at(row, col) -= k;
                }
            }
        }
    }

    const std::vector<double> H0 = H;
    std::vector<double> w(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n));
    std::vector<lapack_int> support(2);
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', n, H.data(), n, 0.0, 0.0, 1, 1, 0.0,
                                           &found, w.data(), z.data(), n, support.data());
    if (info != 0 || found != 1) throw std::runtime_error("dsyevr failed");

    // Some OpenBLAS kernel autodetections return wrong eigenvectors; refuse them.
    double res2 = 0.0, norm2 = 0.0;
    for (long i = 0; i < n; ++i) {
        double s = -w[0] * z[static_cast<std::size_t>(i)];
        for (long j = 0; j < n; ++j) s += H0[static_cast<std::size_t>(i) * n + j] * z[static_cast<std::size_t>(j)];
        res2 += s * s;
        norm2 += z[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
    }
    if (std::abs(norm2 - 1.0) > 1e-10 || std::sqrt(res2) > 1e-9 * std::max(1.0, std::abs(w[0])))
        throw std::runtime_error("LAPACK returned an inaccurate eigenpair; try OPENBLAS_CORETYPE=Haswell");

    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    double sum = 0.0;
    for (long i = 0; i < n; ++i) sum += z[static_cast<std::size_t>(i)];
    const double sign = sum < 0.0 ? -1.0 : 1.0;
    const double dv = g.cell_volume();
    for (long i = 0; i < n; ++i) {
        const auto [s1, s2] = basis[static_cast<std::size_t>(i)];
        psi(static_cast<Eigen::Index>(s1), static_cast<Eigen::Index>(s2)) = sign * z[static_cast<std::size_t>(i)] / dv;
    }
    // γ(x, x') = 2 Σ_y ψ(x, y) ψ(x', y) h³
    Eigen::MatrixXd gamma = 2.0 * dv * psi * psi.transpose();
    return {w[0], gamma};
}

}  // namespace oracle
