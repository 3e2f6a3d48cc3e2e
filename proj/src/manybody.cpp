#include "gplab/manybody.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "gplab/error.hpp"
#include "gplab/lanczos.hpp"
#include "gplab/summation.hpp"

namespace gplab {

namespace {

// Hamiltonian Σ_i(κ(-Δ_i)) + diag on S^N configurations, particle 0 fastest.
struct Problem {
    int N;
    UniformGrid grid;
    std::size_t S;
    std::size_t D;
    double kinetic;  // κ
    std::vector<double> diag;
    std::vector<std::uint8_t> allowed;  // empty when nothing is excluded

    void apply(std::span<const double> x, std::span<double> y) const;
};

std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

void Problem::apply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t c = 0; c < D; ++c) y[c] = diag[c] * x[c];
    const int m = grid.points_per_axis();
    const double h = grid.spacing();
    const double k = kinetic / (h * h);
    const auto bc = grid.boundary();
    for (int i = 0; i < N; ++i) {
        for (int a = 0; a < 3; ++a) {
            const std::size_t st = ipow(S, i) * grid.stride(a);
            const std::size_t block = st * static_cast<std::size_t>(m);
            for (std::size_t base = 0; base < D; base += block) {
                for (int j = 0; j < m; ++j) {
                    const std::size_t row = base + static_cast<std::size_t>(j) * st;
                    const double* xc = x.data() + row;
                    const double* xl = nullptr;
                    const double* xr = nullptr;
                    if (j > 0)
                        xl = xc - st;
                    else if (bc == BoundaryCondition::periodic)
                        xl = xc + (m - 1) * st;
                    if (j < m - 1)
                        xr = xc + st;
                    else if (bc == BoundaryCondition::periodic)
                        xr = xc - (m - 1) * st;
                    const bool mirror = bc == BoundaryCondition::neumann;
                    double* yc = y.data() + row;
                    for (std::size_t t = 0; t < st; ++t) {
                        const double c = xc[t];
                        const double l = xl ? xl[t] : (mirror ? c : 0.0);
                        const double r = xr ? xr[t] : (mirror ? c : 0.0);
                        yc[t] += k * (2.0 * c - l - r);
                    }
                }
            }
        }
    }
    if (!allowed.empty())
        for (std::size_t c = 0; c < D; ++c)
            if (!allowed[c]) y[c] = 0.0;
}

// Distance between two sites, minimum image on periodic grids.
double site_distance(const UniformGrid& grid, std::size_t s, std::size_t t) {
    const auto a = grid.unflatten(s);
    const auto b = grid.unflatten(t);
    const int m = grid.points_per_axis();
    double d2 = 0.0;
    for (int ax = 0; ax < 3; ++ax) {
        int d = std::abs(a[ax] - b[ax]);
        if (grid.boundary() == BoundaryCondition::periodic) d = std::min(d, m - d);
        d2 += static_cast<double>(d) * d;
    }
    return std::sqrt(d2) * grid.spacing();
}

std::vector<double> distance_table(const UniformGrid& grid) {
    const std::size_t S = grid.size();
    std::vector<double> d(S * S);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t t = 0; t < S; ++t) d[s * S + t] = site_distance(grid, s, t);
    return d;
}

void decode(std::size_t c, std::size_t S, int N, std::size_t* s) {
    for (int i = 0; i < N; ++i) {
        s[i] = c % S;
        c /= S;
    }
}

int krylov_for(std::size_t D, const SolverOptions& opts) {
    const std::size_t budget = state_budget_bytes(opts);
    const std::size_t per_vector = D * sizeof(double);
    // diag, mask, current vector, work vector and residual scratch.
    const std::size_t fits = budget / per_vector;
    const int overhead = 5;
    if (fits < static_cast<std::size_t>(overhead + 3))
        throw ResourceError("state vectors of " + std::to_string(per_vector >> 20) + " MiB exceed the " +
                            std::to_string(budget >> 20) + " MiB budget");
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(opts.max_krylov), fits - overhead);
    return static_cast<int>(std::max<std::size_t>(k, 3));
}

LanczosResult run(const Problem& p, std::vector<double> start, const SolverOptions& opts, int krylov) {
    LanczosOptions lo;
    lo.krylov_dim = krylov;
    lo.tol = opts.tol;
    lo.max_matvecs = opts.max_iters;
    return lanczos_lowest([&p](std::span<const double> x, std::span<double> y) { p.apply(x, y); },
                          std::move(start), lo);
}

// Product of one-body ground states plus seeded noise, masked.
std::vector<double> product_start(const Problem& p, const std::vector<double>& one_body_diag,
                                  const SolverOptions& opts) {
    Problem single{1, p.grid, p.S, p.S, p.kinetic, one_body_diag, {}};
    LanczosOptions lo;
    lo.krylov_dim = static_cast<int>(std::min<std::size_t>(60, p.S));
    lo.tol = 1e-13;
    lo.max_matvecs = 200000;
    const auto one = lanczos_lowest([&single](std::span<const double> x, std::span<double> y) { single.apply(x, y); },
                                    std::vector<double>(p.S, 1.0), lo);
    std::vector<double> phi = one.vector;
    double sum = 0.0;
    for (double v : phi) sum += v;
    if (sum < 0.0)
        for (auto& v : phi) v = -v;

    std::vector<double> start(p.D);
    std::vector<std::size_t> s(static_cast<std::size_t>(p.N));
    double peak = 0.0;
    for (std::size_t c = 0; c < p.D; ++c) {
        decode(c, p.S, p.N, s.data());
        double v = 1.0;
        for (int i = 0; i < p.N; ++i) v *= phi[s[i]];
        start[c] = v;
        peak = std::max(peak, std::abs(v));
    }
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> noise(0.0, 1e-3 * peak);
    for (std::size_t c = 0; c < p.D; ++c) {
        start[c] += noise(rng);
        if (!p.allowed.empty() && !p.allowed[c]) start[c] = 0.0;
    }
    return start;
}

double symmetry_error(const std::vector<double>& psi, std::size_t S, int N) {
    double peak = 0.0;
    for (double v : psi) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) return 0.0;
    double worst = 0.0;
    std::vector<std::size_t> s(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        for (int j = i + 1; j < N; ++j) {
            for (std::size_t c = 0; c < psi.size(); ++c) {
                decode(c, S, N, s.data());
                std::swap(s[i], s[j]);
                std::size_t c2 = 0;
                for (int q = N - 1; q >= 0; --q) c2 = c2 * S + s[q];
                worst = std::max(worst, std::abs(psi[c] - psi[c2]));
            }
        }
    }
    return worst / peak;
}

}  // namespace

std::size_t state_budget_bytes(const SolverOptions& opts) {
    std::size_t mb = opts.budget_mb;
    if (mb == 0) {
        mb = 2048;
        if (const char* env = std::getenv("GPLAB_BUDGET_MB")) {
            char* end = nullptr;
            const unsigned long long v = std::strtoull(env, &end, 10);
            if (end == env || *end != '\0' || v == 0)
                throw ConfigError(std::string("GPLAB_BUDGET_MB must be a positive integer, got '") + env + "'");
            mb = static_cast<std::size_t>(v);
        }
    }
    return mb << 20;
}

ManyBodyState ground_state(int N, const UniformGrid& grid, const TrapPotential& trap, const InteractionPotential& v,
                           const SolverOptions& opts) {
    if (N < 1 || N > 3) throw InvalidArgument("ground_state: N must be 1, 2 or 3");
    if (grid.dim() != 3) throw InvalidArgument("ground_state: needs a 3D grid");
    if (v.core_radius() >= grid.side_length())
        throw InvalidArgument("ground_state: hard-core radius must be below the box side");
    if (!(opts.tol > 0.0) || opts.max_iters < 1) throw InvalidArgument("ground_state: bad solver options");

    const std::size_t S = grid.size();
    const std::size_t D = ipow(S, N);
    const int krylov = krylov_for(D, opts);

    const ScalarField vt = trap.sample(grid);
    std::vector<double> one_body(vt.values().begin(), vt.values().end());

    Problem p{N, grid, S, D, 1.0, std::vector<double>(D, 0.0), {}};
    // Pair tables hold S² ≤ D entries; only needed when pairs interact.
    const bool pairs = N > 1 && !v.is_zero();
    std::vector<double> pair(pairs ? S * S : 0, 0.0);
    std::vector<std::uint8_t> pair_ok(pairs ? S * S : 0, 1);
    bool any_excluded = false;
    if (pairs) {
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t t = 0; t < S; ++t) {
                const double r = site_distance(grid, s, t);
                if (v.excludes(r)) {
                    pair_ok[s * S + t] = 0;
                    any_excluded = true;
                } else {
                    pair[s * S + t] = v(r);
                }
            }
    }
    if (any_excluded) p.allowed.assign(D, 1);
    std::vector<std::size_t> s(static_cast<std::size_t>(N));
    std::size_t n_allowed = 0;
    for (std::size_t c = 0; c < D; ++c) {
        decode(c, S, N, s.data());
        double d = 0.0;
        bool ok = true;
        for (int i = 0; i < N; ++i) {
            d += one_body[s[i]];
            if (!pairs) continue;
            for (int j = i + 1; j < N; ++j) {
                d += pair[s[i] * S + s[j]];
                ok = ok && pair_ok[s[i] * S + s[j]];
            }
        }
        if (!p.allowed.empty()) p.allowed[c] = ok;
        p.diag[c] = ok ? d : 0.0;
        n_allowed += ok;
    }
    if (n_allowed == 0) throw InvalidArgument("ground_state: hard core excludes every configuration");

    auto start = product_start(p, one_body, opts);
    if (pairwise_dot(start, start) == 0.0) {
        std::fill(start.begin(), start.end(), 1.0);
        if (!p.allowed.empty())
            for (std::size_t c = 0; c < D; ++c) start[c] = p.allowed[c];
    }
    auto res = run(p, std::move(start), opts, krylov);

    ManyBodyState st{N,           grid,        std::move(res.vector), res.eigenvalue, res.residual,
                     res.converged, res.matvecs, krylov,                0.0};
    const double sum = pairwise_sum(st.psi);
    const double scale = (sum < 0.0 ? -1.0 : 1.0) * std::pow(grid.cell_volume(), -0.5 * N);
    for (auto& x : st.psi) x *= scale;
    st.symmetry_error = symmetry_error(st.psi, S, N);
    return st;
}

double OneParticleDensityMatrix::trace() const {
    std::vector<double> d(static_cast<std::size_t>(kernel.rows()));
    for (Eigen::Index i = 0; i < kernel.rows(); ++i) d[static_cast<std::size_t>(i)] = kernel(i, i);
    return pairwise_sum(d) * grid.cell_volume();
}

OneParticleDensityMatrix reduced_density_matrix(const ManyBodyState& state) {
    const std::size_t S = state.grid.size();
    if (state.N < 1 || state.psi.size() != ipow(S, state.N))
        throw InvalidArgument("reduced_density_matrix: state size does not match N and grid");
    const auto cols = static_cast<Eigen::Index>(state.psi.size() / S);
    Eigen::Map<const Eigen::MatrixXd> A(state.psi.data(), static_cast<Eigen::Index>(S), cols);
    OneParticleDensityMatrix g{state.grid, state.N, {}};
    g.kernel.noalias() = A * A.transpose();
    g.kernel = 0.5 * (g.kernel + g.kernel.transpose()).eval();
    g.kernel *= state.N * std::pow(state.grid.cell_volume(), state.N - 1);
    return g;
}

Eigen::VectorXd density_matrix_spectrum(const OneParticleDensityMatrix& gamma) {
    const Eigen::MatrixXd op = gamma.kernel * gamma.grid.cell_volume();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double MomentumDensity::integral() const { return pairwise_sum(values) * kgrid.measure(); }

MomentumDensity momentum_density(const OneParticleDensityMatrix& gamma) {
    const auto& grid = gamma.grid;
    const std::size_t S = grid.size();
    // R(x, k) = Σ_x' γ(x, x') e^{-ikx'} h³
    std::vector<std::vector<std::complex<double>>> R(S);
    std::vector<std::complex<double>> row(S);
    for (std::size_t x = 0; x < S; ++x) {
        for (std::size_t t = 0; t < S; ++t)
            row[t] = gamma.kernel(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(t));
        R[x] = discrete_fourier(grid, row);
    }
    // ρ̂(k) = Σ_x e^{ikx} h³ R(x, k) = conj(DFT_x[conj R(·, k)](k))
    MomentumDensity out{momentum_grid(grid), std::vector<double>(S)};
    std::vector<std::complex<double>> col(S);
    for (std::size_t k = 0; k < S; ++k) {
        for (std::size_t x = 0; x < S; ++x) col[x] = std::conj(R[x][k]);
        out.values[k] = discrete_fourier(grid, col)[k].real();
    }
    return out;
}

CondensateReport condensate_report(const OneParticleDensityMatrix& gamma, const GPState& gp) {
    if (!(gamma.grid == gp.phi.grid())) throw InvalidArgument("condensate_report: grids differ");
    const auto n = static_cast<Eigen::Index>(gamma.grid.size());
    const double dv = gamma.grid.cell_volume();
    const double N = gamma.N;
    const Eigen::MatrixXd G = gamma.kernel * dv;
    Eigen::VectorXd u(n);
    for (Eigen::Index i = 0; i < n; ++i) u(i) = gp.phi[static_cast<std::size_t>(i)] * std::sqrt(dv);

    CondensateReport rep;
    // Power iteration on G from the GP orbital.
    Eigen::VectorXd x = u.normalized();
    double lambda = 0.0;
    for (int it = 0; it < 100000; ++it) {
        const Eigen::VectorXd y = G * x;
        const double next = x.dot(y);
        const double ny = y.norm();
        if (ny == 0.0) break;
        x = y / ny;
        const bool done = it > 0 && std::abs(next - lambda) <= 1e-10 * std::abs(next);
        lambda = next;
        if (done) break;
    }
    rep.lambda_max_over_N = lambda / N;
    rep.overlap = u.dot(G * u) / N;

    const Eigen::MatrixXd diff = G / N - u * u.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff, Eigen::EigenvaluesOnly);
    std::vector<double> absval(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) absval[static_cast<std::size_t>(i)] = std::abs(es.eigenvalues()(i));
    rep.trace_distance = pairwise_sum(absval);

    const auto rho = momentum_density(gamma);
    const auto phat = discrete_fourier(gp.phi);
    std::vector<double> d(rho.values.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = std::abs(rho.values[k] / N - std::norm(phat.values[k]));
    rep.momentum_l1_distance = pairwise_sum(d) * rho.kgrid.measure();
    return rep;
}

double soft_box_energy(int n, double L, double eps, double a, const SoftPotentialU& U, int M,
                       const SolverOptions& opts) {
    if (n < 1 || n > 3) throw InvalidArgument("soft_box_energy: n must be 1, 2 or 3");
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw InvalidArgument("soft_box_energy: eps must be >= 0");
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("soft_box_energy: a must be >= 0");
    if (!(U.inner >= 0.0) || !(U.outer > U.inner) || !(U.height >= 0.0))
        throw InvalidArgument("soft_box_energy: invalid U");
    const UniformGrid grid = make_grid(L, M, BoundaryCondition::neumann);
    const std::size_t S = grid.size();
    const std::size_t D = ipow(S, n);
    const int krylov = krylov_for(D, opts);

    Problem p{n, grid, S, D, 0.5 * eps, std::vector<double>(D, 0.0), {}};
    if (n > 1 && a > 0.0) {
        const auto dist = distance_table(grid);
        std::vector<std::size_t> s(static_cast<std::size_t>(n));
        for (std::size_t c = 0; c < D; ++c) {
            decode(c, S, n, s.data());
            double d = 0.0;
            for (int i = 0; i < n; ++i) {
                double t = std::numeric_limits<double>::infinity();
                for (int j = 0; j < n; ++j)
                    if (j != i) t = std::min(t, dist[s[i] * S + s[j]]);
                d += a * U(t);
            }
            p.diag[c] = d;
        }
    }
    const double dmin = *std::min_element(p.diag.begin(), p.diag.end());
    const double dmax = *std::max_element(p.diag.begin(), p.diag.end());
    // Constants are exact Neumann ground states when U never acts.
    if (dmax == 0.0) return 0.0;
    if (eps == 0.0) return dmin;

    std::vector<double> start(D, 1.0);
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> noise(0.0, 1e-3);
    for (auto& x : start) x += noise(rng);
    const auto res = run(p, std::move(start), opts, krylov);
    if (!res.converged)
        throw ConvergenceError("soft_box_energy: Lanczos stopped at residual " + std::to_string(res.residual));
    return res.eigenvalue;
}

IncrementReport verify_increment_bound(int n, double L, double eps, double a, const SoftPotentialU& U, int M,
                                       double slack, const SolverOptions& opts) {
    if (!(slack >= 0.0)) throw InvalidArgument("verify_increment_bound: slack must be >= 0");
    IncrementReport r;
    r.e_n = soft_box_energy(n, L, eps, a, U, M, opts);
    r.e_n1 = soft_box_energy(n + 1, L, eps, a, U, M, opts);
    r.lhs = r.e_n1 - r.e_n;
    r.rhs = 8.0 * std::numbers::pi * a * n / (L * L * L);
    r.satisfied = r.lhs <= r.rhs * (1.0 + slack);
    return r;
}

namespace {

double window_scattering_length(const InteractionPotential& v, double h, int W) {
    const int n = 2 * W + 1;
    const std::size_t size = static_cast<std::size_t>(n) * n * n;
    auto flat = [n](int i, int j, int k) {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * (j + static_cast<std::size_t>(n) * k);
    };
    std::vector<double> pot(size, 0.0);
    std::vector<std::uint8_t> free_site(size, 1);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double r = h * std::sqrt(double((i - W) * (i - W) + (j - W) * (j - W) + (k - W) * (k - W)));
                const auto c = flat(i, j, k);
                if (v.excludes(r))
                    free_site[c] = 0;
                else
                    pot[c] = v(r);
            }

    const double kin = 2.0 / (h * h);
    // y = A x on free sites; neighbours outside the window or excluded read 0.
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    const auto c = flat(i, j, k);
                    if (!free_site[c]) {
                        y[c] = 0.0;
                        continue;
                    }
                    double nb = 0.0;
                    if (i > 0) nb += x[c - 1];
                    if (i < n - 1) nb += x[c + 1];
                    if (j > 0) nb += x[c - n];
                    if (j < n - 1) nb += x[c + n];
                    if (k > 0) nb += x[c - static_cast<std::size_t>(n) * n];
                    if (k < n - 1) nb += x[c + static_cast<std::size_t>(n) * n];
                    y[c] = kin * (6.0 * x[c] - nb) + pot[c] * x[c];
                }
    };
    std::vector<double> b(size, 0.0);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const auto c = flat(i, j, k);
                if (!free_site[c]) continue;
                const int outside = (i == 0) + (i == n - 1) + (j == 0) + (j == n - 1) + (k == 0) + (k == n - 1);
                b[c] = kin * outside;
            }

    // Conjugate gradients from u = 1 on free sites.
    std::vector<double> u(size), r(size), p(size), q(size);
    for (std::size_t c = 0; c < size; ++c) u[c] = free_site[c];
    apply(u, q);
    for (std::size_t c = 0; c < size; ++c) r[c] = b[c] - q[c];
    p = r;
    double rr = pairwise_dot(r, r);
    const double stop = 1e-26 * pairwise_dot(b, b);
    for (int it = 0; it < 20 * n * n && rr > stop; ++it) {
        apply(p, q);
        const double alpha = rr / pairwise_dot(p, q);
        for (std::size_t c = 0; c < size; ++c) {
            u[c] += alpha * p[c];
            r[c] -= alpha * q[c];
        }
        const double rr_new = pairwise_dot(r, r);
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t c = 0; c < size; ++c) p[c] = r[c] + beta * p[c];
    }
    if (rr > stop) throw ConvergenceError("lattice_scattering_length: CG did not converge");

    // E = h³ [2 Σ_faces (Δu/h)² + Σ v u²], ghost value 1 outside the window.
    std::vector<double> terms(size);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const auto c = flat(i, j, k);
                const double uc = u[c];
                double t = pot[c] * uc * uc;
                auto face = [&](double other) { t += 2.0 * (uc - other) * (uc - other) / (h * h); };
                face(i < n - 1 ? u[c + 1] : 1.0);
                face(j < n - 1 ? u[c + n] : 1.0);
                face(k < n - 1 ? u[c + static_cast<std::size_t>(n) * n] : 1.0);
                if (i == 0) face(1.0);
                if (j == 0) face(1.0);
                if (k == 0) face(1.0);
                terms[c] = t;
            }
    return pairwise_sum(terms) * h * h * h / (8.0 * std::numbers::pi);
}

}  // namespace

LatticeScattering lattice_scattering_length(const InteractionPotential& v, double h, int window) {
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("lattice_scattering_length: h must be positive");
    if (window < 2) throw InvalidArgument("lattice_scattering_length: window must be >= 2");
    if (v.range() >= window * h)
        throw InvalidArgument("lattice_scattering_length: potential range exceeds the window");
    LatticeScattering out;
    if (v.is_zero()) return out;
    out.a_small_window = window_scattering_length(v, h, window);
    out.a_large_window = window_scattering_length(v, h, 2 * window);
    out.a_eff = 2.0 * out.a_large_window - out.a_small_window;
    return out;
}

}  // namespace gplab
