#include "gplab/inequality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "gplab/error.hpp"
#include "gplab/summation.hpp"

namespace gplab {

namespace {

using std::numbers::pi;

double site_distance(const UniformGrid& grid, std::size_t s, std::size_t t) {
    const auto a = grid.unflatten(s);
    const auto b = grid.unflatten(t);
    const int m = grid.points_per_axis();
    double d2 = 0.0;
    for (int ax = 0; ax < grid.dim(); ++ax) {
        int d = std::abs(a[ax] - b[ax]);
        if (grid.boundary() == BoundaryCondition::periodic) d = std::min(d, m - d);
        d2 += static_cast<double>(d) * d;
    }
    return std::sqrt(d2) * grid.spacing();
}

void require_positive(const GPState& phi) {
    for (double v : phi.phi.values())
        if (!(v > 0.0)) throw InvalidArgument("conditional factor needs a strictly positive GP orbital");
}

void require_shared_grid(const ManyBodyState& state, const GPState& phi) {
    if (!(state.grid == phi.phi.grid())) throw InvalidArgument("many-body state and GP orbital use different grids");
}

}  // namespace

ScalarField conditional_factor(const ManyBodyState& state, const GPState& phi, const std::vector<std::size_t>& X) {
    require_shared_grid(state, phi);
    require_positive(phi);
    if (static_cast<int>(X.size()) != state.N - 1) throw InvalidArgument("X must fix N - 1 particles");
    const std::size_t S = state.grid.size();
    std::size_t offset = 0, stride = S;
    for (std::size_t s : X) {
        if (s >= S) throw InvalidArgument("X holds a site outside the grid");
        offset += s * stride;
        stride *= S;
    }
    ScalarField f(state.grid);
    for (std::size_t x = 0; x < S; ++x) f[x] = state.psi[offset + x] / phi.phi[x];
    return f;
}

double default_localization_radius(int N) {
    if (N < 1) throw InvalidArgument("N must be positive");
    return std::pow(static_cast<double>(N), -7.0 / 17.0);
}

LocalizationDiagnostic localization_diagnostic(const ManyBodyState& state, const GPState& phi, double r_loc) {
    require_shared_grid(state, phi);
    require_positive(phi);
    if (!(r_loc > 0.0)) throw InvalidArgument("r_loc must be positive");
    const auto& grid = state.grid;
    const std::size_t S = grid.size();
    const int others = state.N - 1;
    std::size_t configs = 1;
    for (int i = 0; i < others; ++i) configs *= S;

    std::vector<double> far_terms(configs), total_terms(configs);
    std::vector<double> f(S), site_total(S), site_far(S);
    std::vector<std::size_t> X(static_cast<std::size_t>(others));
    for (std::size_t c = 0; c < configs; ++c) {
        std::size_t r = c;
        for (int i = 0; i < others; ++i) {
            X[static_cast<std::size_t>(i)] = r % S;
            r /= S;
        }
        const std::size_t offset = c * S;
        for (std::size_t x = 0; x < S; ++x) f[x] = state.psi[offset + x] / phi.phi[x];
        const auto gd = gradient_density(grid, f, true);
        for (std::size_t x = 0; x < S; ++x) {
            const double w = phi.phi[x] * phi.phi[x] * gd[x];
            site_total[x] = w;
            bool far = true;
            for (std::size_t k : X) far = far && site_distance(grid, x, k) >= r_loc;
            site_far[x] = far ? w : 0.0;
        }
        total_terms[c] = pairwise_sum(site_total);
        far_terms[c] = pairwise_sum(site_far);
    }
    const double weight = std::pow(grid.cell_volume(), state.N);
    LocalizationDiagnostic d;
    d.r_loc = r_loc;
    d.I_total = pairwise_sum(total_terms) * weight;
    d.I_far = pairwise_sum(far_terms) * weight;
    if (phi.g > 0.0) {
        std::vector<double> p4(S);
        for (std::size_t x = 0; x < S; ++x) p4[x] = std::pow(phi.phi[x], 4);
        d.s_estimate = d.I_total / (phi.g * pairwise_sum(p4) * grid.cell_volume());
    }
    return d;
}

std::vector<double> radial_nodes(const std::vector<double>& breakpoints, double max_step) {
    if (!(max_step > 0.0)) throw InvalidArgument("radial_nodes: step must be positive");
    std::vector<double> r{0.0};
    for (double b : breakpoints) {
        if (!(b > r.back())) throw InvalidArgument("radial_nodes: breakpoints must increase from 0");
        const double a = r.back();
        const int n = static_cast<int>(std::ceil((b - a) / max_step - 1e-9));
        for (int i = 1; i < n; ++i) r.push_back(a + (b - a) * i / n);
        r.push_back(b);
    }
    return r;
}

DysonReport dyson_check(const InteractionPotential& v, const SoftPotentialU& U, const RadialSamples& psi,
                        double R_ball, double slack) {
    if (!(U.height >= 0.0) || !(U.inner >= 0.0) || !(U.outer > U.inner))
        throw InvalidArgument("dyson_check: U needs 0 <= R0 < R and a nonnegative height");
    if (U.radial_moment() > 1.0 + 1e-9) throw InvalidArgument("dyson_check: U must satisfy ∫U r² dr <= 1");
    if (v.range() > U.inner * (1.0 + 1e-12)) throw InvalidArgument("dyson_check: v must vanish beyond R0");
    if (U.outer > R_ball * (1.0 + 1e-12)) throw InvalidArgument("dyson_check: U must be supported inside the ball");
    const auto& r = psi.r;
    if (r.size() < 2 || r.size() != psi.psi.size()) throw InvalidArgument("dyson_check: need matching radial samples");
    if (r.front() != 0.0 || r.back() < R_ball * (1.0 - 1e-12))
        throw InvalidArgument("dyson_check: radial grid must span [0, R_ball]");
    const double max_step = U.inner > 0.0 ? U.inner / 100.0 : U.outer / 100.0;
    for (std::size_t i = 1; i < r.size(); ++i)
        if (!(r[i] > r[i - 1]) || r[i] - r[i - 1] > max_step * (1.0 + 1e-9))
            throw InvalidArgument("dyson_check: radial step must be increasing and at most R0/100");

    std::vector<double> p(psi.psi);
    for (std::size_t i = 0; i < r.size(); ++i)
        if (v.excludes(r[i])) p[i] = 0.0;

    DysonReport rep;
    rep.a = scattering_length(v);
    std::vector<double> lhs, rhs;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
        if (r[i + 1] > R_ball * (1.0 + 1e-12)) break;
        const double dr = r[i + 1] - r[i];
        const double rm = 0.5 * (r[i] + r[i + 1]);
        const double pm = 0.5 * (p[i] + p[i + 1]);
        const double dp = (p[i + 1] - p[i]) / dr;
        const double w = 4.0 * pi * rm * rm * dr;
        lhs.push_back((dp * dp + 0.5 * v(rm) * pm * pm) * w);
        rhs.push_back(U(rm) * pm * pm * w);
    }
    rep.lhs = pairwise_sum(lhs);
    rep.rhs = rep.a * pairwise_sum(rhs);
    rep.satisfied = rep.lhs >= rep.rhs * (1.0 - slack);
    return rep;
}

namespace {

std::vector<std::uint8_t> domain_mask(const UniformGrid& grid, const PoincareDomain& K) {
    std::vector<std::uint8_t> in(grid.size(), 0);
    const double tol = 1e-12 * K.size;
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const auto x = grid.position(s);
        bool inside = true;
        if (K.kind == PoincareDomain::Kind::cube) {
            for (int a = 0; a < grid.dim(); ++a) inside = inside && std::abs(x[a]) <= 0.5 * K.size + tol;
        } else {
            double r2 = 0.0;
            for (int a = 0; a < grid.dim(); ++a) r2 += x[a] * x[a];
            inside = std::sqrt(r2) <= K.size + tol;
        }
        in[s] = inside;
    }
    return in;
}

// Σ_faces (Δf/h)² over faces joining two sites of K, split half to each site.
std::vector<double> site_gradient(const UniformGrid& grid, const std::vector<double>& f,
                                  const std::vector<std::uint8_t>& in) {
    std::vector<double> gd(grid.size(), 0.0);
    const double h2 = grid.spacing() * grid.spacing();
    const int m = grid.points_per_axis();
    for (std::size_t s = 0; s < grid.size(); ++s) {
        if (!in[s]) continue;
        const auto idx = grid.unflatten(s);
        for (int a = 0; a < grid.dim(); ++a) {
            if (idx[a] + 1 >= m) continue;
            const std::size_t t = s + grid.stride(a);
            if (!in[t]) continue;
            const double d = f[t] - f[s];
            gd[s] += 0.5 * d * d / h2;
            gd[t] += 0.5 * d * d / h2;
        }
    }
    return gd;
}

int count_components(const UniformGrid& grid, const std::vector<std::uint8_t>& omega) {
    std::vector<std::uint8_t> seen(grid.size(), 0);
    std::vector<std::size_t> stack;
    const int m = grid.points_per_axis();
    int comps = 0;
    for (std::size_t s = 0; s < grid.size(); ++s) {
        if (!omega[s] || seen[s]) continue;
        ++comps;
        seen[s] = 1;
        stack.push_back(s);
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            const auto idx = grid.unflatten(u);
            for (int a = 0; a < grid.dim(); ++a) {
                for (int dir : {-1, 1}) {
                    const int j = idx[a] + dir;
                    if (j < 0 || j >= m) continue;
                    const std::size_t t = dir > 0 ? u + grid.stride(a) : u - grid.stride(a);
                    if (omega[t] && !seen[t]) {
                        seen[t] = 1;
                        stack.push_back(t);
                    }
                }
            }
        }
    }
    return comps;
}

struct OmegaDraw {
    std::vector<std::uint8_t> sites;
    std::string kind;
};

OmegaDraw draw_boxes(const UniformGrid& grid, const std::vector<std::uint8_t>& in, std::mt19937_64& rng, int lo_count,
                     int hi_count) {
    const int m = grid.points_per_axis();
    std::uniform_int_distribution<int> count(lo_count, hi_count), pick(0, m - 1);
    OmegaDraw d{std::vector<std::uint8_t>(grid.size(), 0), "boxes"};
    const int n = count(rng);
    for (int b = 0; b < n; ++b) {
        std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
        for (int a = 0; a < grid.dim(); ++a) {
            int p = pick(rng), q = pick(rng);
            lo[a] = std::min(p, q);
            hi[a] = std::max(p, q);
        }
        for (std::size_t s = 0; s < grid.size(); ++s) {
            const auto idx = grid.unflatten(s);
            bool inside = in[s];
            for (int a = 0; a < grid.dim(); ++a) inside = inside && idx[a] >= lo[a] && idx[a] <= hi[a];
            if (inside) d.sites[s] = 1;
        }
    }
    return d;
}

OmegaDraw draw_mask(const UniformGrid& grid, const std::vector<std::uint8_t>& in, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> frac(0.05, 0.95), u(0.0, 1.0);
    const double p = frac(rng);
    OmegaDraw d{std::vector<std::uint8_t>(grid.size(), 0), "mask"};
    for (std::size_t s = 0; s < grid.size(); ++s) d.sites[s] = in[s] && u(rng) < p;
    return d;
}

OmegaDraw draw_omega(const UniformGrid& grid, const std::vector<std::uint8_t>& in, std::mt19937_64& rng,
                     OmegaFamily family) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (family == OmegaFamily::mixed) {
        const double c = u(rng);
        if (c < 0.05) return {in, "full"};
        if (c < 0.10) return {std::vector<std::uint8_t>(grid.size(), 0), "empty"};
        if (c < 0.55) return draw_boxes(grid, in, rng, 1, 4);
        return draw_mask(grid, in, rng);
    }
    for (int attempt = 0; attempt < 64; ++attempt) {
        OmegaDraw d = u(rng) < 0.5 ? draw_boxes(grid, in, rng, 2, 4) : draw_mask(grid, in, rng);
        if (count_components(grid, d.sites) >= 2) return d;
    }
    // Isolated sites on one checkerboard colour.
    OmegaDraw d{std::vector<std::uint8_t>(grid.size(), 0), "checkerboard"};
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const auto idx = grid.unflatten(s);
        d.sites[s] = in[s] && (idx[0] + idx[1] + idx[2]) % 2 == 0;
    }
    return d;
}

// Sum of a few random plane waves with wavelengths no shorter than a third of
// the domain extent.
std::vector<double> draw_field(const UniformGrid& grid, double extent, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> mode(-3, 3);
    std::normal_distribution<double> amp(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * pi);
    std::vector<double> f(grid.size(), 0.0);
    for (int j = 0; j < 6; ++j) {
        std::array<int, 3> n{0, 0, 0};
        int norm2 = 0;
        while (norm2 == 0) {
            norm2 = 0;
            for (int a = 0; a < grid.dim(); ++a) {
                n[a] = mode(rng);
                norm2 += n[a] * n[a];
            }
        }
        const double c = amp(rng) / std::sqrt(static_cast<double>(norm2));
        const double th = phase(rng);
        for (std::size_t s = 0; s < grid.size(); ++s) {
            const auto x = grid.position(s);
            double arg = th;
            for (int a = 0; a < grid.dim(); ++a) arg += pi * n[a] * x[a] / extent;
            f[s] += c * std::cos(arg);
        }
    }
    return f;
}

}  // namespace

PoincareProbeResult poincare_probe(const PoincareDomain& K, const ScalarField& h, std::size_t samples,
                                   std::uint64_t seed, OmegaFamily family) {
    const auto& grid = h.grid();
    const int m = grid.dim();
    if (m != 2 && m != 3) throw InvalidArgument("poincare_probe: dimension must be 2 or 3");
    if (samples < 1) throw InvalidArgument("poincare_probe: need at least one sample");
    if (!(K.size > 0.0)) throw InvalidArgument("poincare_probe: domain size must be positive");
    const auto in = domain_mask(grid, K);
    std::size_t k_sites = 0;
    for (auto b : in) k_sites += b;
    if (k_sites == 0) throw InvalidArgument("poincare_probe: domain contains no grid sites");
    const double dv = grid.cell_volume();
    std::vector<double> hk(grid.size(), 0.0);
    for (std::size_t s = 0; s < grid.size(); ++s) {
        if (!std::isfinite(h[s])) throw InvalidArgument("poincare_probe: weight must be finite");
        if (in[s]) hk[s] = h[s];
    }
    const double mass = pairwise_sum(hk) * dv;
    if (std::abs(mass - 1.0) > 1e-8) throw InvalidArgument("poincare_probe: weight must integrate to 1 over K");
    const double extent = K.kind == PoincareDomain::Kind::cube ? K.size : 2.0 * K.size;

    PoincareProbeResult out;
    out.domain = K;
    out.sample_count = samples;
    double best_half = 0.0;
    std::vector<double> tmp(grid.size());
    for (std::size_t i = 0; i < samples; ++i) {
        std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
        std::mt19937_64 rng(sq);
        std::vector<double> f = draw_field(grid, extent, rng);
        for (std::size_t s = 0; s < grid.size(); ++s) tmp[s] = f[s] * hk[s];
        const double mean = pairwise_sum(tmp) * dv;
        for (std::size_t s = 0; s < grid.size(); ++s) f[s] = in[s] ? f[s] - mean : 0.0;
        const OmegaDraw omega = draw_omega(grid, in, rng, family);

        const auto gd = site_gradient(grid, f, in);
        std::size_t omega_sites = 0;
        for (std::size_t s = 0; s < grid.size(); ++s) {
            tmp[s] = omega.sites[s] ? gd[s] : 0.0;
            omega_sites += omega.sites[s];
        }
        const double grad_omega = pairwise_sum(tmp) * dv;
        const double grad_k = pairwise_sum(gd) * dv;
        for (std::size_t s = 0; s < grid.size(); ++s) tmp[s] = f[s] * f[s];
        const double lhs = pairwise_sum(tmp) * dv;
        const double frac_c = static_cast<double>(k_sites - omega_sites) / static_cast<double>(k_sites);
        const double denom = grad_omega + std::pow(frac_c, 2.0 / m) * grad_k;
        if (lhs < 1e-14 && denom < 1e-14) {
            ++out.skipped;
            continue;
        }
        PoincareSample smp;
        smp.index = i;
        smp.ratio = denom > 0.0 ? lhs / denom : std::numeric_limits<double>::infinity();
        smp.omega_fraction = static_cast<double>(omega_sites) / static_cast<double>(k_sites);
        smp.components = count_components(grid, omega.sites);
        smp.omega_kind = omega.kind;
        if (smp.ratio > out.C_estimate) {
            out.C_estimate = smp.ratio;
            out.worst = smp;
        }
        if (i < (samples + 1) / 2) best_half = out.C_estimate;
        out.samples.push_back(std::move(smp));
    }
    out.stability_ratio = best_half > 0.0 ? out.C_estimate / best_half : 0.0;
    return out;
}

ScalarField poincare_weight(const ScalarField& phi, const UniformGrid& target, const PoincareDomain& K) {
    const auto& src = phi.grid();
    if (src.dim() != target.dim()) throw InvalidArgument("poincare_weight: dimensions differ");
    const int d = src.dim();
    const int m = src.points_per_axis();
    const double hs = src.spacing();
    const auto in = domain_mask(target, K);
    ScalarField w(target);
    for (std::size_t s = 0; s < target.size(); ++s) {
        if (!in[s]) continue;
        const auto x = target.position(s);
        std::array<int, 3> i0{0, 0, 0};
        std::array<double, 3> t{0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) {
            const double u = (x[a] + 0.5 * src.side_length()) / hs - 0.5;
            i0[a] = std::clamp(static_cast<int>(std::floor(u)), 0, m - 2);
            t[a] = std::clamp(u - i0[a], 0.0, 1.0);
        }
        double val = 0.0;
        for (int corner = 0; corner < (1 << d); ++corner) {
            std::array<int, 3> idx{0, 0, 0};
            double wt = 1.0;
            for (int a = 0; a < d; ++a) {
                const int bit = (corner >> a) & 1;
                idx[a] = i0[a] + bit;
                wt *= bit ? t[a] : 1.0 - t[a];
            }
            val += wt * phi[src.flatten(idx)];
        }
        w[s] = val * val;
    }
    const double mass = integrate(w);
    if (!(mass > 0.0)) throw InvalidArgument("poincare_weight: orbital vanishes on K");
    for (auto& v : w.values()) v /= mass;
    return w;
}

BoxLowerBoundReference box_lower_bound_reference(int n, double L, double a, double eps) {
    if (n < 1 || !(L > 0.0) || !(a >= 0.0) || !(eps >= 0.0))
        throw InvalidArgument("box_lower_bound_reference: need n >= 1, L > 0, a >= 0, eps >= 0");
    BoxLowerBoundReference r;
    r.leading_term = 4.0 * pi * a * n * n / (L * L * L);
    r.Y = a * a * a * n / (L * L * L);
    r.eps_condition_met = eps >= std::pow(r.Y, 1.0 / 17.0);
    return r;
}

}  // namespace gplab
