#include "gplab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gplab/error.hpp"

namespace gplab {

TrapPotential TrapPotential::harmonic(std::array<double, 3> omega) {
    for (double w : omega)
        if (!std::isfinite(w)) throw InvalidArgument("trap frequency must be finite");
    TrapPotential t;
    t.omega_ = omega;
    return t;
}

TrapPotential TrapPotential::tabulated(ScalarField samples) {
    if (!samples.all_finite()) throw InvalidArgument("tabulated trap has non-finite samples");
    for (double v : samples.values())
        if (v < 0.0) throw InvalidArgument("tabulated trap must be nonnegative");
    TrapPotential t;
    t.table_ = std::move(samples);
    return t;
}

TrapPotential TrapPotential::none() { return harmonic({0.0, 0.0, 0.0}); }

double TrapPotential::operator()(const std::array<double, 3>& x) const {
    if (table_) throw InvalidArgument("pointwise evaluation of a tabulated trap");
    double v = 0.0;
    for (int a = 0; a < 3; ++a) v += omega_[a] * omega_[a] * x[a] * x[a];
    return v;
}

ScalarField TrapPotential::sample(const UniformGrid& grid) const {
    if (table_) {
        if (!(table_->grid() == grid)) throw InvalidArgument("tabulated trap grid does not match");
        return *table_;
    }
    return ScalarField::sample(grid, [this](const auto& x) { return (*this)(x); });
}

bool TrapPotential::confines_on(const UniformGrid& grid) const {
    const ScalarField v = sample(grid);
    const int m = grid.points_per_axis();
    double shell = std::numeric_limits<double>::infinity();
    double interior = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const auto idx = grid.unflatten(s);
        bool on_shell = false;
        for (int a = 0; a < grid.dim(); ++a) on_shell |= idx[a] == 0 || idx[a] == m - 1;
        (on_shell ? shell : interior) = std::min(on_shell ? shell : interior, v[s]);
    }
    return shell > interior;
}

InteractionPotential InteractionPotential::zero() { return {}; }

InteractionPotential InteractionPotential::hard_sphere(double core_radius) {
    if (!(core_radius > 0.0) || !std::isfinite(core_radius))
        throw InvalidArgument("hard-sphere radius must be positive");
    InteractionPotential v;
    v.kind_ = Kind::hard_sphere;
    v.core_ = core_radius;
    v.range_ = core_radius;
    return v;
}

InteractionPotential InteractionPotential::soft_sphere(double height, double radius) {
    if (!std::isfinite(height) || height < 0.0) throw InvalidArgument("soft-sphere height must be finite and >= 0");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("soft-sphere radius must be positive");
    if (height == 0.0) return zero();
    InteractionPotential v;
    v.kind_ = Kind::soft_sphere;
    v.height_ = height;
    v.range_ = radius;
    return v;
}

InteractionPotential InteractionPotential::tabulated(std::vector<double> r, std::vector<double> vals,
                                                     double core_radius) {
    if (r.empty() || r.size() != vals.size())
        throw InvalidArgument("tabulated potential needs matching, non-empty r and v columns");
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!std::isfinite(r[i]) || !std::isfinite(vals[i]))
            throw InvalidArgument("tabulated potential has non-finite entries");
        if (vals[i] < 0.0) throw InvalidArgument("tabulated potential must be nonnegative");
        if (r[i] < 0.0 || (i > 0 && r[i] <= r[i - 1]))
            throw InvalidArgument("tabulated radii must be nonnegative and strictly increasing");
    }
    if (!std::isfinite(core_radius) || core_radius < 0.0) throw InvalidArgument("core radius must be >= 0");
    InteractionPotential v;
    v.kind_ = Kind::tabulated;
    v.core_ = core_radius;
    v.range_ = std::max(r.back(), core_radius);
    v.table_r_ = std::move(r);
    v.table_v_ = std::move(vals);
    return v;
}

std::string InteractionPotential::kind_name() const {
    switch (kind_) {
        case Kind::zero: return "zero";
        case Kind::hard_sphere: return "hard_sphere";
        case Kind::soft_sphere: return "soft_sphere";
        case Kind::tabulated: return "tabulated";
    }
    return "unknown";
}

double InteractionPotential::operator()(double r) const {
    if (r < core_) return 0.0;
    switch (kind_) {
        case Kind::zero:
        case Kind::hard_sphere: return 0.0;
        case Kind::soft_sphere: return r < range_ ? height_ : 0.0;
        case Kind::tabulated: {
            if (r > table_r_.back()) return 0.0;
            if (r <= table_r_.front()) return table_v_.front();
            const auto it = std::upper_bound(table_r_.begin(), table_r_.end(), r);
            const std::size_t hi = static_cast<std::size_t>(it - table_r_.begin());
            const std::size_t lo = hi - 1;
            const double t = (r - table_r_[lo]) / (table_r_[hi] - table_r_[lo]);
            return (1.0 - t) * table_v_[lo] + t * table_v_[hi];
        }
    }
    return 0.0;
}

InteractionPotential InteractionPotential::scaled(double s) const {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("interaction scale must be positive");
    InteractionPotential v = *this;
    v.core_ = core_ * s;
    v.range_ = range_ * s;
    v.height_ = height_ / (s * s);
    for (auto& r : v.table_r_) r *= s;
    for (auto& x : v.table_v_) x /= s * s;
    return v;
}

double scattering_length(const InteractionPotential& v, const ShootingOptions& opts) {
    if (v.is_zero()) return 0.0;
    const double range = v.range();
    const double core = v.core_radius();
    const int steps = std::max(opts.steps_per_range, 2000);
    const double dr = range / steps;

    // u'' = v(r) u / 2. Each RK4 step samples v strictly inside its own
    // interval so that jumps at nodes are seen from the correct side.
    auto accel = [&](double r, double lo, double hi, double u) {
        const double eps = 1e-9 * dr;
        return 0.5 * v(std::clamp(r, lo + eps, hi - eps)) * u;
    };
    double r = core;
    double u = 0.0;
    double du = 1.0;
    auto step = [&](double h) {
        const double lo = r, hi = r + h;
        const double k1u = du, k1d = accel(r, lo, hi, u);
        const double k2u = du + 0.5 * h * k1d, k2d = accel(r + 0.5 * h, lo, hi, u + 0.5 * h * k1u);
        const double k3u = du + 0.5 * h * k2d, k3d = accel(r + 0.5 * h, lo, hi, u + 0.5 * h * k2u);
        const double k4u = du + h * k3d, k4d = accel(r + h, lo, hi, u + h * k3u);
        u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
        du += h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
        r = hi;
    };
    if (range > core) {
        const int inner = std::max(1, static_cast<int>(std::ceil((range - core) / dr)));
        const double h = (range - core) / inner;
        for (int i = 0; i < inner; ++i) step(h);
    }
    r = range;

    // Exterior: v = 0, so u is linear; least-squares fit on [R₀, 2R₀].
    std::vector<double> rs, us;
    const int outer = 200;
    const double h = range / outer;
    rs.push_back(r);
    us.push_back(u);
    for (int i = 0; i < outer; ++i) {
        step(h);
        rs.push_back(r);
        us.push_back(u);
    }
    double mr = 0, mu = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        mr += rs[i];
        mu += us[i];
    }
    mr /= rs.size();
    mu /= rs.size();
    double srr = 0, sru = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        srr += (rs[i] - mr) * (rs[i] - mr);
        sru += (rs[i] - mr) * (us[i] - mu);
    }
    const double slope = sru / srr;
    const double intercept = mu - slope * mr;
    return -intercept / slope;
}

InteractionPotential scale_interaction(const InteractionPotential& v1, double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("scale_interaction: a must be positive");
    return v1.scaled(a);
}

SoftPotentialU softened_potential(double inner, double outer) {
    if (!(inner >= 0.0) || !std::isfinite(outer) || !(outer > inner))
        throw InvalidArgument("softened_potential: need 0 <= R0 < R");
    return {inner, outer, 3.0 / (outer * outer * outer - inner * inner * inner)};
}

}  // namespace gplab
