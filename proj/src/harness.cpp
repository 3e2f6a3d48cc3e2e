#include "gplab/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "gplab/error.hpp"
#include "gplab/field_io.hpp"
#include "gplab/gp_solver.hpp"
#include "gplab/inequality.hpp"
#include "gplab/manybody.hpp"

namespace gplab {

using json = nlohmann::json;
using std::numbers::pi;

namespace {

// ---------------------------------------------------------------- parsing

// Reads one JSON object, tracking the dotted path for diagnostics and
// rejecting keys nobody asked for.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json* raw(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::optional<double> number(const std::string& key) {
        const json* v = raw(key);
        if (!v) return std::nullopt;
        if (!v->is_number()) fail(where(key), "expected a number");
        return v->get<double>();
    }

    std::optional<long long> integer(const std::string& key) {
        const json* v = raw(key);
        if (!v) return std::nullopt;
        if (!v->is_number_integer()) fail(where(key), "expected an integer");
        return v->get<long long>();
    }

    std::optional<std::string> string(const std::string& key) {
        const json* v = raw(key);
        if (!v) return std::nullopt;
        if (!v->is_string()) fail(where(key), "expected a string");
        return v->get<std::string>();
    }

    std::optional<Fields> object(const std::string& key) {
        const json* v = raw(key);
        if (!v) return std::nullopt;
        return Fields(*v, where(key));
    }

    const json* array(const std::string& key) {
        const json* v = raw(key);
        if (v && !v->is_array()) fail(where(key), "expected an array");
        return v;
    }

    double positive(const std::string& key, double fallback) {
        const double x = number(key).value_or(fallback);
        if (!(x > 0.0) || !std::isfinite(x)) fail(where(key), "must be a positive finite number");
        return x;
    }

    int int_at_least(const std::string& key, int fallback, int lo) {
        const long long x = integer(key).value_or(fallback);
        if (x < lo || x > std::numeric_limits<int>::max()) fail(where(key), "must be an integer >= " + std::to_string(lo));
        return static_cast<int>(x);
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) fail(where(key), "unknown field");
    }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] static void fail(const std::string& field, const std::string& msg) {
        throw ConfigError("config field '" + field + "': " + msg);
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Mode mode_from(const std::string& s) {
    if (s == "gp") return Mode::gp;
    if (s == "manybody") return Mode::manybody;
    if (s == "sweep") return Mode::sweep;
    if (s == "props") return Mode::props;
    Fields::fail("mode", "unknown mode '" + s + "' (gp, manybody, sweep, props)");
}

const std::set<std::string> kSuites{"dyson", "poincare", "increment", "localization"};

GridSpec parse_grid(Fields f) {
    GridSpec g;
    g.L = f.positive("L", g.L);
    g.M = f.int_at_least("M", g.M, 2);
    if (auto bc = f.string("bc")) {
        try {
            g.bc = boundary_from_string(*bc);
        } catch (const std::exception&) {
            Fields::fail(f.where("bc"), "expected dirichlet, neumann or periodic");
        }
    }
    g.dim = f.int_at_least("dim", g.dim, 2);
    if (g.dim > 3) Fields::fail(f.where("dim"), "must be 2 or 3");
    f.finish();
    return g;
}

TrapSpec parse_trap(Fields f) {
    TrapSpec t;
    t.type = f.string("type").value_or(t.type);
    if (t.type != "harmonic" && t.type != "none") Fields::fail(f.where("type"), "expected harmonic or none");
    if (const json* om = f.array("omega")) {
        if (om->size() != 3) Fields::fail(f.where("omega"), "expected three frequencies");
        for (std::size_t i = 0; i < 3; ++i) {
            if (!(*om)[i].is_number() || !((*om)[i].get<double>() >= 0.0))
                Fields::fail(f.where("omega"), "frequencies must be nonnegative numbers");
            t.omega[i] = (*om)[i].get<double>();
        }
    }
    f.finish();
    return t;
}

InteractionSpec parse_interaction(Fields f) {
    InteractionSpec s;
    s.type = f.string("type").value_or(s.type);
    if (s.type == "hard_sphere") {
        s.radius = f.positive("radius", 0.0);
    } else if (s.type == "soft_sphere") {
        s.radius = f.positive("radius", 0.0);
        s.height = f.positive("height", 0.0);
    } else if (s.type != "zero") {
        Fields::fail(f.where("type"), "expected zero, hard_sphere or soft_sphere");
    }
    f.finish();
    return s;
}

CouplingSpec parse_coupling(Fields f) {
    CouplingSpec c;
    c.g = f.number("g");
    c.N = f.number("N");
    c.a = f.number("a");
    c.dim = f.int_at_least("dim", 3, 2);
    const bool pair = c.N || c.a;
    if (c.g && pair) Fields::fail(f.where("g"), "give either g or (N, a), not both");
    if (!c.g && !(c.N && c.a)) Fields::fail(f.where("g"), "give either g or both N and a");
    if (c.g && (!(*c.g >= 0.0) || !std::isfinite(*c.g))) Fields::fail(f.where("g"), "must be >= 0");
    if (c.N && !(*c.N >= 1.0)) Fields::fail(f.where("N"), "must be >= 1");
    if (c.a && (!(*c.a >= 0.0) || !std::isfinite(*c.a))) Fields::fail(f.where("a"), "must be >= 0");
    if (c.dim > 3) Fields::fail(f.where("dim"), "must be 2 or 3");
    f.finish();
    return c;
}

SolverSpec parse_solver(Fields f) {
    SolverSpec s;
    s.gp_tol = f.positive("gp_tol", s.gp_tol);
    s.gp_max_iters = f.int_at_least("gp_max_iters", s.gp_max_iters, 1);
    s.mb_tol = f.positive("mb_tol", s.mb_tol);
    s.mb_max_iters = f.int_at_least("mb_max_iters", s.mb_max_iters, 1);
    s.max_krylov = f.int_at_least("max_krylov", s.max_krylov, 8);
    f.finish();
    return s;
}

SweepSpec parse_sweep(Fields f) {
    SweepSpec s;
    if (const json* ns = f.array("N")) {
        s.N.clear();
        for (const auto& n : *ns) {
            if (!n.is_number_integer() || n.get<int>() < 1 || n.get<int>() > 3)
                Fields::fail(f.where("N"), "entries must be 1, 2 or 3");
            s.N.push_back(n.get<int>());
        }
        if (s.N.empty()) Fields::fail(f.where("N"), "must not be empty");
    }
    s.calibrate = f.string("calibrate").value_or(s.calibrate);
    if (s.calibrate != "lattice" && s.calibrate != "continuum")
        Fields::fail(f.where("calibrate"), "expected lattice or continuum");
    f.finish();
    return s;
}

PropsSpec parse_props(Fields f) {
    PropsSpec p;
    if (const json* su = f.array("suites")) {
        p.suites.clear();
        for (const auto& s : *su) {
            if (!s.is_string() || !kSuites.count(s.get<std::string>()))
                Fields::fail(f.where("suites"), "unknown suite " + s.dump() +
                                                    " (dyson, poincare, increment, localization)");
            p.suites.push_back(s.get<std::string>());
        }
        if (p.suites.empty()) Fields::fail(f.where("suites"), "must not be empty");
    }
    p.samples = static_cast<std::size_t>(f.int_at_least("samples", static_cast<int>(p.samples), 1));
    p.poincare_samples =
        static_cast<std::size_t>(f.int_at_least("poincare_samples", static_cast<int>(p.poincare_samples), 1));
    p.poincare_M = f.int_at_least("poincare_M", p.poincare_M, 4);
    p.poincare_g = f.number("poincare_g").value_or(p.poincare_g);
    if (!(p.poincare_g >= 0.0)) Fields::fail(f.where("poincare_g"), "must be >= 0");
    p.poincare_gp_M = f.int_at_least("poincare_gp_M", p.poincare_gp_M, 8);
    p.increment_n = f.int_at_least("increment_n", p.increment_n, 1);
    if (p.increment_n > 2) Fields::fail(f.where("increment_n"), "must be 1 or 2");
    p.increment_M = f.int_at_least("increment_M", p.increment_M, 2);
    p.localization_M = f.int_at_least("localization_M", p.localization_M, 4);
    f.finish();
    return p;
}

// ---------------------------------------------------------------- output

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) { row_strings(header); }

    void row(std::initializer_list<double> values) {
        std::vector<std::string> cells;
        for (double v : values) cells.push_back(format_double(v));
        row_strings(cells);
    }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
        text_ += "\n";
    }

    const std::string& text() const { return text_; }

private:
    std::string text_;
};

json grid_json(const UniformGrid& g) {
    return {{"L", g.side_length()}, {"M", g.points_per_axis()}, {"bc", to_string(g.boundary())}, {"dim", g.dim()},
            {"h", g.spacing()}};
}

json energy_json(const GPEnergy& e) {
    return {{"kinetic", e.kinetic}, {"trap", e.trap}, {"interaction", e.interaction}, {"total", e.total}};
}

GPParams gp_params(const ExperimentConfig& cfg) {
    GPParams p;
    p.max_iters = cfg.solver.gp_max_iters;
    p.residual_tol = cfg.solver.gp_tol;
    p.seed = cfg.seed;
    return p;
}

SolverOptions mb_options(const ExperimentConfig& cfg) {
    SolverOptions o;
    o.tol = cfg.solver.mb_tol;
    o.max_iters = cfg.solver.mb_max_iters;
    o.seed = cfg.seed;
    o.max_krylov = cfg.solver.max_krylov;
    return o;
}

double elapsed(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

double lattice_a_eff(const InteractionPotential& v, double h) {
    return v.is_zero() ? 0.0 : lattice_scattering_length(v, h).a_eff;
}

// Runs tasks on up to `jobs` threads; results come back in task order.
template <class T>
std::vector<T> run_ordered(const std::vector<std::function<T()>>& tasks, int jobs) {
    std::vector<T> out;
    out.reserve(tasks.size());
    if (jobs <= 1) {
        for (const auto& t : tasks) out.push_back(t());
        return out;
    }
    for (std::size_t start = 0; start < tasks.size(); start += static_cast<std::size_t>(jobs)) {
        std::vector<std::future<T>> batch;
        for (std::size_t i = start; i < std::min(tasks.size(), start + static_cast<std::size_t>(jobs)); ++i)
            batch.push_back(std::async(std::launch::async, tasks[i]));
        for (auto& f : batch) out.push_back(f.get());
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- config

const char* to_string(Mode m) {
    switch (m) {
        case Mode::gp: return "gp";
        case Mode::manybody: return "manybody";
        case Mode::sweep: return "sweep";
        case Mode::props: return "props";
    }
    return "unknown";
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

ExperimentConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // The message carries the line and column.
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }

    Fields root(j, "");
    ExperimentConfig cfg;
    const auto mode = root.string("mode");
    if (!mode) Fields::fail("mode", "required");
    cfg.mode = mode_from(*mode);
    if (auto f = root.object("grid")) cfg.grid = parse_grid(*f);
    if (auto f = root.object("trap")) cfg.trap = parse_trap(*f);
    if (auto f = root.object("interaction")) cfg.interaction = parse_interaction(*f);
    if (auto f = root.object("coupling")) cfg.coupling = parse_coupling(*f);
    if (auto f = root.object("solver")) cfg.solver = parse_solver(*f);
    if (auto f = root.object("sweep")) cfg.sweep = parse_sweep(*f);
    if (auto f = root.object("props")) cfg.props = parse_props(*f);
    cfg.particles = root.int_at_least("N", cfg.particles, 1);
    if (cfg.particles > 3) Fields::fail("N", "must be 1, 2 or 3");
    const long long seed = root.integer("seed").value_or(1);
    if (seed < 0) Fields::fail("seed", "must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(seed);
    if (auto out = root.string("output_dir")) cfg.output_dir = *out;
    root.finish();

    if (cfg.coupling && cfg.coupling->dim != cfg.grid.dim)
        Fields::fail("coupling.dim", "must equal grid.dim (" + std::to_string(cfg.grid.dim) + ")");
    if (cfg.mode != Mode::gp && cfg.grid.dim != 3) Fields::fail("grid.dim", "only gp mode supports 2D grids");
    if (cfg.mode == Mode::gp && !cfg.coupling) Fields::fail("coupling", "required in gp mode");
    if (cfg.mode == Mode::sweep && (!cfg.coupling || !cfg.coupling->g))
        Fields::fail("coupling.g", "sweep needs a fixed g");
    if (cfg.mode == Mode::sweep && cfg.interaction.type == "hard_sphere" && *cfg.coupling->g > 0.0)
        Fields::fail("interaction.type", "sweep rescales the potential per row; use zero or soft_sphere");
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_props_overrides(ExperimentConfig& cfg, const std::vector<std::string>& suites,
                           std::optional<std::size_t> samples) {
    for (const auto& s : suites)
        if (!kSuites.count(s))
            throw ConfigError("--suite: unknown suite '" + s + "' (dyson, poincare, increment, localization)");
    if (!suites.empty()) cfg.props.suites = suites;
    if (samples) {
        if (*samples == 0) throw ConfigError("--samples: must be >= 1");
        cfg.props.samples = *samples;
        cfg.props.poincare_samples = *samples;
    }
}

UniformGrid grid_of(const GridSpec& g) { return make_grid(g.L, g.M, g.bc, g.dim); }

TrapPotential trap_of(const TrapSpec& t) {
    return t.type == "none" ? TrapPotential::none() : TrapPotential::harmonic(t.omega);
}

InteractionPotential interaction_of(const InteractionSpec& s) {
    if (s.type == "hard_sphere") return InteractionPotential::hard_sphere(s.radius);
    if (s.type == "soft_sphere") return InteractionPotential::soft_sphere(s.height, s.radius);
    return InteractionPotential::zero();
}

double coupling_of(const CouplingSpec& c) {
    if (c.g) return *c.g;
    return c.dim == 2 ? coupling_2d(*c.N, *c.a) : coupling_3d(*c.N, *c.a);
}

// ---------------------------------------------------------------- gp

int run_gp(const ExperimentConfig& cfg) {
    const auto grid = grid_of(cfg.grid);
    const auto trap = trap_of(cfg.trap);
    const double g = coupling_of(*cfg.coupling);
    std::filesystem::create_directories(cfg.output_dir);

    const auto res = minimize_gp(trap, g, grid, gp_params(cfg));
    const auto& st = res.state;
    save_field(st.phi, cfg.output_dir / "phi.gpf1");

    Csv trace({"iteration", "energy", "residual", "step"});
    for (const auto& p : res.trace) trace.row({double(p.iteration), p.energy, p.residual, p.step});
    write_text(cfg.output_dir / "energy_trace.csv", trace.text());

    const auto& e = st.energy;
    const double d = grid.dim();
    json report{{"mode", "gp"},
                {"grid", grid_json(grid)},
                {"g", g},
                {"seed", cfg.seed},
                {"converged", res.converged},
                {"iterations", res.iterations},
                {"energy", energy_json(e)},
                {"mu", st.mu},
                {"mu_rayleigh", rayleigh_mu(st, trap)},
                {"residual", st.residual},
                // Scaling identity 2K - 2V + dI = 0 for a harmonic trap.
                {"virial", 2.0 * e.kinetic - 2.0 * e.trap + d * e.interaction}};
    write_json(cfg.output_dir / "report.json", report);
    if (!res.converged) {
        std::cerr << "gp: no convergence after " << res.iterations << " iterations (residual " << st.residual
                  << ")\n";
        return exit_code::resource_failure;
    }
    return exit_code::pass;
}

// ---------------------------------------------------------------- manybody

namespace {

struct GammaChecks {
    double asymmetry = 0.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double trace = 0.0;
    double momentum_integral = 0.0;
    bool ok = false;
};

GammaChecks check_gamma(const OneParticleDensityMatrix& gamma, const MomentumDensity& rho) {
    GammaChecks c;
    const auto& K = gamma.kernel;
    c.asymmetry = (K - K.transpose()).cwiseAbs().maxCoeff() / std::max(K.cwiseAbs().maxCoeff(), 1e-300);
    const auto spec = density_matrix_spectrum(gamma);
    c.lambda_min = spec.minCoeff();
    c.lambda_max = spec.maxCoeff();
    c.trace = gamma.trace();
    c.momentum_integral = rho.integral();
    const double N = gamma.N;
    c.ok = c.asymmetry <= 1e-12 && c.lambda_min >= -1e-10 * c.lambda_max && std::abs(c.trace - N) <= 1e-8 &&
           std::abs(c.momentum_integral - N) <= 1e-3 * N;
    return c;
}

json checks_json(const GammaChecks& c) {
    return {{"asymmetry", c.asymmetry}, {"lambda_min", c.lambda_min}, {"lambda_max", c.lambda_max},
            {"trace", c.trace},         {"momentum_integral", c.momentum_integral}, {"ok", c.ok}};
}

}  // namespace

int run_manybody(const ExperimentConfig& cfg) {
    const auto grid = grid_of(cfg.grid);
    const auto trap = trap_of(cfg.trap);
    const auto v = interaction_of(cfg.interaction);
    const int N = cfg.particles;
    std::filesystem::create_directories(cfg.output_dir);

    const auto st = ground_state(N, grid, trap, v, mb_options(cfg));
    const double a_eff = lattice_a_eff(v, grid.spacing());
    const double g = cfg.coupling ? coupling_of(*cfg.coupling) : coupling_3d(N, a_eff);
    const auto gp = minimize_gp(trap, g, grid, gp_params(cfg));

    const auto gamma = reduced_density_matrix(st);
    const auto rho = momentum_density(gamma);
    const auto checks = check_gamma(gamma, rho);
    const auto cond = condensate_report(gamma, gp.state);

    const std::size_t S = grid.size();
    Csv gcsv({"i", "j", "gamma"});
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j)
            gcsv.row({double(i), double(j), gamma.kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
    write_text(cfg.output_dir / "gamma.csv", gcsv.text());

    Csv rcsv({"kx", "ky", "kz", "rho_hat"});
    for (std::size_t k = 0; k < rho.values.size(); ++k) {
        const auto kv = rho.kgrid.wavevector(k);
        rcsv.row({kv[0], kv[1], kv[2], rho.values[k]});
    }
    write_text(cfg.output_dir / "rhohat.csv", rcsv.text());

    json report{{"mode", "manybody"},
                {"grid", grid_json(grid)},
                {"N", N},
                {"seed", cfg.seed},
                {"interaction", v.kind_name()},
                {"a_eff", a_eff},
                {"energy", st.energy},
                {"energy_per_particle", st.energy / N},
                {"residual", st.residual},
                {"converged", st.converged},
                {"matvecs", st.matvecs},
                {"krylov_dim", st.krylov_dim},
                {"symmetry_error", st.symmetry_error},
                {"gamma", checks_json(checks)},
                {"gp", {{"g", g}, {"energy", gp.state.energy.total}, {"converged", gp.converged}}},
                {"lambda_max_over_N", cond.lambda_max_over_N},
                {"overlap", cond.overlap},
                {"trace_distance", cond.trace_distance},
                {"momentum_l1_distance", cond.momentum_l1_distance}};
    write_json(cfg.output_dir / "report.json", report);

    if (!st.converged || !gp.converged) {
        std::cerr << "manybody: solver did not converge\n";
        return exit_code::resource_failure;
    }
    if (!checks.ok) {
        std::cerr << "manybody: density-matrix contract violated\n";
        return exit_code::assertion_failure;
    }
    return exit_code::pass;
}

// ---------------------------------------------------------------- sweep

namespace {

struct SweepRow {
    int N = 0;
    double a = 0.0, a_eff = 0.0, g = 0.0, g_row = 0.0;
    double e_qm = NAN, e_gp = NAN;
    double lambda = NAN, overlap = NAN, trace_distance = NAN;
    double r_loc = NAN, far_ratio = NAN, s_estimate = NAN, momentum_l1 = NAN;
    std::string status = "ok";
    double t_manybody = 0.0, t_diagnostics = 0.0;
};

// Soft sphere of the given radius whose lattice scattering length is a.
// Secant iteration in (1/U, 1/a_eff), where an on-site potential is exactly linear.
InteractionPotential calibrate_height(double radius, double start_height, double a, double h) {
    auto a_of = [&](double U) { return lattice_scattering_length(InteractionPotential::soft_sphere(U, radius), h).a_eff; };
    double u0 = start_height, a0 = a_of(u0);
    double u1 = u0 * a / a0, a1 = a_of(u1);
    for (int it = 0; it < 40; ++it) {
        if (std::abs(a1 - a) <= 1e-9 * a) return InteractionPotential::soft_sphere(u1, radius);
        const double slope = (1.0 / a1 - 1.0 / a0) / (1.0 / u1 - 1.0 / u0);
        const double inv_u = 1.0 / u1 + (1.0 / a - 1.0 / a1) / slope;
        if (!(inv_u > 0.0) || !std::isfinite(inv_u))
            throw InvalidArgument("lattice calibration: a = " + format_double(a) + " is not reachable at h = " +
                                  format_double(h));
        u0 = u1;
        a0 = a1;
        u1 = 1.0 / inv_u;
        a1 = a_of(u1);
    }
    throw ConvergenceError("lattice calibration did not converge");
}

SweepRow sweep_row(const ExperimentConfig& cfg, int N, double g, const GPResult& gp) {
    SweepRow row;
    row.N = N;
    row.g = g;
    const auto grid = grid_of(cfg.grid);
    const auto trap = trap_of(cfg.trap);
    try {
        row.a = g / (4.0 * pi * N);
        row.g_row = coupling_3d(N, row.a);
        auto v = InteractionPotential::zero();
        if (row.a > 0.0 && cfg.interaction.type != "zero") {
            const auto v1 = interaction_of(cfg.interaction);
            v = v1.scaled(row.a / scattering_length(v1));
            if (cfg.sweep.calibrate == "lattice") v = calibrate_height(v.range(), v.height(), row.a, grid.spacing());
        }
        row.a_eff = lattice_a_eff(v, grid.spacing());
        row.e_gp = gp.state.energy.total;

        auto t0 = std::chrono::steady_clock::now();
        const auto st = ground_state(N, grid, trap, v, mb_options(cfg));
        row.t_manybody = elapsed(t0);
        if (!st.converged) throw ConvergenceError("many-body solve did not converge");
        row.e_qm = st.energy / N;

        t0 = std::chrono::steady_clock::now();
        const auto gamma = reduced_density_matrix(st);
        const auto rho = momentum_density(gamma);
        const auto checks = check_gamma(gamma, rho);
        const auto cond = condensate_report(gamma, gp.state);
        row.lambda = cond.lambda_max_over_N;
        row.overlap = cond.overlap;
        row.trace_distance = cond.trace_distance;
        row.momentum_l1 = cond.momentum_l1_distance;
        row.r_loc = default_localization_radius(N);
        const auto loc = localization_diagnostic(st, gp.state, row.r_loc);
        row.far_ratio = loc.I_total > 0.0 ? loc.I_far / loc.I_total : 0.0;
        if (loc.s_estimate) row.s_estimate = *loc.s_estimate;
        row.t_diagnostics = elapsed(t0);

        bool ok = checks.ok && std::abs(row.g_row - g) <= 1e-12 * std::max(1.0, g);
        ok = ok && row.lambda <= 1.0 + 1e-12 && row.trace_distance >= 0.0 && row.trace_distance <= 2.0 + 1e-12;
        ok = ok && loc.I_far <= loc.I_total * (1.0 + 1e-12);
        if (g == 0.0) ok = ok && std::abs(row.lambda - 1.0) <= 1e-8;
        if (!ok) row.status = "assertion";
    } catch (const ResourceError& e) {
        row.status = "resource";
        std::cerr << "sweep row N=" << N << ": " << e.what() << "\n";
    } catch (const ConvergenceError& e) {
        row.status = "convergence";
        std::cerr << "sweep row N=" << N << ": " << e.what() << "\n";
    } catch (const std::exception& e) {
        row.status = "error";
        std::cerr << "sweep row N=" << N << ": " << e.what() << "\n";
    }
    return row;
}

}  // namespace

int run_sweep(const ExperimentConfig& cfg, int jobs) {
    const auto grid = grid_of(cfg.grid);
    const auto trap = trap_of(cfg.trap);
    const double g = *cfg.coupling->g;
    std::filesystem::create_directories(cfg.output_dir);

    const auto t0 = std::chrono::steady_clock::now();
    const auto gp = minimize_gp(trap, g, grid, gp_params(cfg));
    const double t_gp = elapsed(t0);
    if (!gp.converged) {
        std::cerr << "sweep: GP reference did not converge\n";
        return exit_code::resource_failure;
    }

    std::vector<std::function<SweepRow()>> tasks;
    for (int N : cfg.sweep.N) tasks.push_back([&, N] { return sweep_row(cfg, N, g, gp); });
    const auto rows = run_ordered(tasks, jobs);

    Csv csv({"N", "a", "a_eff", "a_eff_rel_error", "g", "g_row", "E_QM_per_N", "E_GP", "E_gap", "lambda_max_over_N",
             "overlap", "trace_distance", "r_loc", "I_far_over_I_total", "s_estimate", "momentum_l1_distance",
             "status"});
    Csv times({"N", "gp_seconds", "manybody_seconds", "diagnostics_seconds"});
    int code = exit_code::pass;
    for (const auto& r : rows) {
        const double rel = r.a > 0.0 ? (r.a_eff - r.a) / r.a : 0.0;
        std::vector<std::string> cells{std::to_string(r.N)};
        for (double x : {r.a, r.a_eff, rel, r.g, r.g_row, r.e_qm, r.e_gp, std::abs(r.e_qm - r.e_gp), r.lambda,
                         r.overlap, r.trace_distance, r.r_loc, r.far_ratio, r.s_estimate, r.momentum_l1})
            cells.push_back(format_double(x));
        cells.push_back(r.status);
        csv.row_strings(cells);
        times.row({double(r.N), t_gp, r.t_manybody, r.t_diagnostics});
        if (r.status == "assertion") code = exit_code::assertion_failure;
        else if (r.status != "ok" && code == exit_code::pass) code = exit_code::resource_failure;
    }
    write_text(cfg.output_dir / "sweep.csv", csv.text());
    write_text(cfg.output_dir / "sweep_runtimes.csv", times.text());
    return code;
}

// ---------------------------------------------------------------- props

namespace {

struct SampleRow {
    std::string suite, which;
    std::size_t index;
    std::string quantity;
    double value;
};

struct SuiteOutcome {
    std::string name;
    json report;
    std::vector<SampleRow> rows;
    bool pass = false;
};

std::mt19937_64 suite_rng(std::uint64_t seed, std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(salt)};
    return std::mt19937_64(seq);
}

SuiteOutcome suite_dyson(const ExperimentConfig& cfg) {
    SuiteOutcome out{"dyson", {}, {}, false};
    const double R0 = 0.1, R = 0.4, Rb = 0.5;
    const auto U = softened_potential(R0, R);

    // Closed form: ψ = 1 - R0/r outside the core gives lhs = 4πR0(1 - R0/Rb).
    RadialSamples exact;
    exact.r = radial_nodes({R0, R, Rb}, R0 / 100.0);
    for (double r : exact.r) exact.psi.push_back(r > R0 ? 1.0 - R0 / r : 0.0);
    const auto ref = dyson_check(InteractionPotential::hard_sphere(R0), U, exact, Rb);
    const double expected = 4.0 * pi * R0 * (1.0 - R0 / Rb);
    const double ref_err = std::abs(ref.lhs - expected) / expected;

    auto rng = suite_rng(cfg.seed, 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto nodes = exact.r;
    json per_potential = json::object();
    int total_violations = 0;
    const std::vector<std::pair<std::string, InteractionPotential>> potentials{
        {"hard_core", InteractionPotential::hard_sphere(R0)}, {"soft_sphere", InteractionPotential::soft_sphere(50.0, R0)}};
    for (const auto& [label, v] : potentials) {
        int violations = 0;
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < cfg.props.samples; ++t) {
            std::array<double, 5> c;
            for (auto& x : c) x = normal(rng);
            RadialSamples s{nodes, {}};
            for (double r : nodes) {
                double f = 1.0 + 0.5 * c[0];
                for (int j = 1; j < 5; ++j) f += c[j] * std::cos(j * pi * r / Rb) / (j + 1);
                s.psi.push_back(v.has_hard_core() ? f * std::max(0.0, 1.0 - R0 / r) : f);
            }
            const auto rep = dyson_check(v, U, s, Rb);
            violations += !rep.satisfied;
            if (rep.rhs > 0.0) worst = std::min(worst, rep.lhs / rep.rhs);
            out.rows.push_back({"dyson", label, t, "lhs", rep.lhs});
            out.rows.push_back({"dyson", label, t, "rhs", rep.rhs});
        }
        total_violations += violations;
        per_potential[label] = {{"samples", cfg.props.samples}, {"violations", violations},
                                {"min_lhs_over_rhs", worst}, {"a", scattering_length(v)}};
    }
    out.pass = total_violations == 0 && ref_err <= 5e-3;
    out.report = {{"R0", R0},
                  {"R", R},
                  {"R_ball", Rb},
                  {"slack", 0.01},
                  {"potentials", per_potential},
                  {"violations", total_violations},
                  {"closed_form", {{"lhs", ref.lhs}, {"expected", expected}, {"relative_error", ref_err}}},
                  {"pass", out.pass}};
    return out;
}

SuiteOutcome suite_poincare(const ExperimentConfig& cfg) {
    SuiteOutcome out{"poincare", {}, {}, false};
    const PoincareDomain K{PoincareDomain::Kind::cube, 1.0};
    const auto gp_grid = make_grid(8.0, cfg.props.poincare_gp_M, BoundaryCondition::dirichlet);
    GPParams params;
    params.residual_tol = cfg.solver.gp_tol;
    params.max_iters = cfg.solver.gp_max_iters;
    const auto gp = minimize_gp(TrapPotential::harmonic(), cfg.props.poincare_g, gp_grid, params);
    if (!gp.converged) throw ConvergenceError("poincare: GP weight did not converge");
    const auto target = make_grid(1.0, cfg.props.poincare_M, BoundaryCondition::neumann);
    const auto h = poincare_weight(gp.state.phi, target, K);

    const std::size_t n = cfg.props.poincare_samples;
    const auto doubled = poincare_probe(K, h, 2 * n, cfg.seed);
    const auto disc = poincare_probe(K, h, n, cfg.seed, OmegaFamily::disconnected);
    double c_half = 0.0;
    for (const auto& s : doubled.samples)
        if (s.index < n) c_half = std::max(c_half, s.ratio);
    const double change = std::abs(doubled.C_estimate - c_half) / c_half;
    const bool finite = std::isfinite(doubled.C_estimate) && doubled.C_estimate > 0.0;
    out.pass = finite && change < 0.2 && disc.C_estimate <= 2.0 * c_half;

    for (const auto& s : doubled.samples) out.rows.push_back({"poincare", "mixed", s.index, "ratio", s.ratio});
    for (const auto& s : disc.samples) out.rows.push_back({"poincare", "disconnected", s.index, "ratio", s.ratio});
    out.report = {{"samples", n},
                  {"C_estimate", c_half},
                  {"C_estimate_doubled", doubled.C_estimate},
                  {"relative_change", change},
                  {"C_estimate_disconnected", disc.C_estimate},
                  {"skipped", doubled.skipped + disc.skipped},
                  {"worst", {{"index", doubled.worst.index}, {"omega_kind", doubled.worst.omega_kind},
                             {"omega_fraction", doubled.worst.omega_fraction}, {"components", doubled.worst.components}}},
                  {"weight_g", cfg.props.poincare_g},
                  {"grid_M", cfg.props.poincare_M},
                  {"pass", out.pass}};
    return out;
}

SuiteOutcome suite_increment(const ExperimentConfig& cfg) {
    SuiteOutcome out{"increment", {}, {}, false};
    const int n = cfg.props.increment_n;
    const double L = 1.0, eps = 0.1, a = 0.01, R0 = 0.02, R = 0.1;
    const auto rep = verify_increment_bound(n, L, eps, a, softened_potential(R0, R), cfg.props.increment_M, 0.02,
                                            mb_options(cfg));
    const auto ref = box_lower_bound_reference(n + 1, L, a, eps);
    out.pass = rep.satisfied;
    out.rows.push_back({"increment", "box", 0, "e_n", rep.e_n});
    out.rows.push_back({"increment", "box", 0, "e_n1", rep.e_n1});
    out.report = {{"n", n},         {"L", L},           {"eps", eps},         {"a", a},
                  {"R0", R0},       {"R", R},           {"M", cfg.props.increment_M},
                  {"e_n", rep.e_n}, {"e_n1", rep.e_n1}, {"lhs", rep.lhs},     {"rhs", rep.rhs},
                  {"slack", 0.02},  {"satisfied", rep.satisfied},
                  {"reference", {{"leading_term", ref.leading_term}, {"Y", ref.Y},
                                 {"eps_condition_met", ref.eps_condition_met}}},
                  {"pass", out.pass}};
    return out;
}

SuiteOutcome suite_localization(const ExperimentConfig& cfg) {
    SuiteOutcome out{"localization", {}, {}, false};
    const auto grid = make_grid(6.0, cfg.props.localization_M, BoundaryCondition::dirichlet);
    const double h = grid.spacing();
    const auto trap = trap_of(cfg.trap);
    const auto v = InteractionPotential::hard_sphere(0.5 * h);
    const auto st = ground_state(2, grid, trap, v, mb_options(cfg));
    if (!st.converged) throw ConvergenceError("localization: many-body solve did not converge");
    const double a_eff = lattice_a_eff(v, h);
    const double g = coupling_3d(2, a_eff);
    GPParams params;
    params.residual_tol = 1e-10;
    params.max_iters = cfg.solver.gp_max_iters;
    const auto gp = minimize_gp(trap, g, grid, params);
    if (!gp.converged) throw ConvergenceError("localization: GP reference did not converge");

    const std::size_t S = grid.size();
    double recon = 0.0;
    for (std::size_t X = 0; X < S; ++X) {
        const auto f = conditional_factor(st, gp.state, {X});
        for (std::size_t x = 0; x < S; ++x)
            recon = std::max(recon, std::abs(f[x] * gp.state.phi[x] - st.psi[x + S * X]));
    }

    bool ok = recon <= 1e-12;
    double prev = std::numeric_limits<double>::infinity();
    json ladder = json::array();
    std::size_t k = 0;
    for (double m : {0.5, 1.0, 1.5, 2.0, 3.0}) {
        const auto d = localization_diagnostic(st, gp.state, m * h);
        const double s = d.s_estimate.value_or(NAN);
        ok = ok && d.I_far <= d.I_total * (1.0 + 1e-12) && d.I_far <= prev && s > 0.0 && s <= 1.5;
        prev = d.I_far;
        ladder.push_back({{"r_loc", d.r_loc}, {"I_far", d.I_far}, {"I_total", d.I_total}, {"s_estimate", s}});
        out.rows.push_back({"localization", "ladder", k, "r_loc", d.r_loc});
        out.rows.push_back({"localization", "ladder", k, "I_far", d.I_far});
        out.rows.push_back({"localization", "ladder", k, "I_total", d.I_total});
        ++k;
    }
    out.pass = ok;
    out.report = {{"grid", grid_json(grid)},
                  {"core_radius", 0.5 * h},
                  {"a_eff", a_eff},
                  {"g", g},
                  {"energy", st.energy},
                  {"reconstruction_error", recon},
                  {"ladder", ladder},
                  {"pass", out.pass}};
    return out;
}

}  // namespace

int run_props(const ExperimentConfig& cfg, int jobs) {
    std::filesystem::create_directories(cfg.output_dir);
    std::vector<std::function<SuiteOutcome()>> tasks;
    for (const auto& name : cfg.props.suites) {
        if (name == "dyson") tasks.push_back([&] { return suite_dyson(cfg); });
        else if (name == "poincare") tasks.push_back([&] { return suite_poincare(cfg); });
        else if (name == "increment") tasks.push_back([&] { return suite_increment(cfg); });
        else if (name == "localization") tasks.push_back([&] { return suite_localization(cfg); });
        else throw ConfigError("config field 'props.suites': unknown suite '" + name + "'");
    }
    const auto outcomes = run_ordered(tasks, jobs);

    json suites = json::object();
    bool pass = true;
    Csv csv({"suite", "case", "index", "quantity", "value"});
    for (const auto& o : outcomes) {
        suites[o.name] = o.report;
        pass = pass && o.pass;
        for (const auto& r : o.rows)
            csv.row_strings({r.suite, r.which, std::to_string(r.index), r.quantity, format_double(r.value)});
    }
    write_json(cfg.output_dir / "suite_report.json", {{"seed", cfg.seed}, {"suites", suites}, {"pass", pass}});
    write_text(cfg.output_dir / "samples.csv", csv.text());
    return pass ? exit_code::pass : exit_code::assertion_failure;
}

int run_experiment(const ExperimentConfig& cfg, int jobs) {
    try {
        switch (cfg.mode) {
            case Mode::gp: return run_gp(cfg);
            case Mode::manybody: return run_manybody(cfg);
            case Mode::sweep: return run_sweep(cfg, jobs);
            case Mode::props: return run_props(cfg, jobs);
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return exit_code::config_error;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return exit_code::config_error;
    } catch (const ResourceError& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return exit_code::resource_failure;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return exit_code::resource_failure;
    }
    return exit_code::config_error;
}

}  // namespace gplab
