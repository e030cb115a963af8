#pragma once

// Orchestrates one scenario: builds the system, runs the pipeline for the
// configured kind, writes CSV/JSON artifacts and a manifest with SHA-256
// content hashes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>
#include <nlohmann/json.hpp>

#include "mgt/mgt.hpp"
#include "scenario_config.hpp"

namespace mgt::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

struct Check {
    std::string name;
    bool passed;
    double value;
    double threshold;
};

struct RunOutcome {
    int status = 0; // 0 pass, 1 numeric check failed
    std::string message;
    std::vector<Check> checks;
    std::vector<std::string> files; // relative to the output directory
};

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw Error("cannot read " + p.string());
    return std::string(std::istreambuf_iterator<char>(is), {});
}

// JSON numbers for non-finite values would be invalid; store them as null.
inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

class RunContext {
public:
    RunContext(const ScenarioConfig& cfg) : cfg_(cfg), dir_(cfg.output) {
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }

    void csv(const std::string& name, const io::Table& t) {
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw Error("cannot write " + (dir_ / name).string());
        io::write_csv(os, t);
        add_file(name);
    }

    void text(const std::string& name, const std::function<void(std::ostream&)>& body) {
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw Error("cannot write " + (dir_ / name).string());
        body(os);
        add_file(name);
    }

    void check(std::string name, bool passed, double value, double threshold) {
        outcome.checks.push_back({std::move(name), passed, value, threshold});
    }

    template <class F>
    auto timed(const std::string& stage, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        auto result = f();
        timings_[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return result;
    }

    json report = json::object();
    RunOutcome outcome;

    void finish() {
        for (const auto& c : outcome.checks)
            if (!c.passed && outcome.status == 0) {
                outcome.status = 1;
                outcome.message = "check failed: " + c.name;
            }
        if (outcome.status == 0) outcome.message = "all checks passed";

        json checks = json::array();
        for (const auto& c : outcome.checks)
            checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", num(c.value)}, {"threshold", num(c.threshold)}});
        json full = {{"kind", cfg_.kind}, {"passed", outcome.status == 0}, {"checks", checks}, {"results", report}};
        text("report.json", [&](std::ostream& os) { os << full.dump(2) << '\n'; });

        json files = json::array();
        for (const auto& f : outcome.files) {
            const std::string bytes = slurp(dir_ / f);
            files.push_back({{"name", f}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
        }
        json config = json::object();
        for (const auto& info : config_schema()) config[info.key] = cfg_.raw.at(info.key);
        json timings = json::object();
        for (const auto& [k, v] : timings_) timings[k] = v;
        json manifest = {{"tool", "mgt"},
                         {"version", kVersion},
                         {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                       std::to_string(EIGEN_MINOR_VERSION)},
                         {"compiler", __VERSION__},
                         {"config", config},
                         {"timings_s", timings},
                         {"status", outcome.status},
                         {"files", files}};
        std::ofstream os(dir_ / "manifest.json", std::ios::binary);
        os << manifest.dump(2) << '\n';
    }

private:
    void add_file(const std::string& name) {
        if (std::find(outcome.files.begin(), outcome.files.end(), name) == outcome.files.end()) outcome.files.push_back(name);
    }

    const ScenarioConfig& cfg_;
    std::filesystem::path dir_;
    std::map<std::string, double> timings_;
};

namespace detail {

struct Setup {
    Mesh mesh;
    StateSystem sys;
};

inline Setup build(const ScenarioConfig& c) {
    Setup s;
    s.mesh = build_mesh(c.dimension, c.resolution, BoundarySelector::parse(c.gamma0));
    s.sys = assemble_system(assemble_fem(s.mesh), c.params);
    return s;
}

inline Vector initial_state(const Setup& s, const ScenarioConfig& c, std::mt19937_64& rng) {
    const auto& sys = s.sys;
    Vector y = Vector::Zero(sys.n_state);
    if (c.init == "kernel") {
        y.head(sys.n_nodes).setOnes();
    } else if (c.init == "random") {
        std::normal_distribution<double> normal;
        for (Index i = 0; i < y.size(); ++i) y(i) = normal(rng);
    } else if (c.init == "bump") {
        for (Index i = 0; i < sys.n_nodes; ++i) {
            double r2 = 0;
            for (Index d = 0; d < s.mesh.dimension; ++d) r2 += std::pow(s.mesh.nodes(i, d) - 0.5, 2);
            y(i) = std::exp(-r2 / (2 * 0.1 * 0.1));
        }
    }
    return y;
}

inline double step_for(const StateSystem& sys, const ScenarioConfig& c) { return c.dt > 0 ? c.dt : auto_dt(sys, c.T); }

inline ControlSignal make_control(const StateSystem& sys, const ScenarioConfig& c, double dt, std::mt19937_64& rng) {
    const Index nc = sys.n_control;
    const Index samples = std::max<Index>(2, static_cast<Index>(std::ceil(c.T / dt)) + 1);
    const double w = 2.0 * std::numbers::pi * c.frequency;
    if (c.control == "sine")
        return ControlSignal::from_function(
            nc, c.T, samples, [&](double t) { return Vector(Vector::Constant(nc, c.amplitude * std::sin(w * t))); },
            [&](double t) { return Vector(Vector::Constant(nc, c.amplitude * w * std::cos(w * t))); });
    if (c.control == "step") {
        Matrix v = Matrix::Zero(nc, 3);
        v.col(2).setConstant(c.amplitude);
        ControlSignal g = ControlSignal::sampled({0.0, 0.5 * c.T, c.T}, v);
        g.interpolation = Interpolation::step;
        return g;
    }
    if (c.control == "random_h1") {
        ControlSignal g = validation::random_h1_control(sys, c.T, samples, rng);
        g.values *= c.amplitude;
        *g.derivative *= c.amplitude;
        return g;
    }
    return ControlSignal::from_function(
        nc, c.T, samples, [&](double) { return Vector(Vector::Zero(nc)); }, [&](double) { return Vector(Vector::Zero(nc)); });
}

inline std::vector<double> col_to_vec(const Eigen::VectorXcd& v, bool real) {
    std::vector<double> out(v.size());
    for (Index i = 0; i < v.size(); ++i) out[i] = real ? v(i).real() : v(i).imag();
    return out;
}

inline RiccatiSolution riccati(RunContext& ctx, const StateSystem& sys, const ScenarioConfig& c) {
    RiccatiOptions opt;
    opt.rho_dt = c.rho_dt;
    auto ric = ctx.timed("riccati", [&] { return solve_dre(sys, c.T, opt); });
    ctx.csv("riccati_log.csv", io::riccati_log_table(ric));
    return ric;
}

inline json vec_json(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
    return a;
}

// Resolves the g0 option against a Riccati solution.
inline Vector choose_g0(RunContext& ctx, const StateSystem& sys, const RiccatiSolution& ric, const ScenarioConfig& c,
                        const Vector& y0) {
    if (c.g0 == "zero") return Vector::Zero(sys.n_control);
    if (c.g0 == "matched") {
        const auto m = match_g0(sys, ric, y0);
        ctx.report["matching"] = {{"convention", m.convention}, {"residual", num(m.residual)},
                                  {"alternative_residual", num(m.alternative_residual)}};
        return m.g0;
    }
    if (c.g0 == "optimized") {
        const auto o = optimize_g0(sys, ric, y0, c.radius);
        ctx.report["optimization"] = {{"classification", to_string(o.classification)}, {"radius", c.radius}};
        return o.g_star;
    }
    return Vector::Constant(sys.n_control, cli::detail::to_double("g0", c.g0));
}

} // namespace detail

inline void run_free(RunContext& ctx, const ScenarioConfig& c, const detail::Setup& s, std::mt19937_64& rng) {
    const auto& sys = s.sys;
    const Vector y0 = detail::initial_state(s, c, rng);
    const double dt = detail::step_for(sys, c);
    const auto tr = ctx.timed("propagate", [&] { return propagate_free(sys, y0, c.T, dt); });
    const auto energy = decaying_energy(sys, tr);
    std::vector<double> total(tr.n_times());
    for (Index k = 0; k < tr.n_times(); ++k) total[k] = y_norm(sys, tr.states.col(k));
    io::Table t;
    t.add("time", tr.times);
    t.add("energy", total);
    t.add("decaying_energy", energy);
    ctx.csv("energy.csv", t);
    ctx.csv("trajectory.csv", io::trajectory_table(tr, sys.n_nodes));
    const double gamma = c.params.gamma();
    ctx.report["gamma"] = gamma;
    ctx.report["dt"] = dt;
    const bool nontrivial = energy.front() > 0;
    ctx.report["fitted_rate"] = nontrivial ? num(fitted_decay_rate(tr.times, energy, 0.25 * c.T)) : num(0.0);
    if (nontrivial && gamma > 0) {
        const double rate = fitted_decay_rate(tr.times, energy, 0.25 * c.T);
        ctx.check("fitted decay rate < 0 for gamma > 0", rate < 0, rate, 0);
    }
}

inline void run_controlled(RunContext& ctx, const ScenarioConfig& c, const detail::Setup& s, std::mt19937_64& rng,
                           bool smooth) {
    const auto& sys = s.sys;
    const Vector y0 = detail::initial_state(s, c, rng);
    const double dt = detail::step_for(sys, c);
    ControlSignal g = detail::make_control(sys, c, dt, rng);
    ctx.csv("control.csv", io::control_table(g));
    ctx.report["dt"] = dt;
    if (smooth) {
        const auto a = ctx.timed("ode_smooth", [&] { return propagate_smooth_control(sys, y0, g, dt); });
        const auto b = ctx.timed("mild_L2", [&] { return propagate_L2_control(sys, y0, g, dt); });
        const double gap = max_gap(a, b);
        ctx.report["formulation_gap"] = num(gap);
        ctx.csv("trajectory.csv", io::trajectory_table(a, sys.n_nodes));
        ctx.csv("trajectory_mild.csv", io::trajectory_table(b, sys.n_nodes));
        // Gap should sit at integrator level relative to the state size.
        const double scale = std::max(1.0, a.states.cwiseAbs().maxCoeff());
        ctx.check("formulation gap", gap <= 1e-3 * scale, gap, 1e-3 * scale);
    } else {
        g.derivative.reset();
        const auto run = ctx.timed("mild_L2", [&] { return propagate_L2_control_detail(sys, y0, g, dt); });
        ctx.csv("trajectory.csv", io::trajectory_table(run.y, sys.n_nodes));
        ctx.csv("w_trajectory.csv", io::trajectory_table(run.w, sys.n_nodes));
        double w_jump = 0;
        for (Index k = 1; k < run.w.n_times(); ++k)
            w_jump = std::max(w_jump, (run.w.states.col(k) - run.w.states.col(k - 1)).cwiseAbs().maxCoeff());
        ctx.report["max_w_increment"] = num(w_jump);
        ctx.check("trajectory finite", run.y.states.allFinite(), 0, 0);
    }
}

inline void run_spectrum(RunContext& ctx, const ScenarioConfig& c, const detail::Setup& s) {
    const auto rep = ctx.timed("spectrum", [&] { return spectrum(s.sys); });
    io::Table t;
    std::vector<double> re, im;
    for (const auto& e : rep.eigenvalues) {
        re.push_back(e.real());
        im.push_back(e.imag());
    }
    t.add("re", re);
    t.add("im", im);
    ctx.csv("eigenvalues.csv", t);
    const double gamma = c.params.gamma();
    ctx.report["gamma"] = gamma;
    ctx.report["abscissa"] = num(rep.abscissa);
    ctx.report["spectral_radius"] = num(rep.spectral_radius);
    ctx.report["kernel_eigenvalue"] = {num(rep.kernel_eigenvalue.real()), num(rep.kernel_eigenvalue.imag())};
    ctx.report["kernel_residual"] = num(rep.kernel_residual);
    ctx.report["stable"] = rep.stable();
    if (gamma > 0) ctx.check("abscissa < 0 for gamma > 0", rep.abscissa < 0, rep.abscissa, 0);
    if (gamma < 0) ctx.check("unstable eigenvalue for gamma < 0", rep.abscissa > 0, rep.abscissa, 0);
}

inline void run_dre(RunContext& ctx, const ScenarioConfig& c, const detail::Setup& s) {
    const auto& sys = s.sys;
    const auto ric = detail::riccati(ctx, sys, c);
    double res = 0, min_sv = std::numeric_limits<double>::infinity(), max_cond = 0;
    for (Index k = 0; k < ric.size(); ++k) {
        res = std::max(res, ric.residual_log[k]);
        min_sv = std::min(min_sv, ric.G_min_sv[k]);
        max_cond = std::max(max_cond, ric.G_cond[k]);
    }
    const bool terminal_zero = (ric.pi.back().array() == 0.0).all();
    ctx.report["dt"] = ric.dt;
    ctx.report["stored_times"] = ric.size();
    ctx.report["max_symmetry_drift"] = num(ric.max_symmetry_drift);
    ctx.report["max_residual"] = num(res);
    ctx.report["max_G_condition"] = num(max_cond);
    ctx.report["min_G_singular_value"] = num(min_sv);
    ctx.check("P(T) = 0", terminal_zero, 0, 0);
    ctx.check("symmetry drift", ric.max_symmetry_drift <= validation::tol::symmetry_drift, ric.max_symmetry_drift,
              validation::tol::symmetry_drift);
    ctx.check("Riccati residual", res <= validation::tol::re_residual, res, validation::tol::re_residual);
    ctx.check("G condition finite", std::isfinite(max_cond), max_cond, 0);
    if (c.dump_p) {
        for (Index k = 0; k < ric.size(); ++k) {
            std::ostringstream name;
            name << "P_" << std::setw(5) << std::setfill('0') << k << ".txt";
            ctx.text(name.str(), [&](std::ostream& os) {
                io::write_triplets(os, riccati_operator(sys, ric, k), "P(t) at t = " + io::fmt(ric.times[k]));
            });
        }
    }
}

inline void run_closed_loop(RunContext& ctx, const ScenarioConfig& c, const detail::Setup& s, std::mt19937_64& rng) {
    const auto& sys = s.sys;
    const Vector y0 = detail::initial_state(s, c, rng);
    const auto ric = detail::riccati(ctx, sys, c);
    const Vector g0 = detail::choose_g0(ctx, sys, ric, c, y0);
    const auto run = ctx.timed("closed_loop", [&] { return closed_loop(sys, ric, y0, g0); });
    ctx.csv("closed_loop.csv", io::closed_loop_table(sys, run));
    ctx.csv("control.csv", io::control_table(run.control));
    ctx.csv("trajectory.csv", io::trajectory_table(run.trajectory, sys.n_nodes));
    const double value = riccati_cost(ric, 0, run.alpha);
    ctx.report["g0"] = detail::vec_json(g0);
    ctx.report["cost"] = num(run.cost);
    ctx.report["riccati_cost"] = num(value);
    ctx.report["consistency_gap"] = num(run.consistency_gap);
    ctx.report["max_control_norm"] = num(run.max_control_norm);
    ctx.report["max_control_jump"] = num(run.max_control_jump);
    const double rel = value > 0 ? std::abs(run.cost - value) / value : std::abs(run.cost);
    ctx.check("closed-loop cost vs (P(0)alpha, alpha)", rel <= validation::tol::cost_identity, rel,
              validation::tol::cost_identity);
    ctx.check("synthesis consistency", run.consistent(), run.consistency_gap,
              validation::tol::consistency * run.max_control_norm);
}

inline void run_oracle(RunContext& ctx, const ScenarioConfig& c, const detail::Setup& s, std::mt19937_64& rng) {
    const auto& sys = s.sys;
    LQProblem p;
    p.y0 = detail::initial_state(s, c, rng);
    p.g0 = c.g0 == "zero" ? Vector::Zero(sys.n_control)
                          : Vector::Constant(sys.n_control, c.g0 == "matched" || c.g0 == "optimized"
                                                                 ? 0.0
                                                                 : cli::detail::to_double("g0", c.g0));
    p.horizon = c.T;
    p.nt = c.nt;
    p.substeps = c.substeps;
    const auto sol = ctx.timed("oracle", [&] { return solve_open_loop(sys, p); });
    ctx.csv("control.csv", io::control_table(sol.g_opt));
    ctx.csv("trajectory.csv", io::trajectory_table(sol.trajectory, sys.n_nodes));
    ctx.report["cost"] = num(sol.cost);
    ctx.report["cost_recomputed"] = num(sol.cost_check);
    ctx.report["normal_residual"] = num(sol.normal_residual);
    ctx.report["condition_estimate"] = num(sol.condition_estimate);
    ctx.report["substeps"] = sol.substeps;
    if (sol.warning) ctx.report["warning"] = *sol.warning;
    ctx.check("normal-equation residual", sol.normal_residual <= sol.gradient_bound, sol.normal_residual,
              sol.gradient_bound);
    const auto ric = detail::riccati(ctx, sys, c);
    const double value = riccati_cost(ric, 0, p.y0 - sys.B1 * p.g0);
    const auto run = ctx.timed("closed_loop", [&] { return closed_loop(sys, ric, p.y0, p.g0); });
    ctx.report["riccati_cost"] = num(value);
    ctx.report["closed_loop_cost"] = num(run.cost);
    const double denom = std::max(sol.cost, 1e-300);
    const double rel = std::abs(value - sol.cost) / denom;
    const double rel_cl = std::abs(run.cost - sol.cost) / denom;
    ctx.report["relative_gap_riccati"] = num(rel);
    ctx.report["relative_gap_closed_loop"] = num(rel_cl);
    if (sol.cost > 0) {
        ctx.check("Riccati-oracle cost identity", rel <= validation::tol::cost_identity, rel, validation::tol::cost_identity);
        ctx.check("closed loop vs oracle", rel_cl <= validation::tol::closed_loop_cost, rel_cl,
                  validation::tol::closed_loop_cost);
    }
}

inline void run_nonexistence(RunContext& ctx, const ScenarioConfig& c, const detail::Setup& s) {
    const auto& sys = s.sys;
    const Vector v = Vector::Constant(sys.n_control, c.v);
    const Index nt = std::max<Index>(c.nt, 256);
    const auto res = ctx.timed("nonexistence", [&] { return nonexistence_demo(sys, v, c.n_max, c.T, nt, c.substeps); });
    io::Table t;
    std::vector<double> n(res.n.begin(), res.n.end());
    t.add("n", n);
    t.add("cost", res.costs);
    t.add("cost_zero", std::vector<double>(res.costs.size(), res.cost_zero));
    ctx.csv("nonexistence.csv", t);
    ctx.report["cost_zero"] = num(res.cost_zero);
    ctx.report["cost_last"] = num(res.costs.back());
    ctx.report["nt"] = nt;
    if (c.v != 0) {
        ctx.check("J(0) > 0", res.cost_zero > 0, res.cost_zero, 0);
        ctx.check("J(g_n) below J(0)", res.costs.back() < res.cost_zero, res.costs.back(), res.cost_zero);
    }
}

inline void run_match(RunContext& ctx, const ScenarioConfig& c, const detail::Setup& s, std::mt19937_64& rng) {
    const auto& sys = s.sys;
    const Vector y0 = detail::initial_state(s, c, rng);
    const auto ric = detail::riccati(ctx, sys, c);
    const auto m = match_g0(sys, ric, y0);
    const auto run = ctx.timed("closed_loop", [&] { return closed_loop(sys, ric, y0, m.g0); });
    const double miss = u_norm(sys, Vector(run.control.values.col(0) - m.g0));
    const double bound = validation::tol::matching * (1.0 + u_norm(sys, m.g0));
    ctx.csv("closed_loop.csv", io::closed_loop_table(sys, run));
    ctx.report["g0"] = detail::vec_json(m.g0);
    ctx.report["convention"] = m.convention;
    ctx.report["matching_residual"] = num(miss);
    ctx.report["alternative_residual"] = num(m.alternative_residual);
    ctx.report["G0_condition"] = num(m.G_condition);
    ctx.report["cost"] = num(run.cost);
    ctx.check("g(0) = g0", miss <= bound, miss, bound);
}

inline void run_optimize(RunContext& ctx, const ScenarioConfig& c, const detail::Setup& s, std::mt19937_64& rng) {
    const auto& sys = s.sys;
    const Vector y0 = detail::initial_state(s, c, rng);
    const auto ric = detail::riccati(ctx, sys, c);
    const auto o = optimize_g0(sys, ric, y0, c.radius);
    const auto m = match_g0(sys, ric, y0);
    const double jo = closed_loop(sys, ric, y0, o.g_star).cost;
    const double jm = closed_loop(sys, ric, y0, m.g0).cost;
    ctx.report["g_star"] = detail::vec_json(o.g_star);
    ctx.report["classification"] = to_string(o.classification);
    ctx.report["value"] = num(o.value);
    ctx.report["stationarity_residual"] = num(o.stationarity_residual);
    ctx.report["norm"] = num(o.norm);
    ctx.report["radius"] = c.radius;
    ctx.report["unconstrained_norm"] = num(o.unconstrained_norm);
    ctx.report["closed_loop_cost_optimized"] = num(jo);
    ctx.report["closed_loop_cost_matched"] = num(jm);
    if (o.classification == G0Class::interior_stationary)
        ctx.check("kernel characterization", o.stationarity_residual <= validation::tol::kernel_characterization,
                  o.stationarity_residual, validation::tol::kernel_characterization);
    else
        ctx.check("boundary norm", std::abs(o.norm - c.radius) <= validation::tol::boundary_norm,
                  std::abs(o.norm - c.radius), validation::tol::boundary_norm);
    if (u_norm(sys, m.g0) <= c.radius)
        ctx.check("matched cost >= optimized cost", jm >= jo - validation::tol::ordering, jm - jo, -validation::tol::ordering);
}

inline void run_full_validation(RunContext& ctx, const ScenarioConfig& c) {
    io::Table t;
    std::vector<double> id, passed, measured, threshold;
    json rows = json::array();
    for (const auto& check : validation::all_criteria(static_cast<std::uint64_t>(c.seed) - 1)) {
        const auto r = check();
        std::cout << validation::summary_line(r) << std::endl;
        id.push_back(r.id);
        passed.push_back(r.passed ? 1 : 0);
        measured.push_back(r.measured);
        threshold.push_back(r.threshold);
        rows.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"measured", num(r.measured)},
                        {"threshold", num(r.threshold)}, {"seconds", num(r.seconds)}, {"budget", r.budget},
                        {"detail", r.detail}});
        ctx.check("criterion " + std::to_string(r.id) + " (" + r.name + ")", r.passed, r.measured, r.threshold);
    }
    t.add("criterion", id);
    t.add("passed", passed);
    t.add("measured", measured);
    t.add("threshold", threshold);
    ctx.csv("validation.csv", t);
    ctx.report["criteria"] = rows;
}

// Runs one scenario. Configuration errors surface as ConfigError (exit 2);
// module errors propagate with context.
inline RunOutcome run_scenario(const ScenarioConfig& c) {
    RunContext ctx(c);
    std::mt19937_64 rng(static_cast<std::uint64_t>(c.seed));
    if (c.kind == "full_validation") {
        run_full_validation(ctx, c);
    } else {
        const auto setup = ctx.timed("assemble", [&] { return detail::build(c); });
        ctx.report["n_nodes"] = setup.sys.n_nodes;
        ctx.report["n_state"] = setup.sys.n_state;
        ctx.report["n_control"] = setup.sys.n_control;
        if (c.kind == "free") run_free(ctx, c, setup, rng);
        else if (c.kind == "smooth_control") run_controlled(ctx, c, setup, rng, true);
        else if (c.kind == "L2_control") run_controlled(ctx, c, setup, rng, false);
        else if (c.kind == "spectrum") run_spectrum(ctx, c, setup);
        else if (c.kind == "dre") run_dre(ctx, c, setup);
        else if (c.kind == "closed_loop") run_closed_loop(ctx, c, setup, rng);
        else if (c.kind == "oracle") run_oracle(ctx, c, setup, rng);
        else if (c.kind == "nonexistence") run_nonexistence(ctx, c, setup);
        else if (c.kind == "match_g0") run_match(ctx, c, setup, rng);
        else if (c.kind == "optimize_g0") run_optimize(ctx, c, setup, rng);
    }
    ctx.text("config.txt", [&](std::ostream& os) { os << echo(c); });
    ctx.finish();
    return ctx.outcome;
}

} // namespace mgt::cli
