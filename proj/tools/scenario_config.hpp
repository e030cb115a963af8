#pragma once

// Scenario configuration: a key = value text file, '#' starts a comment.
// Every key has a default; the defaults are the reference scenario
// (1D, n = 64, tau = 1, alpha = 2, c = 1, b = 1, T = 2, dt automatic).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mgt/error.hpp"
#include "mgt/mesh_fem.hpp"
#include "mgt/state_space.hpp"

namespace mgt::cli {

// Bad configuration or usage; maps to exit status 2.
struct ConfigError : Error {
    using Error::Error;
};

inline const std::vector<std::string>& scenario_kinds() {
    static const std::vector<std::string> kinds = {"free",         "smooth_control", "L2_control", "spectrum",
                                                   "dre",          "closed_loop",    "oracle",     "nonexistence",
                                                   "match_g0",     "optimize_g0",    "full_validation"};
    return kinds;
}

struct KeyInfo {
    std::string key;
    std::string fallback;
    std::string help;
};

// Documented schema, in file order.
inline const std::vector<KeyInfo>& config_schema() {
    static const std::vector<KeyInfo> schema = {
        {"kind", "free", "scenario kind"},
        {"dimension", "1", "spatial dimension, 1 or 2"},
        {"resolution", "64", "elements per side, >= 2"},
        {"gamma0", "left", "controlled boundary sides, e.g. left or left+bottom"},
        {"tau", "1", "thermal relaxation time, > 0"},
        {"alpha", "2", "damping coefficient"},
        {"c", "1", "sound speed, > 0"},
        {"b", "1", "diffusivity of sound, > 0"},
        {"T", "2", "horizon, > 0"},
        {"dt", "0", "time step, >= 0 (0 = automatic)"},
        {"nt", "64", "control knots for the oracle, >= 2"},
        {"seed", "1", "seed for random probes, >= 0"},
        {"output", "out", "output directory"},
        {"init", "bump", "initial state: zero, bump, random, kernel"},
        {"control", "sine", "control: zero, sine, step, random_h1"},
        {"amplitude", "1", "control amplitude"},
        {"frequency", "1", "control frequency in Hz, > 0"},
        {"g0", "zero", "parameter g0: zero, matched, optimized, or a number"},
        {"radius", "1", "ball radius for optimize_g0, > 0"},
        {"v", "1", "boundary value for the non-existence demo"},
        {"n_max", "64", "largest n for the non-existence demo, >= 1"},
        {"substeps", "0", "oracle integration steps per knot interval, >= 0 (0 = automatic)"},
        {"rho_dt", "0.5", "Riccati step bound rho(A) * dt, > 0"},
        {"dump_p", "false", "write P(t) snapshots in triplet format"},
    };
    return schema;
}

struct ScenarioConfig {
    std::string kind = "free";
    int dimension = 1;
    Index resolution = 64;
    std::string gamma0 = "left";
    PhysicalParams params;
    double T = 2;
    double dt = 0;
    Index nt = 64;
    long long seed = 1;
    std::string output = "out";
    std::string init = "bump";
    std::string control = "sine";
    double amplitude = 1;
    double frequency = 1;
    std::string g0 = "zero";
    double radius = 1;
    double v = 1;
    Index n_max = 64;
    Index substeps = 0;
    double rho_dt = 0.5;
    bool dump_p = false;

    // Raw key/value pairs after defaulting, in schema order.
    std::map<std::string, std::string> raw;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    double x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x))
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    return x;
}

inline long long to_int(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

inline void check(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError("config key '" + key + "': " + what);
}

inline bool one_of(const std::string& v, std::initializer_list<const char*> options) {
    return std::any_of(options.begin(), options.end(), [&](const char* o) { return v == o; });
}

} // namespace detail

inline std::map<std::string, std::string> parse_key_values(std::istream& is, const std::string& origin = "config") {
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        out[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    return out;
}

inline std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    return parse_key_values(is, path);
}

// Fills defaults, parses and validates. Unknown keys are rejected.
inline ScenarioConfig make_config(const std::map<std::string, std::string>& given) {
    for (const auto& [k, v] : given) {
        const auto& schema = config_schema();
        if (std::none_of(schema.begin(), schema.end(), [&](const KeyInfo& i) { return i.key == k; }))
            throw ConfigError("unknown config key '" + k + "'");
    }
    ScenarioConfig c;
    for (const auto& info : config_schema()) {
        const auto it = given.find(info.key);
        c.raw[info.key] = it != given.end() ? it->second : info.fallback;
    }
    const auto& r = c.raw;
    using namespace detail;

    c.kind = r.at("kind");
    check(std::find(scenario_kinds().begin(), scenario_kinds().end(), c.kind) != scenario_kinds().end(), "kind",
          "unknown scenario kind '" + c.kind + "'");
    c.dimension = static_cast<int>(to_int("dimension", r.at("dimension")));
    check(c.dimension == 1 || c.dimension == 2, "dimension", "must be 1 or 2");
    c.resolution = to_int("resolution", r.at("resolution"));
    check(c.resolution >= 2, "resolution", "must be at least 2");
    c.gamma0 = r.at("gamma0");
    try {
        (void)BoundarySelector::parse(c.gamma0);
    } catch (const Error& e) {
        throw ConfigError(std::string("config key 'gamma0': ") + e.what());
    }
    c.params.tau = to_double("tau", r.at("tau"));
    c.params.alpha = to_double("alpha", r.at("alpha"));
    c.params.c = to_double("c", r.at("c"));
    c.params.b = to_double("b", r.at("b"));
    check(c.params.tau > 0, "tau", "must be positive");
    check(c.params.c > 0, "c", "must be positive");
    check(c.params.b > 0, "b", "must be positive");
    c.T = to_double("T", r.at("T"));
    check(c.T > 0, "T", "must be positive");
    c.dt = to_double("dt", r.at("dt"));
    check(c.dt >= 0, "dt", "must be non-negative (0 selects the step automatically)");
    check(c.dt <= c.T, "dt", "must not exceed the horizon T");
    c.nt = to_int("nt", r.at("nt"));
    check(c.nt >= 2, "nt", "must be at least 2");
    c.seed = to_int("seed", r.at("seed"));
    check(c.seed >= 0, "seed", "must be non-negative");
    c.output = r.at("output");
    check(!c.output.empty(), "output", "must not be empty");
    c.init = r.at("init");
    check(one_of(c.init, {"zero", "bump", "random", "kernel"}), "init", "must be zero, bump, random or kernel");
    c.control = r.at("control");
    check(one_of(c.control, {"zero", "sine", "step", "random_h1"}), "control",
          "must be zero, sine, step or random_h1");
    c.amplitude = to_double("amplitude", r.at("amplitude"));
    c.frequency = to_double("frequency", r.at("frequency"));
    check(c.frequency > 0, "frequency", "must be positive");
    c.g0 = r.at("g0");
    if (!one_of(c.g0, {"zero", "matched", "optimized"})) (void)to_double("g0", c.g0);
    c.radius = to_double("radius", r.at("radius"));
    check(c.radius > 0, "radius", "must be positive");
    c.v = to_double("v", r.at("v"));
    c.n_max = to_int("n_max", r.at("n_max"));
    check(c.n_max >= 1, "n_max", "must be at least 1");
    c.substeps = to_int("substeps", r.at("substeps"));
    check(c.substeps >= 0, "substeps", "must be non-negative");
    c.rho_dt = to_double("rho_dt", r.at("rho_dt"));
    check(c.rho_dt > 0, "rho_dt", "must be positive");
    c.dump_p = to_bool("dump_p", r.at("dump_p"));
    return c;
}

// Canonical text form of a configuration (all keys, schema order).
inline std::string echo(const ScenarioConfig& c) {
    std::ostringstream os;
    for (const auto& info : config_schema()) os << info.key << " = " << c.raw.at(info.key) << '\n';
    return os.str();
}

} // namespace mgt::cli
