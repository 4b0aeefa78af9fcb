#ifndef CASCADE_CONFIG_HPP
#define CASCADE_CONFIG_HPP

#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cascade/applications.hpp"
#include "cascade/chain.hpp"
#include "cascade/errors.hpp"
#include "cascade/fields.hpp"
#include "cascade/solver.hpp"

namespace cascade
{

using json = nlohmann::json;

struct ApplicationConfig
{
    std::string name;
    applications::OscillatorSpec oscillator;
    std::map<std::string, double> parameters;
};

struct ThermalConfig
{
    double temperature = 0.0;
    bool additive = false;
};

// Fully resolved run configuration.
struct RunConfig
{
    ChainConfig chain;
    PulseParams pulse;
    std::optional<TimeGrid> grid;
    SolverOptions solver;
    double n_shots = 1.0;
    std::optional<ApplicationConfig> application;
    std::optional<ThermalConfig> thermal;
};

namespace detail
{

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) throw ConfigError(path + " must be an object", path);
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) {
            const std::string full = path.empty() ? key : path + "." + key;
            throw ConfigError("unknown key '" + full + "'", full);
        }
    }
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline double number(const json& obj, const std::string& path, const char* key, std::optional<double> fallback)
{
    const std::string full = join(path, key);
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("missing required key '" + full + "'", full);
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError("'" + full + "' must be a number", full);
    return v.get<double>();
}

inline bool boolean(const json& obj, const std::string& path, const char* key, bool fallback)
{
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError("'" + join(path, key) + "' must be true or false", join(path, key));
    return v.get<bool>();
}

inline CavityParams parse_cavity(const json& j, const std::string& path)
{
    reject_unknown(j, path, {"kappa", "delta", "g"});
    CavityParams c{number(j, path, "kappa", std::nullopt), number(j, path, "delta", 0.0), number(j, path, "g", 0.0)};
    c.validate(path);
    return c;
}

inline MechanicalSignal parse_signal(const json& j, const std::string& path)
{
    reject_unknown(j, path, {"variant", "params", "theta"});
    if (!j.contains("variant") || !j.at("variant").is_string())
        throw ConfigError("'" + join(path, "variant") + "' must name a signal variant", join(path, "variant"));
    const auto variant = j.at("variant").get<std::string>();
    const json params = j.value("params", json::object());
    const std::string pp = join(path, "params");
    MechanicalSignal s;
    s.theta_scale = number(j, path, "theta", 1.0);
    if (variant == "constant") {
        reject_unknown(params, pp, {"q0"});
        s.shape = Constant{number(params, pp, "q0", std::nullopt)};
    } else if (variant == "harmonic_burst") {
        reject_unknown(params, pp, {"amplitude", "omega_m", "envelope_width", "phase"});
        s.shape = HarmonicBurst{number(params, pp, "amplitude", std::nullopt), number(params, pp, "omega_m", std::nullopt),
                                number(params, pp, "envelope_width", std::nullopt), number(params, pp, "phase", 0.0)};
    } else if (variant == "continuous_harmonic") {
        reject_unknown(params, pp, {"amplitude", "omega_m", "phase"});
        s.shape = ContinuousHarmonic{number(params, pp, "amplitude", std::nullopt),
                                     number(params, pp, "omega_m", std::nullopt), number(params, pp, "phase", 0.0)};
    } else if (variant == "sampled") {
        reject_unknown(params, pp, {"t_start", "dt", "values"});
        const auto& vals = params.contains("values") ? params.at("values") : json();
        if (!vals.is_array() || vals.size() < 2)
            throw ConfigError("'" + join(pp, "values") + "' must list at least two samples", join(pp, "values"));
        std::vector<cplx> v;
        for (const auto& x : vals) {
            if (!x.is_number()) throw ConfigError("sampled values must be numbers", join(pp, "values"));
            v.emplace_back(x.get<double>(), 0.0);
        }
        TimeGrid g{number(params, pp, "t_start", std::nullopt), number(params, pp, "dt", std::nullopt), v.size()};
        try {
            s.shape = Sampled{TimeField(g, std::move(v))};
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("sampled signal: ") + e.what(), pp);
        }
    } else {
        throw ConfigError("unknown signal variant '" + variant + "'", join(path, "variant"));
    }
    s.validate(path);
    return s;
}

} // namespace detail

inline RunConfig parse_config(const json& root)
{
    using namespace detail;
    reject_unknown(root, "", {"cavities", "signals", "delay_T", "eta", "omega_L", "pulse", "grid", "solver",
                              "metrology", "application", "thermal"});
    RunConfig rc;
    if (!root.contains("cavities") || !root.at("cavities").is_array() || root.at("cavities").empty())
        throw ConfigError("'cavities' must be a non-empty list", "cavities");
    if (!root.contains("signals") || !root.at("signals").is_array())
        throw ConfigError("'signals' must be a list", "signals");
    const auto& cav = root.at("cavities");
    const auto& sig = root.at("signals");
    for (std::size_t i = 0; i < cav.size(); ++i)
        rc.chain.cavities.push_back(parse_cavity(cav[i], "cavities[" + std::to_string(i) + "]"));
    for (std::size_t i = 0; i < sig.size(); ++i)
        rc.chain.signals.push_back(parse_signal(sig[i], "signals[" + std::to_string(i) + "]"));
    rc.chain.delay_T = number(root, "", "delay_T", 0.0);
    rc.chain.eta = number(root, "", "eta", 1.0);
    rc.chain.omega_L = number(root, "", "omega_L", 0.0);
    rc.chain.validate();

    if (!root.contains("pulse")) throw ConfigError("missing required key 'pulse'", "pulse");
    const auto& p = root.at("pulse");
    reject_unknown(p, "pulse", {"beta_bar", "tau", "n_in"});
    rc.pulse.tau = number(p, "pulse", "tau", std::nullopt);
    if (p.contains("beta_bar") && p.contains("n_in"))
        throw ConfigError("give either pulse.beta_bar or pulse.n_in, not both", "pulse.n_in");
    if (p.contains("n_in")) {
        const double n_in = number(p, "pulse", "n_in", std::nullopt);
        if (!(n_in >= 0.0) || !(rc.pulse.tau > 0.0)) throw ConfigError("pulse.n_in must be >= 0", "pulse.n_in");
        rc.pulse.beta_bar = beta_bar_for_photons(n_in, rc.pulse.tau);
    } else {
        rc.pulse.beta_bar = number(p, "pulse", "beta_bar", std::nullopt);
    }
    rc.pulse.validate();

    if (root.contains("grid")) {
        const auto& g = root.at("grid");
        reject_unknown(g, "grid", {"dt", "n_points", "t_start"});
        const double dt = number(g, "grid", "dt", std::nullopt);
        const double n = number(g, "grid", "n_points", std::nullopt);
        if (!(n >= 2.0) || n != std::floor(n)) throw ConfigError("grid.n_points must be an integer >= 2", "grid.n_points");
        if (!(dt > 0.0)) throw ConfigError("grid.dt must be > 0", "grid.dt");
        TimeGrid tg = centered_time_grid(dt, static_cast<std::size_t>(n));
        tg.t_start = number(g, "grid", "t_start", tg.t_start);
        rc.grid = tg;
    }
    if (root.contains("solver")) {
        const auto& s = root.at("solver");
        reject_unknown(s, "solver", {"memory_cutoff", "rel_tolerance", "check_convergence"});
        rc.solver.memory_cutoff = number(s, "solver", "memory_cutoff", rc.solver.memory_cutoff);
        rc.solver.rel_tolerance = number(s, "solver", "rel_tolerance", rc.solver.rel_tolerance);
        rc.solver.check_convergence = boolean(s, "solver", "check_convergence", false);
        rc.solver.validate();
    }
    if (root.contains("metrology")) {
        const auto& m = root.at("metrology");
        reject_unknown(m, "metrology", {"n_shots"});
        rc.n_shots = number(m, "metrology", "n_shots", 1.0);
        if (!(rc.n_shots >= 1.0)) throw ConfigError("metrology.n_shots must be >= 1", "metrology.n_shots");
    }
    if (root.contains("thermal")) {
        const auto& t = root.at("thermal");
        reject_unknown(t, "thermal", {"temperature", "additive"});
        rc.thermal = ThermalConfig{number(t, "thermal", "temperature", 0.0), boolean(t, "thermal", "additive", false)};
        if (!(rc.thermal->temperature >= 0.0))
            throw ConfigError("thermal.temperature must be >= 0", "thermal.temperature");
    }
    if (root.contains("application")) {
        const auto& a = root.at("application");
        if (!a.is_object() || !a.contains("name") || !a.at("name").is_string())
            throw ConfigError("'application.name' must name a preset", "application.name");
        auto pre = applications::preset(a.at("name").get<std::string>());
        ApplicationConfig app{pre.name, pre.oscillator, pre.parameters};
        for (const auto& [key, value] : a.items()) {
            if (key == "name") continue;
            const std::string full = "application." + key;
            if (!value.is_number()) throw ConfigError("'" + full + "' must be a number", full);
            const double v = value.get<double>();
            if (key == "mass") app.oscillator.mass = v;
            else if (key == "omega_m") app.oscillator.omega_m = v;
            else if (key == "damping_ratio") app.oscillator.damping_ratio = v;
            else if (app.parameters.count(key) != 0) app.parameters[key] = v;
            else throw ConfigError("unknown key '" + full + "'", full);
        }
        app.oscillator.validate();
        rc.application = app;
    }
    return rc;
}

inline json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'", "config");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what(), "config");
    }
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

// Canonical form with every default filled in; keys are sorted by the json type.
inline json to_json(const RunConfig& rc)
{
    json j;
    for (const auto& c : rc.chain.cavities) j["cavities"].push_back({{"kappa", c.kappa}, {"delta", c.delta}, {"g", c.g}});
    for (const auto& s : rc.chain.signals) {
        json e{{"theta", s.theta_scale}};
        std::visit(
            [&](const auto& v) {
                using S = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<S, Constant>) {
                    e["variant"] = "constant";
                    e["params"] = {{"q0", v.q0}};
                } else if constexpr (std::is_same_v<S, HarmonicBurst>) {
                    e["variant"] = "harmonic_burst";
                    e["params"] = {{"amplitude", v.amplitude},
                                   {"omega_m", v.omega_m},
                                   {"envelope_width", v.envelope_width},
                                   {"phase", v.phase}};
                } else if constexpr (std::is_same_v<S, ContinuousHarmonic>) {
                    e["variant"] = "continuous_harmonic";
                    e["params"] = {{"amplitude", v.amplitude}, {"omega_m", v.omega_m}, {"phase", v.phase}};
                } else {
                    std::vector<double> vals;
                    for (const auto& x : v.field.values) vals.push_back(x.real());
                    e["variant"] = "sampled";
                    e["params"] = {{"t_start", v.field.grid.t_start}, {"dt", v.field.grid.dt}, {"values", vals}};
                }
            },
            s.shape);
        j["signals"].push_back(e);
    }
    j["delay_T"] = rc.chain.delay_T;
    j["eta"] = rc.chain.eta;
    j["omega_L"] = rc.chain.omega_L;
    j["pulse"] = {{"beta_bar", rc.pulse.beta_bar}, {"tau", rc.pulse.tau}};
    if (rc.grid) j["grid"] = {{"dt", rc.grid->dt}, {"n_points", rc.grid->n_points}, {"t_start", rc.grid->t_start}};
    j["solver"] = {{"memory_cutoff", rc.solver.memory_cutoff},
                   {"rel_tolerance", rc.solver.rel_tolerance},
                   {"check_convergence", rc.solver.check_convergence}};
    j["metrology"] = {{"n_shots", rc.n_shots}};
    if (rc.thermal) j["thermal"] = {{"temperature", rc.thermal->temperature}, {"additive", rc.thermal->additive}};
    if (rc.application) {
        json a{{"name", rc.application->name},
               {"mass", rc.application->oscillator.mass},
               {"omega_m", rc.application->oscillator.omega_m},
               {"damping_ratio", rc.application->oscillator.damping_ratio}};
        for (const auto& [k, v] : rc.application->parameters) a[k] = v;
        j["application"] = a;
    }
    return j;
}

} // namespace cascade
#endif // CASCADE_CONFIG_HPP
