#ifndef CASCADE_CLI_COMMANDS_HPP
#define CASCADE_CLI_COMMANDS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <openssl/evp.h>

#include "cascade/applications.hpp"
#include "cascade/chain.hpp"
#include "cascade/config.hpp"
#include "cascade/errors.hpp"
#include "cascade/io.hpp"
#include "cascade/metrology.hpp"
#include "cascade/solver.hpp"

#ifndef CASCADE_VERSION
#define CASCADE_VERSION "0.0.0"
#endif

namespace cascade::cli
{

namespace fs = std::filesystem;

struct RunManifest
{
    std::string command;
    std::string config_hash;
    std::string timestamp;
    std::string software_version = CASCADE_VERSION;
    std::vector<std::string> outputs;

    json to_json() const
    {
        return {{"command", command},
                {"config_hash", config_hash},
                {"timestamp", timestamp},
                {"software_version", software_version},
                {"outputs", outputs}};
    }
};

struct CommonOptions
{
    std::optional<std::string> config_path;
    std::string out_dir = ".";
    std::string method = "auto";
    std::optional<std::uint64_t> seed;  // reserved; every command is deterministic
    unsigned threads = 1;
};

// Ordered list of (parameter, values); rows are the cartesian product with the
// first parameter varying slowest.
using SweepSpec = std::vector<std::pair<std::string, std::vector<double>>>;

inline std::string sha256_hex(const std::string& data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw NumericError("SHA-256 digest failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return out.str();
}

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace detail
{

inline RunConfig require_config(const CommonOptions& o)
{
    if (!o.config_path) throw ConfigError("this command needs --config", "config");
    return load_config(*o.config_path);
}

inline fs::path prepare_out(const CommonOptions& o)
{
    fs::path dir(o.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + o.out_dir + "'", "out");
    return dir;
}

inline TimeGrid grid_of(const RunConfig& rc, bool time_domain = true)
{
    return rc.grid.value_or(grid_for(rc.chain, rc.pulse, time_domain));
}

inline RunManifest finish(const std::string& command, const json& resolved, const fs::path& dir,
                          std::vector<std::string> outputs)
{
    RunManifest m;
    m.command = command;
    m.config_hash = sha256_hex(resolved.dump());
    m.timestamp = utc_timestamp();
    const auto manifest_path = (dir / "manifest.json").string();
    outputs.push_back(manifest_path);
    m.outputs = std::move(outputs);
    io::write_json(manifest_path, m.to_json());
    return m;
}

// Runs fn(i) for i < n on up to `threads` workers.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn)
{
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace detail

// "eta=1,0.9,0.8" or "N=1:30" or "eta=0.5:0.95:0.05".
inline std::pair<std::string, std::vector<double>> parse_sweep_assignment(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("sweep parameter must look like name=values", "sweep");
    const std::string name = text.substr(0, eq);
    const std::string rhs = text.substr(eq + 1);
    auto to_double = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("cannot parse sweep value '" + s + "' for " + name, "sweep." + name);
        }
    };
    std::vector<double> values;
    if (rhs.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::stringstream ss(rhs);
        for (std::string item; std::getline(ss, item, ':');) parts.push_back(to_double(item));
        if (parts.size() < 2 || parts.size() > 3) throw ConfigError("range must be start:stop[:step]", "sweep." + name);
        const double step = parts.size() == 3 ? parts[2] : 1.0;
        if (!(step > 0.0)) throw ConfigError("range step must be > 0", "sweep." + name);
        for (std::size_t k = 0;; ++k) {
            const double v = parts[0] + static_cast<double>(k) * step;
            if (v > parts[1] + 1e-9 * step) break;
            values.push_back(v);
        }
    } else {
        std::stringstream ss(rhs);
        for (std::string item; std::getline(ss, item, ',');)
            if (!item.empty()) values.push_back(to_double(item));
    }
    if (values.empty()) throw ConfigError("empty value list for sweep parameter " + name, "sweep." + name);
    return {name, values};
}

// ---------------------------------------------------------------------------

inline RunManifest cmd_simulate(const CommonOptions& o, bool per_cavity = false)
{
    const RunConfig rc = detail::require_config(o);
    const Method requested = parse_method(o.method);
    const auto grid = detail::grid_of(rc, resolve_method(requested, rc.chain, rc.pulse) == Method::Direct);
    const auto diag = diagnose_regime(rc.chain, rc.pulse);
    const auto sol = solve(rc.chain, rc.pulse, requested, grid, rc.solver);

    const auto dir = detail::prepare_out(o);
    json out = io::to_json(sol, per_cavity);
    out["requested_method"] = o.method;
    out["diagnostics"] = io::to_json(diag);
    const auto sol_path = (dir / "solution.json").string();
    const auto csv_path = (dir / "spectrum.csv").string();
    io::write_json(sol_path, out);
    std::ostringstream csv;
    io::write_spectrum_csv(csv, sol);
    io::write_text(csv_path, csv.str());

    json resolved{{"config", to_json(rc)}, {"method", o.method}, {"grid", {grid.t_start, grid.dt, grid.n_points}}};
    return detail::finish("simulate", resolved, dir, {sol_path, csv_path});
}

struct SweepRow
{
    std::map<std::string, double> params;
    std::size_t n = 1;
    double eta = 1.0;
    double ratio = 1.0;
    std::optional<double> snr;
    std::optional<double> qfi;
};

inline constexpr const char* sweep_parameters[] = {"eta", "N", "g", "kappa", "delta", "tau"};

// Evaluates the sweep grid. Without a base configuration only the
// equal-cavity ratio is available.
inline std::vector<SweepRow> evaluate_sweep(const std::optional<RunConfig>& base, const SweepSpec& spec,
                                            unsigned threads = 1)
{
    if (spec.empty()) throw ConfigError("sweep needs at least one parameter", "sweep");
    for (const auto& [name, values] : spec) {
        if (std::find(std::begin(sweep_parameters), std::end(sweep_parameters), name) == std::end(sweep_parameters))
            throw ConfigError("unknown sweep parameter '" + name + "'", "sweep." + name);
        if (values.empty()) throw ConfigError("empty value list for sweep parameter " + name, "sweep." + name);
        if (name == "N")
            for (double v : values)
                if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("N values must be integers >= 1", "sweep.N");
    }
    if (!base)
        for (const auto& [name, values] : spec)
            if (name != "eta" && name != "N")
                throw ConfigError("sweeping '" + name + "' needs --config", "config");

    std::vector<SweepRow> rows;
    std::vector<std::size_t> idx(spec.size(), 0);
    while (true) {
        SweepRow r;
        for (std::size_t k = 0; k < spec.size(); ++k) r.params[spec[k].first] = spec[k].second[idx[k]];
        rows.push_back(std::move(r));
        std::size_t k = spec.size();
        while (k > 0 && ++idx[k - 1] == spec[k - 1].second.size()) idx[--k] = 0;
        if (k == 0) break;
    }

    // Configuration of one row; eta is applied separately as a prefactor.
    auto build = [&](const SweepRow& r) {
        RunConfig rc = *base;
        if (auto it = r.params.find("N"); it != r.params.end()) {
            const auto n = static_cast<std::size_t>(it->second);
            rc.chain.cavities.assign(n, rc.chain.cavities.front());
            rc.chain.signals.assign(n, rc.chain.signals.front());
        }
        for (auto& c : rc.chain.cavities) {
            if (auto it = r.params.find("g"); it != r.params.end()) c.g = it->second;
            if (auto it = r.params.find("kappa"); it != r.params.end()) c.kappa = it->second;
            if (auto it = r.params.find("delta"); it != r.params.end()) c.delta = it->second;
        }
        if (auto it = r.params.find("tau"); it != r.params.end()) rc.pulse.tau = it->second;
        rc.chain.eta = 1.0;
        return rc;
    };

    for (auto& r : rows) {
        r.eta = r.params.count("eta") ? r.params.at("eta") : (base ? base->chain.eta : 1.0);
        r.n = r.params.count("N") ? static_cast<std::size_t>(r.params.at("N")) : (base ? base->chain.size() : 1);
        r.ratio = equal_cavity_ratio(r.n, r.eta);
    }
    if (!base) return rows;

    // One derivative integral per distinct non-eta parameter set.
    std::map<std::map<std::string, double>, std::size_t> key_index;
    std::vector<std::map<std::string, double>> keys;
    std::vector<std::size_t> row_key(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto key = rows[i].params;
        key.erase("eta");
        auto [it, inserted] = key_index.emplace(key, keys.size());
        if (inserted) keys.push_back(key);
        row_key[i] = it->second;
    }
    std::vector<double> integral(keys.size());
    std::vector<double> theta(keys.size());
    detail::parallel_for(keys.size(), threads, [&](std::size_t k) {
        SweepRow probe;
        probe.params = keys[k];
        const RunConfig rc = build(probe);
        const bool grid_fixed = base->grid && !probe.params.count("tau") && !probe.params.count("kappa");
        const TimeGrid grid = grid_fixed ? *base->grid : grid_for(rc.chain, rc.pulse, false);
        const auto d = derivative_of_output(rc.chain, rc.pulse, Method::FirstOrder, grid, rc.solver);
        integral[k] = trapezoid_abs2(d);
        theta[k] = common_theta(rc.chain);
    });
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& r = rows[i];
        const double q = 4.0 * std::pow(r.eta, static_cast<double>(r.n - 1)) * integral[row_key[i]];
        r.qfi = q;
        r.snr = std::abs(theta[row_key[i]]) * std::sqrt(base->n_shots * q);
    }
    return rows;
}

inline std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows)
{
    std::ostringstream out;
    for (const auto& [name, values] : spec) out << name << ',';
    out << "eta_used,N_used,ratio,snr_bound,qfi\n";
    for (const auto& r : rows) {
        for (const auto& [name, values] : spec) out << io::fmt(r.params.at(name)) << ',';
        out << io::fmt(r.eta) << ',' << r.n << ',' << io::fmt(r.ratio) << ',' << (r.snr ? io::fmt(*r.snr) : "")
            << ',' << (r.qfi ? io::fmt(*r.qfi) : "") << '\n';
    }
    return out.str();
}

inline RunManifest cmd_sweep(const CommonOptions& o, const SweepSpec& spec)
{
    std::optional<RunConfig> base;
    if (o.config_path) base = load_config(*o.config_path);
    const auto rows = evaluate_sweep(base, spec, o.threads);
    const auto dir = detail::prepare_out(o);
    const auto path = (dir / "sweep.csv").string();
    io::write_text(path, sweep_csv(spec, rows));
    json resolved{{"config", base ? to_json(*base) : json(nullptr)}, {"sweep", spec}};
    return detail::finish("sweep", resolved, dir, {path});
}

struct Discrepancy
{
    Method method = Method::Direct;
    bool applicable = false;
    double full = 0.0;    // relative L2 of beta~_N against the time-domain solver
    double signal = 0.0;  // same for beta~_N(theta) - beta~_N(0)
    std::string error;
    Warnings warnings;
};

struct Comparison
{
    RegimeDiagnostics diagnostics;
    std::vector<Discrepancy> rows;
    Warnings direct_warnings;
};

// Relative L2 discrepancy of every frequency-space method against the
// time-domain recursion on the same grid.
inline Comparison compare_methods(const ChainConfig& cfg, const PulseParams& p, const TimeGrid& grid,
                                  const SolverOptions& opts = {})
{
    Comparison c;
    c.diagnostics = diagnose_regime(cfg, p);
    const auto direct = solve_direct(cfg, p, grid, opts);
    c.direct_warnings = direct.warnings;
    const auto base = solve_direct(with_theta(cfg, 0.0), p, grid, opts);
    const auto direct_signal = direct.final_spectrum() - base.final_spectrum();
    const FreqGrid fg = conjugate(grid);
    for (Method m : {Method::StrobWeak, Method::StrobStrong, Method::CwFinite, Method::CwContinuous,
                     Method::FirstOrder}) {
        Discrepancy d;
        d.method = m;
        try {
            const auto sol = solve(cfg, p, m, fg);
            const auto zero = solve(with_theta(cfg, 0.0), p, m, fg);
            d.full = relative_l2(sol.final_spectrum(), direct.final_spectrum());
            d.signal = relative_l2(sol.final_spectrum() - zero.final_spectrum(), direct_signal);
            d.applicable = true;
            d.warnings = sol.warnings;
        } catch (const RegimeError& e) {
            d.error = e.what();
        }
        c.rows.push_back(std::move(d));
    }
    return c;
}

inline RunManifest cmd_compare(const CommonOptions& o)
{
    const RunConfig rc = detail::require_config(o);
    const auto grid = detail::grid_of(rc);
    const auto cmp = compare_methods(rc.chain, rc.pulse, grid, rc.solver);
    const auto dir = detail::prepare_out(o);

    json rows = json::array();
    std::ostringstream csv;
    csv << "method,applicable,discrepancy,signal_discrepancy\n";
    for (const auto& d : cmp.rows) {
        json r{{"method", std::string(to_string(d.method))}, {"applicable", d.applicable}};
        if (d.applicable) {
            r["discrepancy"] = io::number(d.full);
            r["signal_discrepancy"] = io::number(d.signal);
            r["warnings"] = d.warnings;
        } else {
            r["error"] = d.error;
        }
        rows.push_back(r);
        csv << to_string(d.method) << ',' << (d.applicable ? "true" : "false") << ','
            << (d.applicable ? io::fmt(d.full) : "") << ',' << (d.applicable ? io::fmt(d.signal) : "") << '\n';
    }
    const auto json_path = (dir / "compare.json").string();
    const auto csv_path = (dir / "compare.csv").string();
    io::write_json(json_path, {{"diagnostics", io::to_json(cmp.diagnostics)},
                               {"direct_warnings", cmp.direct_warnings},
                               {"grid", {{"t_start", grid.t_start}, {"dt", grid.dt}, {"n_points", grid.n_points}}},
                               {"methods", rows}});
    io::write_text(csv_path, csv.str());
    json resolved{{"config", to_json(rc)}, {"grid", {grid.t_start, grid.dt, grid.n_points}}};
    return detail::finish("compare", resolved, dir, {json_path, csv_path});
}

inline RunManifest cmd_thermal(const CommonOptions& o, std::optional<double> temperature = std::nullopt)
{
    const RunConfig rc = detail::require_config(o);
    const double t = temperature.value_or(rc.thermal ? rc.thermal->temperature : 0.0);
    const bool additive = rc.thermal && rc.thermal->additive;
    const auto report = thermal_analysis(rc.chain, rc.pulse, t, additive);
    const auto dir = detail::prepare_out(o);
    const auto path = (dir / "thermal.json").string();
    io::write_json(path, io::to_json(report));
    json resolved{{"config", to_json(rc)}, {"temperature", t}};
    return detail::finish("thermal", resolved, dir, {path});
}

inline std::vector<double> default_eta_list()
{
    std::vector<double> etas;
    for (int k = 0; k <= 9; ++k) etas.push_back(0.5 + 0.05 * k);
    for (double e : {0.96, 0.97, 0.98, 0.99, 0.995, 0.999}) etas.push_back(e);
    return etas;
}

inline std::string nopt_csv(const std::vector<double>& etas)
{
    std::ostringstream out;
    out << "eta,n_opt,ratio_max,candidate_low,candidate_high,matches_candidates,integer_part_estimate,"
           "matches_integer_part,asymptotic_product\n";
    for (double eta : etas) {
        const auto r = optimal_n(eta);
        out << io::fmt(eta) << ',' << r.n_opt << ',' << io::fmt(r.ratio_max) << ',' << r.candidate_low << ','
            << r.candidate_high << ',' << (r.matches_candidates ? "true" : "false") << ','
            << r.integer_part_estimate << ',' << (r.matches_integer_part ? "true" : "false") << ','
            << io::fmt(r.ratio_max * std::sqrt(std::exp(1.0) * (1.0 - eta))) << '\n';
    }
    return out.str();
}

inline RunManifest cmd_nopt(const CommonOptions& o, std::vector<double> etas = {})
{
    if (etas.empty()) etas = default_eta_list();
    const std::string csv = nopt_csv(etas);
    const auto dir = detail::prepare_out(o);
    const auto path = (dir / "nopt.csv").string();
    io::write_text(path, csv);
    return detail::finish("nopt", json{{"eta", etas}}, dir, {path});
}

inline json application_report(const ApplicationConfig& app)
{
    using namespace applications;
    const auto& osc = app.oscillator;
    const auto& prm = app.parameters;
    json j{{"preset", app.name},
           {"oscillator",
            {{"mass", osc.mass}, {"omega_m", osc.omega_m}, {"damping_ratio", osc.damping_ratio}, {"x_zpf", osc.x_zpf()}}},
           {"parameters", prm}};
    if (app.name == "dm") {
        DmModel m{prm.at("coupling"), prm.at("density"), prm.at("mass_chi"), prm.at("velocity")};
        const auto a = dm_steady_amplitude(m, osc);
        j["result"] = {{"theta_chi", m.theta_chi()},
                       {"displacement", a.displacement},
                       {"q", a.q},
                       {"omega_chi", a.omega_chi},
                       {"lambda_chi", a.lambda_chi},
                       {"t_coh", a.t_coh},
                       {"dq_dtheta_chi", a.chain_factor}};
    } else if (app.name == "lhc") {
        const double a0 = lhc_acceleration(prm.at("power"), prm.at("distance"));
        const auto a = lhc_steady_amplitude(a0, osc);
        j["result"] = {{"a0", a0}, {"displacement", a.displacement}, {"q", a.q}};
        j["metadata"] = preset("lhc").metadata;
    } else if (app.name == "gw") {
        j["result"] = {{"tidal_scale", gw_tidal_scale(prm.at("omega_gw"), prm.at("strain"))},
                       {"note", "proportionality scale; geometric prefactor not included"}};
    }
    return j;
}

inline RunManifest cmd_app(const CommonOptions& o, std::optional<std::string> preset_name = std::nullopt)
{
    ApplicationConfig app;
    json resolved;
    if (preset_name) {
        const auto p = applications::preset(*preset_name);
        app = {p.name, p.oscillator, p.parameters};
        resolved = {{"preset", *preset_name}};
    } else {
        const RunConfig rc = detail::require_config(o);
        if (!rc.application) throw ConfigError("config has no 'application' section", "application");
        app = *rc.application;
        resolved = {{"config", to_json(rc)}};
    }
    const auto dir = detail::prepare_out(o);
    const auto path = (dir / "app.json").string();
    io::write_json(path, application_report(app));
    return detail::finish("app", resolved, dir, {path});
}

// ---------------------------------------------------------------------------

enum ExitCode : int
{
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_numeric = 3,
};

// Runs a command, mapping failures to exit codes and a JSON error object on
// `err` (and error.json in the output directory when it can be written).
inline int run_guarded(const std::function<RunManifest()>& command, const std::string& out_dir, std::ostream& err,
                       std::ostream* out = nullptr)
{
    json e;
    int code = exit_ok;
    try {
        const auto manifest = command();
        if (out != nullptr) *out << manifest.to_json().dump(2) << '\n';
        return exit_ok;
    } catch (const ConfigError& x) {
        e = {{"type", "config"}, {"message", x.what()}, {"key", x.key()}};
        code = exit_config;
    } catch (const GridError& x) {
        e = {{"type", "grid"}, {"message", x.what()}};
        code = exit_config;
    } catch (const RegimeError& x) {
        e = {{"type", "regime"}, {"message", x.what()}};
        code = exit_config;
    } catch (const NumericError& x) {
        e = {{"type", "numeric"}, {"message", x.what()}};
        code = exit_numeric;
    } catch (const std::exception& x) {
        e = {{"type", "internal"}, {"message", x.what()}};
        code = exit_failure;
    }
    const json doc{{"error", e}, {"exit_code", code}};
    err << doc.dump() << '\n';
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (fs::is_directory(out_dir, ec)) {
        std::ofstream f(fs::path(out_dir) / "error.json");
        if (f) f << doc.dump(2) << '\n';
    }
    return code;
}

} // namespace cascade::cli
#endif // CASCADE_CLI_COMMANDS_HPP
