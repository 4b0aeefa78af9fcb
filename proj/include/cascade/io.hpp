#ifndef CASCADE_IO_HPP
#define CASCADE_IO_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "cascade/chain.hpp"
#include "cascade/errors.hpp"
#include "cascade/fields.hpp"
#include "cascade/metrology.hpp"
#include "cascade/solver.hpp"

namespace cascade::io
{

using json = nlohmann::json;

// Fixed 12-significant-digit formatting so identical inputs give identical bytes.
inline std::string fmt(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Non-finite numbers become strings, since JSON has no literal for them.
inline json number(double v)
{
    if (std::isfinite(v)) return v;
    return fmt(v);
}

template <class Grid>
void write_csv(std::ostream& out, const Field<Grid>& f, const char* coordinate)
{
    out << coordinate << ",re,im\n";
    for (std::size_t i = 0; i < f.size(); ++i)
        out << fmt(f.coordinate(i)) << ',' << fmt(f.values[i].real()) << ',' << fmt(f.values[i].imag()) << '\n';
}

inline void write_csv(std::ostream& out, const TimeField& f) { write_csv(out, f, "t"); }
inline void write_csv(std::ostream& out, const FreqField& f) { write_csv(out, f, "omega"); }

template <class Grid>
json to_json(const Field<Grid>& f)
{
    json re = json::array();
    json im = json::array();
    for (const auto& v : f.values) {
        re.push_back(v.real());
        im.push_back(v.imag());
    }
    return {{"grid", {{"start", f.grid.start()}, {"step", f.grid.step()}, {"n", f.grid.size()}}},
            {"re", std::move(re)},
            {"im", std::move(im)}};
}

inline TimeField time_field_from_json(const json& j)
{
    const auto& g = j.at("grid");
    TimeField f(TimeGrid{g.at("start").get<double>(), g.at("step").get<double>(), g.at("n").get<std::size_t>()});
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = {j.at("re").at(i).get<double>(), j.at("im").at(i).get<double>()};
    return f;
}

inline FreqField freq_field_from_json(const json& j)
{
    const auto& g = j.at("grid");
    FreqField f(FreqGrid{g.at("start").get<double>(), g.at("step").get<double>(), g.at("n").get<std::size_t>()});
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = {j.at("re").at(i).get<double>(), j.at("im").at(i).get<double>()};
    return f;
}

inline json to_json(const CascadeSolution& sol, bool per_cavity = false)
{
    json j{{"method", std::string(to_string(sol.method))},
           {"n_cavities", sol.spectra.size()},
           {"output_spectrum", to_json(sol.output_spectrum)},
           {"warnings", sol.warnings}};
    if (sol.output_field) j["output_field"] = to_json(*sol.output_field);
    if (per_cavity) {
        j["per_cavity_spectra"] = json::array();
        for (const auto& f : sol.spectra) j["per_cavity_spectra"].push_back(to_json(f));
    }
    return j;
}

// omega, |beta~_N|^2 (shifted frame) and |<b_N^out>|^2 (lab frame).
inline void write_spectrum_csv(std::ostream& out, const CascadeSolution& sol)
{
    out << "omega,power,output_power\n";
    const auto& f = sol.final_spectrum();
    for (std::size_t i = 0; i < f.size(); ++i)
        out << fmt(f.coordinate(i)) << ',' << fmt(std::norm(f.values[i])) << ','
            << fmt(std::norm(sol.output_spectrum.values[i])) << '\n';
}

inline json to_json(const RegimeDiagnostics& d)
{
    json cav = json::array();
    for (const auto& c : d.cavities)
        cav.push_back({{"omega_tau", c.omega_tau},
                       {"kappa_tau", c.kappa_tau},
                       {"width_tau", c.width_tau},
                       {"omega_over_kappa", c.omega_over_kappa},
                       {"epsilon", c.epsilon},
                       {"coupling", c.coupling}});
    return {{"recommended", std::string(to_string(d.recommended))}, {"cavities", cav}};
}

inline json to_json(const MetrologyReport& r)
{
    json j{{"qfi", number(r.qfi)},
           {"snr_bound", number(r.snr_bound)},
           {"theta", r.theta},
           {"n_shots", r.n_shots},
           {"n_cavities", r.n_cavities},
           {"eta", r.eta},
           {"regime", std::string(to_string(r.regime))},
           {"method", std::string(to_string(r.method))},
           {"notes", r.notes}};
    j["snr_specialized"] = r.snr_specialized ? number(*r.snr_specialized) : json(nullptr);
    return j;
}

inline json to_json(const ThermalReport& r)
{
    return {{"h0", number(r.h0)},
            {"n_bar", number(r.n_bar)},
            {"delta_h", number(r.delta_h)},
            {"relative_correction", number(r.relative)},
            {"t_max", number(r.t_max)},
            {"temperature", r.temperature},
            {"valid", r.valid},
            {"total_qfi", number(r.total())},
            {"notes", r.notes}};
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'", "out");
    out << text;
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

} // namespace cascade::io
#endif // CASCADE_IO_HPP
