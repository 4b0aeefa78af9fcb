#ifndef CASCADE_APPLICATIONS_HPP
#define CASCADE_APPLICATIONS_HPP

#include <cmath>
#include <map>
#include <string>
#include <string_view>

#include "cascade/chain.hpp"
#include "cascade/constants.hpp"
#include "cascade/errors.hpp"

namespace cascade::applications
{

struct OscillatorSpec
{
    double mass = 1e-6;                         // kg
    double omega_m = constants::two_pi * 1e3;  // rad/s
    double damping_ratio = 1e-6;                // damping rate is omega_m * damping_ratio

    void validate() const
    {
        if (!(mass > 0.0)) throw ConfigError("oscillator mass must be > 0", "application.mass");
        if (!(omega_m > 0.0)) throw ConfigError("oscillator omega_m must be > 0", "application.omega_m");
        if (!(damping_ratio > 0.0))
            throw ConfigError("oscillator damping_ratio must be > 0", "application.damping_ratio");
    }

    // sqrt(hbar / (2 m W)), metres.
    double x_zpf() const { return std::sqrt(constants::hbar / (2.0 * mass * omega_m)); }

    // Resonant steady-state displacement for a force amplitude F: F / (2 m W^2 zeta).
    double steady_displacement(double force) const
    {
        return force / (2.0 * mass * omega_m * omega_m * damping_ratio);
    }
};

// Displacement converted to the dimensionless quadrature q = X / x_zpf.
inline double to_quadrature(double displacement, const OscillatorSpec& osc) { return displacement / osc.x_zpf(); }

struct SteadyAmplitude
{
    double displacement = 0.0;  // m
    double q = 0.0;             // dimensionless
};

// ---------------------------------------------------------------------------
// Ultralight dark matter

struct DmModel
{
    double coupling = 1.0;     // g_chi, model dependent
    double density = 5.3e-22;  // kg / m^3
    double mass_chi = 1e-37;   // kg
    double velocity = 1e5;     // m / s

    void validate() const
    {
        if (!(density > 0.0)) throw ConfigError("dm density must be > 0", "application.density");
        if (!(mass_chi > 0.0)) throw ConfigError("dm mass_chi must be > 0", "application.mass_chi");
        if (!(velocity > 0.0)) throw ConfigError("dm velocity must be > 0", "application.velocity");
    }

    double theta_chi() const { return coupling * density; }
    double omega_chi() const { return mass_chi * constants::speed_of_light * constants::speed_of_light / constants::hbar; }
    double de_broglie_wavelength() const { return constants::two_pi * constants::hbar / (mass_chi * velocity); }
    double coherence_time() const { return constants::two_pi * 1e7 / omega_chi(); }
};

struct DmAmplitude : SteadyAmplitude
{
    double force = 0.0;        // g_chi rho_chi
    double omega_chi = 0.0;    // rad/s
    double lambda_chi = 0.0;   // m
    double t_coh = 0.0;        // s
    double chain_factor = 0.0; // dQ / d(g_chi rho_chi)
};

inline DmAmplitude dm_steady_amplitude(const DmModel& model, const OscillatorSpec& osc)
{
    model.validate();
    osc.validate();
    DmAmplitude a;
    a.force = model.theta_chi();
    a.displacement = osc.steady_displacement(a.force);
    a.q = to_quadrature(a.displacement, osc);
    a.omega_chi = model.omega_chi();
    a.lambda_chi = model.de_broglie_wavelength();
    a.t_coh = model.coherence_time();
    a.chain_factor = to_quadrature(osc.steady_displacement(1.0), osc);
    return a;
}

// Resonant drive; a burst limited by the coherence time when that is shorter
// than the light pulse.
inline MechanicalSignal dm_signal(const DmModel& model, const OscillatorSpec& osc, double pulse_tau)
{
    const auto a = dm_steady_amplitude(model, osc);
    MechanicalSignal s;
    if (a.t_coh < pulse_tau)
        s.shape = HarmonicBurst{std::abs(a.q), osc.omega_m, a.t_coh, a.q < 0.0 ? constants::pi : 0.0};
    else
        s.shape = ContinuousHarmonic{std::abs(a.q), osc.omega_m, a.q < 0.0 ? constants::pi : 0.0};
    return s;
}

// ---------------------------------------------------------------------------
// Gravitational waves

// Tidal gradient scale w^2 h / 2 (a proportionality, not an absolute force).
inline double gw_tidal_scale(double omega_gw, double strain)
{
    if (!(strain >= 0.0)) throw ConfigError("strain must be >= 0", "application.strain");
    return omega_gw * omega_gw * strain / 2.0;
}

// ---------------------------------------------------------------------------
// Gravitational field of an ultra-relativistic beam

// a0 ~ 4 G P / (c^2 d).
inline double lhc_acceleration(double power, double distance)
{
    if (!(distance > 0.0)) throw ConfigError("distance must be > 0", "application.distance");
    return 4.0 * constants::gravitational * power /
           (constants::speed_of_light * constants::speed_of_light * distance);
}

// X = a0 / (2 W^2 zeta).
inline SteadyAmplitude lhc_steady_amplitude(double a0, const OscillatorSpec& osc)
{
    osc.validate();
    SteadyAmplitude a;
    a.displacement = a0 / (2.0 * osc.omega_m * osc.omega_m * osc.damping_ratio);
    a.q = to_quadrature(a.displacement, osc);
    return a;
}

// ---------------------------------------------------------------------------
// Named presets

struct Preset
{
    std::string name;
    OscillatorSpec oscillator;
    std::map<std::string, double> parameters;  // scenario inputs, overridable
    std::map<std::string, double> metadata;    // informational only
};

inline Preset preset(std::string_view name)
{
    Preset p;
    p.name = std::string(name);
    if (name == "dm") {
        const DmModel m;
        p.parameters = {{"coupling", m.coupling},
                        {"density", m.density},
                        {"mass_chi", m.mass_chi},
                        {"velocity", m.velocity}};
    } else if (name == "gw") {
        p.parameters = {{"omega_gw", constants::two_pi * 1e3}, {"strain", 1e-22}};
    } else if (name == "lhc") {
        p.parameters = {{"power", 3.8e12}, {"distance", 1.0}};
        p.metadata = {{"beam_rate_hz", 31.2e6}, {"single_bunch_rate_hz", 11e3}};
    } else {
        throw ConfigError("unknown application preset '" + std::string(name) + "'", "application.name");
    }
    return p;
}

} // namespace cascade::applications
#endif // CASCADE_APPLICATIONS_HPP
