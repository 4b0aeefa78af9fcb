#ifndef CASCADE_CHAIN_HPP
#define CASCADE_CHAIN_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "cascade/constants.hpp"
#include "cascade/errors.hpp"
#include "cascade/fields.hpp"

namespace cascade
{

struct CavityParams
{
    double kappa = 1.0;  // linewidth, rad/s
    double delta = 0.0;  // detuning, rad/s
    double g = 0.0;      // optomechanical coupling, rad/s

    cplx gamma() const { return {kappa / 2.0, delta}; }
    double epsilon() const { return g / kappa; }

    void validate(const std::string& key = "cavity") const
    {
        if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError(key + ".kappa must be > 0", key + ".kappa");
        if (!std::isfinite(delta)) throw ConfigError(key + ".delta must be finite", key + ".delta");
        if (!std::isfinite(g)) throw ConfigError(key + ".g must be finite", key + ".g");
    }
};

// Signal shapes. Q(t) = theta * shape(t).
struct Constant
{
    double q0 = 0.0;
};

struct HarmonicBurst
{
    double amplitude = 0.0;
    double omega_m = 1.0;
    double envelope_width = 1.0;
    double phase = 0.0;
};

struct ContinuousHarmonic
{
    double amplitude = 0.0;
    double omega_m = 1.0;
    double phase = 0.0;
};

// Arbitrary real profile, linearly interpolated between samples and zero outside.
struct Sampled
{
    TimeField field;
};

struct MechanicalSignal
{
    std::variant<Constant, HarmonicBurst, ContinuousHarmonic, Sampled> shape;
    double theta_scale = 1.0;

    void validate(const std::string& key = "signal") const
    {
        if (!std::isfinite(theta_scale)) throw ConfigError(key + ".theta must be finite", key + ".theta");
        std::visit(
            [&](const auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Constant>) {
                    if (!std::isfinite(s.q0)) throw ConfigError(key + ".q0 must be finite", key + ".q0");
                } else if constexpr (std::is_same_v<S, Sampled>) {
                    s.field.validate();
                    for (const auto& v : s.field.values)
                        if (v.imag() != 0.0)
                            throw ConfigError(key + " samples must be real", key + ".samples");
                } else {
                    if (!(s.amplitude >= 0.0) || !std::isfinite(s.amplitude))
                        throw ConfigError(key + ".amplitude must be >= 0", key + ".amplitude");
                    if (!(s.omega_m > 0.0) || !std::isfinite(s.omega_m))
                        throw ConfigError(key + ".omega_m must be > 0", key + ".omega_m");
                    if (!std::isfinite(s.phase)) throw ConfigError(key + ".phase must be finite", key + ".phase");
                    if constexpr (std::is_same_v<S, HarmonicBurst>)
                        if (!(s.envelope_width > 0.0) || !std::isfinite(s.envelope_width))
                            throw ConfigError(key + ".envelope_width must be > 0", key + ".envelope_width");
                }
            },
            shape);
    }

    template <class S>
    bool holds() const
    {
        return std::holds_alternative<S>(shape);
    }
};

struct ChainConfig
{
    std::vector<CavityParams> cavities;
    std::vector<MechanicalSignal> signals;
    double delay_T = 0.0;
    double eta = 1.0;
    double omega_L = 0.0;

    std::size_t size() const { return cavities.size(); }

    void validate() const
    {
        if (cavities.empty()) throw ConfigError("at least one cavity is required", "cavities");
        if (signals.size() != cavities.size())
            throw ConfigError("signals and cavities must have equal length", "signals");
        for (std::size_t n = 0; n < cavities.size(); ++n) {
            cavities[n].validate("cavities[" + std::to_string(n) + "]");
            signals[n].validate("signals[" + std::to_string(n) + "]");
        }
        if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]", "eta");
        if (!std::isfinite(delay_T)) throw ConfigError("delay_T must be finite", "delay_T");
        if (!std::isfinite(omega_L)) throw ConfigError("omega_L must be finite", "omega_L");
    }

    double min_kappa() const
    {
        double k = cavities.at(0).kappa;
        for (const auto& c : cavities) k = std::min(k, c.kappa);
        return k;
    }

    double max_kappa() const
    {
        double k = cavities.at(0).kappa;
        for (const auto& c : cavities) k = std::max(k, c.kappa);
        return k;
    }
};

// ---------------------------------------------------------------------------
// Cavity response

// phi(w) = pi + 2 atan(2 (w - Delta) / kappa), in (0, 2 pi).
inline double response_phase(const CavityParams& c, double omega)
{
    return constants::pi + 2.0 * std::atan(2.0 * (omega - c.delta) / c.kappa);
}

// e^{i phi(w)} = -(Gamma - i w)^* / (Gamma - i w).
inline cplx response_factor(const CavityParams& c, double omega)
{
    const cplx d = c.gamma() - cplx(0.0, omega);
    return -std::conj(d) / d;
}

// [1 - e^{i phi(w)}]^2 = kappa^2 / (Gamma - i w)^2.
inline cplx response_kernel(const CavityParams& c, double omega)
{
    const cplx d = c.gamma() - cplx(0.0, omega);
    return c.kappa * c.kappa / (d * d);
}

// ---------------------------------------------------------------------------
// Signal profiles and spectra

namespace detail
{

inline double interpolate(const TimeField& f, double t, Warnings* warnings)
{
    const double x = (t - f.grid.t_start) / f.grid.dt;
    const auto last = static_cast<double>(f.size() - 1);
    if (!(x >= 0.0 && x <= last)) {
        if (warnings != nullptr)
            warnings->push_back("sampled signal evaluated outside its grid; using 0");
        return 0.0;
    }
    const auto i = std::min(static_cast<std::size_t>(x), f.size() - 2);
    const double frac = x - static_cast<double>(i);
    return (1.0 - frac) * f.values[i].real() + frac * f.values[i + 1].real();
}

// Fourier transform of the piecewise-linear interpolant: sum of hat functions,
// each contributing dt sinc^2(w dt/2) e^{i w t_j}.
inline cplx sampled_spectrum(const TimeField& f, double omega)
{
    const double dt = f.grid.dt;
    const double x = 0.5 * omega * dt;
    const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
    const cplx step = std::polar(1.0, omega * dt);
    cplx ph = std::polar(1.0, omega * f.grid.t_start);
    cplx acc{};
    for (std::size_t j = 0; j < f.size(); ++j) {
        acc += f.values[j].real() * ph;
        ph *= step;
        if ((j & 255u) == 255u) ph = std::polar(1.0, omega * f.grid.at(j + 1));
    }
    return acc * dt * sinc * sinc / std::sqrt(constants::two_pi);
}

} // namespace detail

// Lab-frame profile q(t) = theta * shape(t).
inline double mech_time_profile(const MechanicalSignal& s, double t, Warnings* warnings = nullptr)
{
    return s.theta_scale *
           std::visit(
               [&](const auto& v) -> double {
                   using S = std::decay_t<decltype(v)>;
                   if constexpr (std::is_same_v<S, Constant>) {
                       return v.q0;
                   } else if constexpr (std::is_same_v<S, HarmonicBurst>) {
                       const double u = t / v.envelope_width;
                       return v.amplitude * std::exp(-0.5 * u * u) * std::cos(v.omega_m * t + v.phase);
                   } else if constexpr (std::is_same_v<S, ContinuousHarmonic>) {
                       return v.amplitude * std::cos(v.omega_m * t + v.phase);
                   } else {
                       return detail::interpolate(v.field, t, warnings);
                   }
               },
               s.shape);
}

// Shifted-frame profile of cavity n (1-based): Q_n(t) = q_n(t + (n-1) T).
inline double shifted_profile(const MechanicalSignal& s, std::size_t n, double delay_T, double t,
                              Warnings* warnings = nullptr)
{
    return mech_time_profile(s, t + static_cast<double>(n - 1) * delay_T, warnings);
}

// Largest |Q(t)|.
inline double peak_amplitude(const MechanicalSignal& s)
{
    const double shape = std::visit(
        [](const auto& v) -> double {
            using S = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<S, Constant>) {
                return std::abs(v.q0);
            } else if constexpr (std::is_same_v<S, Sampled>) {
                double m = 0.0;
                for (const auto& x : v.field.values) m = std::max(m, std::abs(x.real()));
                return m;
            } else {
                return v.amplitude;
            }
        },
        s.shape);
    return std::abs(s.theta_scale) * shape;
}

// A spectral delta: Q~ contains weight * delta(w - omega).
struct SpectralLine
{
    double omega = 0.0;
    cplx weight{};
};

// Delta components of Q~_n, including the delay phase e^{-i w (n-1) T}.
inline std::vector<SpectralLine> spectral_lines(const MechanicalSignal& s, std::size_t n, double delay_T)
{
    const double root = std::sqrt(constants::two_pi);
    const double d = static_cast<double>(n - 1) * delay_T;
    std::vector<SpectralLine> out;
    if (const auto* c = std::get_if<Constant>(&s.shape)) {
        if (c->q0 != 0.0 && s.theta_scale != 0.0) out.push_back({0.0, s.theta_scale * c->q0 * root});
    } else if (const auto* h = std::get_if<ContinuousHarmonic>(&s.shape)) {
        if (h->amplitude != 0.0 && s.theta_scale != 0.0) {
            const double w = 0.5 * s.theta_scale * h->amplitude * root;
            out.push_back({h->omega_m, w * std::polar(1.0, -h->phase - h->omega_m * d)});
            out.push_back({-h->omega_m, w * std::polar(1.0, h->phase + h->omega_m * d)});
        }
    }
    return out;
}

// True when Q~_n is an ordinary function (no delta components).
inline bool has_continuum(const MechanicalSignal& s)
{
    return s.holds<HarmonicBurst>() || s.holds<Sampled>();
}

// Continuous part of Q~_n(w), including the delay phase.
inline cplx continuum_spectrum(const MechanicalSignal& s, std::size_t n, double delay_T, double omega)
{
    const double d = static_cast<double>(n - 1) * delay_T;
    const cplx delay = std::polar(1.0, -omega * d);
    if (const auto* b = std::get_if<HarmonicBurst>(&s.shape)) {
        const double w = b->envelope_width;
        const double up = w * (omega + b->omega_m);
        const double dn = w * (omega - b->omega_m);
        const cplx val = std::polar(std::exp(-0.5 * up * up), b->phase) +
                         std::polar(std::exp(-0.5 * dn * dn), -b->phase);
        return 0.5 * s.theta_scale * b->amplitude * w * val * delay;
    }
    if (const auto* p = std::get_if<Sampled>(&s.shape))
        return s.theta_scale * detail::sampled_spectrum(p->field, omega) * delay;
    return {};
}

// Frequency intervals outside which the continuum is negligible (< e^{-40}).
inline std::vector<std::pair<double, double>> continuum_support(const MechanicalSignal& s)
{
    if (const auto* b = std::get_if<HarmonicBurst>(&s.shape)) {
        const double half = 9.0 / b->envelope_width;
        if (b->omega_m <= half) return {{-b->omega_m - half, b->omega_m + half}};
        return {{-b->omega_m - half, -b->omega_m + half}, {b->omega_m - half, b->omega_m + half}};
    }
    if (const auto* p = std::get_if<Sampled>(&s.shape)) {
        const double band = constants::two_pi / p->field.grid.dt;
        return {{-band, band}};
    }
    return {};
}

// Time extent of the shape around its centre, used to pick quadrature steps.
inline double time_extent(const MechanicalSignal& s)
{
    if (const auto* b = std::get_if<HarmonicBurst>(&s.shape)) return 9.0 * b->envelope_width;
    if (const auto* p = std::get_if<Sampled>(&s.shape))
        return std::max(std::abs(p->field.grid.t_start), std::abs(p->field.grid.span_end()));
    return 0.0;
}

// Q~_n(w) sampled on a grid. Delta lines are not representable on a grid, so
// they are returned separately through `lines`; the field holds the continuum.
inline FreqField mech_spectrum(const MechanicalSignal& s, std::size_t n, double delay_T, const FreqGrid& grid,
                               std::vector<SpectralLine>* lines = nullptr)
{
    if (n < 1) throw ConfigError("cavity index is 1-based", "n");
    FreqField f(grid);
    if (has_continuum(s))
        for (std::size_t i = 0; i < grid.n_points; ++i) f.values[i] = continuum_spectrum(s, n, delay_T, grid.at(i));
    if (lines != nullptr) *lines = spectral_lines(s, n, delay_T);
    return f;
}

// int_0^inf dw Q~_n(w) / sqrt(2 pi). A line at w = 0 counts with half weight.
inline cplx halfline_inverse_fourier(const MechanicalSignal& s, std::size_t n = 1, double delay_T = 0.0)
{
    const double root = std::sqrt(constants::two_pi);
    cplx acc{};
    for (const auto& l : spectral_lines(s, n, delay_T)) {
        if (l.omega > 0.0) acc += l.weight / root;
        else if (l.omega == 0.0) acc += 0.5 * l.weight / root;
    }
    if (!has_continuum(s) || s.theta_scale == 0.0) return acc;

    // Composite Simpson over the positive part of the support.
    const double d = std::abs(static_cast<double>(n - 1) * delay_T);
    const double scale = std::max(time_extent(s), 1e-300) + d;
    for (const auto& [lo0, hi] : continuum_support(s)) {
        const double lo = std::max(lo0, 0.0);
        if (hi <= lo) continue;
        const double h_target = 0.05 / scale;
        auto m = static_cast<std::size_t>(std::ceil((hi - lo) / h_target));
        m += m % 2;
        m = std::max<std::size_t>(m, 2);
        const double h = (hi - lo) / static_cast<double>(m);
        cplx sum = continuum_spectrum(s, n, delay_T, lo) + continuum_spectrum(s, n, delay_T, hi);
        for (std::size_t k = 1; k < m; ++k)
            sum += (k % 2 == 1 ? 4.0 : 2.0) * continuum_spectrum(s, n, delay_T, lo + static_cast<double>(k) * h);
        acc += sum * h / 3.0 / root;
    }
    return acc;
}

// Centre frequency and spectral width of a signal (both >= 0).
struct SignalBand
{
    double omega = 0.0;
    double width = 0.0;
};

inline SignalBand signal_band(const MechanicalSignal& s)
{
    if (s.holds<Constant>()) return {0.0, 0.0};
    if (const auto* h = std::get_if<ContinuousHarmonic>(&s.shape)) return {h->omega_m, 0.0};
    if (const auto* b = std::get_if<HarmonicBurst>(&s.shape)) return {b->omega_m, 1.0 / b->envelope_width};
    // Sampled: power-weighted moments over positive frequencies.
    const auto& f = std::get<Sampled>(s.shape).field;
    const FreqField spec = forward_transform(f);
    double p0 = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double w = spec.grid.at(i);
        if (w <= 0.0) continue;
        const double p = std::norm(spec.values[i]);
        p0 += p;
        p1 += p * w;
        p2 += p * w * w;
    }
    if (p0 == 0.0) return {0.0, 0.0};
    const double c = p1 / p0;
    return {c, std::sqrt(std::max(0.0, p2 / p0 - c * c))};
}

// ---------------------------------------------------------------------------
// Regimes and methods

enum class Regime
{
    Stroboscopic,
    CwFiniteSignal,
    CwContinuousSignal,
    NumericOnly,
};

enum class Method
{
    Direct,
    FirstOrder,
    StrobWeak,
    StrobStrong,
    CwFinite,
    CwContinuous,
    Auto,
};

inline std::string_view to_string(Regime r)
{
    switch (r) {
    case Regime::Stroboscopic: return "stroboscopic";
    case Regime::CwFiniteSignal: return "cw-finite-signal";
    case Regime::CwContinuousSignal: return "cw-continuous-signal";
    case Regime::NumericOnly: return "numeric-only";
    }
    return "unknown";
}

inline std::string_view to_string(Method m)
{
    switch (m) {
    case Method::Direct: return "direct";
    case Method::FirstOrder: return "first-order";
    case Method::StrobWeak: return "strob-weak";
    case Method::StrobStrong: return "strob-strong";
    case Method::CwFinite: return "cw-finite";
    case Method::CwContinuous: return "cw-continuous";
    case Method::Auto: return "auto";
    }
    return "unknown";
}

inline Method parse_method(std::string_view name)
{
    for (auto m : {Method::Direct, Method::FirstOrder, Method::StrobWeak, Method::StrobStrong, Method::CwFinite,
                   Method::CwContinuous, Method::Auto})
        if (to_string(m) == name) return m;
    throw ConfigError("unknown method '" + std::string(name) + "'", "method");
}

struct CavityRatios
{
    double omega_tau = 0.0;
    double kappa_tau = 0.0;
    double width_tau = 0.0;
    double omega_over_kappa = 0.0;
    double epsilon = 0.0;
    double coupling = 0.0;  // g * max|Q| / kappa
};

struct RegimeDiagnostics
{
    std::vector<CavityRatios> cavities;
    Regime recommended = Regime::NumericOnly;

    double max_coupling() const
    {
        double m = 0.0;
        for (const auto& c : cavities) m = std::max(m, c.coupling);
        return m;
    }
};

inline constexpr double regime_small = 0.1;
inline constexpr double regime_large = 10.0;
inline constexpr double weak_coupling_limit = 0.1;

inline RegimeDiagnostics diagnose_regime(const ChainConfig& cfg, const PulseParams& p)
{
    cfg.validate();
    p.validate();
    RegimeDiagnostics d;
    for (std::size_t n = 0; n < cfg.size(); ++n) {
        const auto& c = cfg.cavities[n];
        const auto band = signal_band(cfg.signals[n]);
        d.cavities.push_back({band.omega * p.tau, c.kappa * p.tau, band.width * p.tau, band.omega / c.kappa,
                              std::abs(c.epsilon()), std::abs(c.epsilon()) * peak_amplitude(cfg.signals[n])});
    }
    auto max_of = [&](auto field) {
        double v = 0.0;
        for (const auto& c : d.cavities) v = std::max(v, c.*field);
        return v;
    };
    auto min_of = [&](auto field) {
        double v = d.cavities.front().*field;
        for (const auto& c : d.cavities) v = std::min(v, c.*field);
        return v;
    };
    if (max_of(&CavityRatios::omega_tau) < regime_small && min_of(&CavityRatios::kappa_tau) > regime_large)
        d.recommended = Regime::Stroboscopic;
    else if (min_of(&CavityRatios::width_tau) > regime_large)
        d.recommended = Regime::CwFiniteSignal;
    else if (min_of(&CavityRatios::omega_tau) > regime_large && max_of(&CavityRatios::width_tau) < regime_small)
        d.recommended = Regime::CwContinuousSignal;
    else
        d.recommended = Regime::NumericOnly;
    return d;
}

// Method chosen by "auto": closed forms when diagnostics allow them.
inline Method resolve_auto(const RegimeDiagnostics& d)
{
    const bool weak = d.max_coupling() <= weak_coupling_limit;
    switch (d.recommended) {
    case Regime::Stroboscopic: return weak ? Method::StrobWeak : Method::StrobStrong;
    case Regime::CwFiniteSignal: return Method::CwFinite;
    case Regime::CwContinuousSignal: return Method::CwContinuous;
    case Regime::NumericOnly: return weak ? Method::FirstOrder : Method::Direct;
    }
    return Method::Direct;
}

} // namespace cascade
#endif // CASCADE_CHAIN_HPP
