#ifndef CASCADE_METROLOGY_HPP
#define CASCADE_METROLOGY_HPP

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cascade/chain.hpp"
#include "cascade/constants.hpp"
#include "cascade/errors.hpp"
#include "cascade/fields.hpp"
#include "cascade/solver.hpp"

namespace cascade
{

// ---------------------------------------------------------------------------
// Grid selection

// Time grid fine enough for the cavities, the pulse and every signal sideband,
// and wide enough for delayed finite signals.
// Frequency-space methods only need the band covered; the time-domain
// recursion additionally needs kappa*dt small.
inline TimeGrid grid_for(const ChainConfig& cfg, const PulseParams& p, bool time_domain = true)
{
    cfg.validate();
    p.validate();
    TimeGrid g = default_time_grid(p, cfg.min_kappa(), cfg.max_kappa());
    double half_span = -g.t_start;
    double band = 0.0;
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        const auto& s = cfg.signals[k];
        const auto b = signal_band(s);
        band = std::max(band, b.omega + 9.0 * b.width);
        if (has_continuum(s))
            half_span = std::max(half_span, 6.0 * p.tau + time_extent(s) +
                                                std::abs(static_cast<double>(k) * cfg.delay_T));
    }
    band += 9.0 / p.tau;
    double dt = constants::pi / (2.0 * band);
    if (time_domain) dt = std::min(dt, g.dt);
    auto n = static_cast<std::size_t>(std::bit_ceil(static_cast<std::uint64_t>(std::ceil(2.0 * half_span / dt))));
    n = std::max<std::size_t>(n, 2);
    return centered_time_grid(2.0 * half_span / static_cast<double>(n), n);
}

// ---------------------------------------------------------------------------
// QFI and derivatives

// 4 eta^{N-1} int dw |d beta~_N|^2, trapezoid rule.
inline double qfi_from_derivative(const FreqField& dbeta, double eta, std::size_t n_cavities)
{
    if (n_cavities < 1) throw ConfigError("cascade length must be >= 1", "N");
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]", "eta");
    return 4.0 * std::pow(eta, static_cast<double>(n_cavities - 1)) * trapezoid_abs2(dbeta);
}

// The single signal strength shared by all signals; derivatives are taken
// with respect to it.
inline double common_theta(const ChainConfig& cfg)
{
    const double theta = cfg.signals.at(0).theta_scale;
    for (const auto& s : cfg.signals)
        if (std::abs(s.theta_scale - theta) > 1e-12 * std::max(1.0, std::abs(theta)))
            throw ConfigError("metrology needs one common theta across all signals", "signals.theta");
    return theta;
}

inline ChainConfig with_theta(ChainConfig cfg, double theta)
{
    for (auto& s : cfg.signals) s.theta_scale = theta;
    return cfg;
}

// max_n |g_n / kappa_n| * max |shape_n|.
inline double effective_coupling(const ChainConfig& cfg)
{
    const auto unit = with_theta(cfg, 1.0);
    double e = 0.0;
    for (std::size_t n = 0; n < cfg.size(); ++n)
        e = std::max(e, std::abs(unit.cavities[n].epsilon()) * peak_amplitude(unit.signals[n]));
    return e;
}

// Central difference at theta = 0 with step 1e-4 / effective coupling.
inline FreqField finite_difference_derivative(const ChainConfig& cfg, const PulseParams& p, Method method,
                                              const TimeGrid& grid, const SolverOptions& opts = {})
{
    const double e = effective_coupling(cfg);
    if (!(e > 0.0)) throw NumericError("finite-difference step undefined: the effective coupling is zero");
    const double h = 1e-4 / e;
    const auto plus = solve(with_theta(cfg, h), p, method, grid, opts);
    const auto minus = solve(with_theta(cfg, -h), p, method, grid, opts);
    return (0.5 / h) * (plus.final_spectrum() - minus.final_spectrum());
}

// d beta~_N / d theta at theta = 0 (shifted frame, before bookkeeping).
// First-order forms are affine in theta, so a difference of two solves is
// exact; the stroboscopic phases are differentiated in closed form; the
// time-domain solver uses a central difference.
inline FreqField derivative_of_output(const ChainConfig& cfg, const PulseParams& p, Method method,
                                      const TimeGrid& grid, const SolverOptions& opts = {})
{
    cfg.validate();
    const Method m = resolve_method(method, cfg, p);
    const FreqGrid fg = conjugate(grid);
    switch (m) {
    case Method::Direct: return finite_difference_derivative(cfg, p, m, grid, opts);
    case Method::StrobWeak:
    case Method::StrobStrong: {
        const auto unit = with_theta(cfg, 1.0);
        const auto q0 = detail::arrival_amplitudes(unit);
        FreqField d(fg);
        for (std::size_t i = 0; i < fg.n_points; ++i) {
            const double w = fg.at(i);
            double phase = 0.0;
            double slope = 0.0;
            for (std::size_t k = 0; k < cfg.size(); ++k) {
                const auto& c = cfg.cavities[k];
                phase += response_phase(c, w);
                slope += 2.0 * c.epsilon() * q0[k] * detail::one_minus_cos(c, w);
            }
            d.values[i] = cplx(0.0, slope) * std::polar(gaussian_spectrum(p, w), phase);
        }
        return d;
    }
    default: {
        const auto one = solve(with_theta(cfg, 1.0), p, m, fg);
        const auto zero = solve(with_theta(cfg, 0.0), p, m, fg);
        return one.final_spectrum() - zero.final_spectrum();
    }
    }
}

// ---------------------------------------------------------------------------
// SNR bounds

struct MetrologyReport
{
    double qfi = 0.0;
    double snr_bound = 0.0;                 // theta sqrt(n_shots qfi)
    std::optional<double> snr_specialized;  // regime formula, when one exists
    double theta = 0.0;
    double n_shots = 1.0;
    std::size_t n_cavities = 1;
    double eta = 1.0;
    Regime regime = Regime::NumericOnly;
    Method method = Method::FirstOrder;
    Warnings notes;
};

namespace detail
{

inline double stroboscopic_snr(const ChainConfig& cfg, const PulseParams& p)
{
    const auto q0 = arrival_amplitudes(cfg);
    double sum = 0.0;
    for (std::size_t j = 0; j < cfg.size(); ++j)
        sum += cfg.cavities[j].epsilon() * q0[j] * one_minus_cos(cfg.cavities[j], 0.0);
    return 4.0 * std::sqrt(photon_number(p)) * std::abs(sum);
}

inline double cw_finite_snr(const ChainConfig& cfg, const PulseParams& p, const FreqGrid& grid)
{
    FreqField s(grid);
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        if (!spectral_lines(cfg.signals[k], k + 1, cfg.delay_T).empty())
            throw RegimeError("cw-finite bound needs finite signals");
        const cplx coef = sideband_coefficient(cfg.cavities[k]);
        for (std::size_t i = 0; i < grid.n_points; ++i)
            s.values[i] += coef * continuum_spectrum(cfg.signals[k], k + 1, cfg.delay_T, grid.at(i));
    }
    const double m = std::sqrt(p.tau * std::sqrt(constants::pi));
    return 2.0 * std::sqrt(photon_number(p)) / m * std::sqrt(trapezoid_abs2(s));
}

inline double cw_continuous_snr(const ChainConfig& cfg, const PulseParams& p)
{
    cplx lower{};
    cplx upper{};
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        if (cfg.signals[k].holds<Sampled>()) throw RegimeError("cw-continuous bound needs harmonic signals");
        const cplx coef = sideband_coefficient(cfg.cavities[k]);
        const cplx half = halfline_inverse_fourier(cfg.signals[k], k + 1, cfg.delay_T);
        lower += coef * std::conj(half);
        upper += coef * half;
    }
    return 2.0 * std::sqrt(photon_number(p)) * std::sqrt(std::norm(lower) + std::norm(upper));
}

} // namespace detail

// General bound theta sqrt(N_shots * QFI) from the first-order derivative, plus
// the specialised formula of `regime` (diagnosed when not given).
inline MetrologyReport snr_bound(const ChainConfig& cfg, const PulseParams& p, const TimeGrid& grid,
                                 std::optional<Regime> regime = std::nullopt, double n_shots = 1.0,
                                 Method method = Method::FirstOrder)
{
    cfg.validate();
    p.validate();
    if (!(n_shots >= 1.0)) throw ConfigError("n_shots must be >= 1", "n_shots");
    MetrologyReport r;
    r.theta = common_theta(cfg);
    r.n_shots = n_shots;
    r.n_cavities = cfg.size();
    r.eta = cfg.eta;
    r.method = resolve_method(method, cfg, p);
    const auto diag = diagnose_regime(cfg, p);
    r.regime = regime.value_or(diag.recommended);
    if (r.regime != diag.recommended)
        r.notes.push_back("requested regime " + std::string(to_string(r.regime)) + " differs from diagnosed " +
                          std::string(to_string(diag.recommended)));

    const auto d = derivative_of_output(cfg, p, r.method, grid);
    r.qfi = qfi_from_derivative(d, cfg.eta, cfg.size());
    r.snr_bound = std::abs(r.theta) * std::sqrt(n_shots * r.qfi);

    const double loss = std::pow(cfg.eta, 0.5 * static_cast<double>(cfg.size() - 1)) * std::sqrt(n_shots);
    switch (r.regime) {
    case Regime::Stroboscopic: r.snr_specialized = loss * detail::stroboscopic_snr(cfg, p); break;
    case Regime::CwFiniteSignal: r.snr_specialized = loss * detail::cw_finite_snr(cfg, p, conjugate(grid)); break;
    case Regime::CwContinuousSignal: r.snr_specialized = loss * detail::cw_continuous_snr(cfg, p); break;
    case Regime::NumericOnly: break;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Equal cavities

// Coherent over incoherent SNR for N equal cavities: sqrt(N) eta^{(N-1)/2}.
inline double equal_cavity_ratio(std::size_t n, double eta)
{
    if (n < 1) throw ConfigError("N must be >= 1", "N");
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]", "eta");
    return std::sqrt(static_cast<double>(n)) * std::pow(eta, 0.5 * static_cast<double>(n - 1));
}

struct OptimalLength
{
    std::size_t n_opt = 1;
    double ratio_max = 1.0;
    std::size_t candidate_low = 1;   // floor(-1 / ln eta)
    std::size_t candidate_high = 1;  // ceil(-1 / ln eta)
    bool matches_candidates = true;
    std::size_t integer_part_estimate = 0;  // floor(eta / (1 - eta))
    bool matches_integer_part = true;
};

// Brute-force maximiser of equal_cavity_ratio; ties go to the smaller N.
inline OptimalLength optimal_n(double eta)
{
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]", "eta");
    if (eta == 1.0) throw NumericError("without loss the ratio grows without bound; no optimal N");
    OptimalLength r;
    if (eta == 0.0) {
        r.matches_integer_part = true;
        return r;
    }
    const double x = -1.0 / std::log(eta);
    const auto upper = static_cast<std::size_t>(std::ceil(4.0 * x)) + 10;
    for (std::size_t n = 2; n <= upper; ++n) {
        const double v = equal_cavity_ratio(n, eta);
        if (v > r.ratio_max * (1.0 + 1e-12)) {
            r.ratio_max = v;
            r.n_opt = n;
        }
    }
    r.candidate_low = static_cast<std::size_t>(std::floor(x));
    r.candidate_high = static_cast<std::size_t>(std::ceil(x));
    r.matches_candidates = r.n_opt == r.candidate_low || r.n_opt == r.candidate_high;
    r.integer_part_estimate = static_cast<std::size_t>(std::floor(eta / (1.0 - eta)));
    r.matches_integer_part = r.n_opt == r.integer_part_estimate;
    return r;
}

// ---------------------------------------------------------------------------
// Thermal noise (single cavity, stroboscopic)

struct ThermalParams
{
    double temperature = 0.0;  // K
    double omega_m = 1.0;      // rad/s
    double q_amp = 1.0;        // signal amplitude at pulse arrival

    void validate() const
    {
        if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0", "thermal.temperature");
        if (!(omega_m > 0.0)) throw ConfigError("thermal omega_m must be > 0", "thermal.omega_m");
        if (!(q_amp != 0.0) || !std::isfinite(q_amp)) throw ConfigError("thermal Q must be nonzero", "thermal.Q");
    }
};

// Bose occupation 1 / (exp(hbar W / kB T) - 1); 0 at T = 0.
inline double thermal_occupation(double omega_m, double temperature)
{
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0", "temperature");
    if (temperature == 0.0) return 0.0;
    return 1.0 / std::expm1(constants::hbar * omega_m / (constants::k_boltzmann * temperature));
}

// 64 g^2 kappa^2 Q^2 N_in / (kappa^2 + 4 Delta^2)^2.
inline double qfi_free(double g, double kappa, double delta, double q_amp, double n_in)
{
    if (!(kappa > 0.0)) throw ConfigError("kappa must be > 0", "kappa");
    const double d = kappa * kappa + 4.0 * delta * delta;
    return 64.0 * g * g * kappa * kappa * q_amp * q_amp * n_in / (d * d);
}

struct ThermalCorrection
{
    double delta_h = 0.0;   // always <= 0
    double relative = 0.0;  // |delta_h| / h0
};

inline ThermalCorrection thermal_correction(double h0, const ThermalParams& t)
{
    t.validate();
    if (!(h0 >= 0.0)) throw ConfigError("h0 must be >= 0", "h0");
    const double factor = (2.0 * thermal_occupation(t.omega_m, t.temperature) + 1.0) / (2.0 * t.q_amp * t.q_amp);
    return {-factor * h0 * h0, factor * h0};
}

// Q^2 hbar W / (kB h0); infinite when h0 = 0.
inline double t_max(double h0, double omega_m, double q_amp)
{
    if (!(h0 >= 0.0)) throw ConfigError("h0 must be >= 0", "h0");
    if (h0 == 0.0) return std::numeric_limits<double>::infinity();
    return q_amp * q_amp * constants::hbar * omega_m / (constants::k_boltzmann * h0);
}

struct ThermalReport
{
    double h0 = 0.0;
    double n_bar = 0.0;
    double delta_h = 0.0;
    double relative = 0.0;
    double t_max = 0.0;
    double temperature = 0.0;
    bool valid = true;  // T <= T_max / 10
    Warnings notes;

    double total() const { return h0 + delta_h; }
};

// Thermal analysis of a stroboscopic chain. Corrections of several cavities
// are summed when `additive` is set; otherwise only one cavity is accepted.
inline ThermalReport thermal_analysis(const ChainConfig& cfg, const PulseParams& p, double temperature,
                                      bool additive = false)
{
    cfg.validate();
    p.validate();
    if (cfg.size() != 1 && !additive)
        throw RegimeError("thermal analysis covers a single cavity; enable additive corrections for chains");
    const auto diag = diagnose_regime(cfg, p);
    if (diag.recommended != Regime::Stroboscopic)
        throw RegimeError("thermal analysis needs a stroboscopic configuration (diagnosed " +
                          std::string(to_string(diag.recommended)) + ")");
    ThermalReport r;
    r.temperature = temperature;
    r.t_max = std::numeric_limits<double>::infinity();
    const double n_in = photon_number(p);
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        const auto& c = cfg.cavities[k];
        const auto& s = cfg.signals[k];
        const double omega = signal_band(s).omega;
        if (!(omega > 0.0)) throw RegimeError("thermal analysis needs an oscillating signal");
        ThermalParams t{temperature, omega, peak_amplitude(s)};
        const double h0 = qfi_free(c.g, c.kappa, c.delta, t.q_amp, n_in);
        const auto corr = thermal_correction(h0, t);
        r.h0 += h0;
        r.delta_h += corr.delta_h;
        r.n_bar = thermal_occupation(omega, temperature);
        r.t_max = std::min(r.t_max, t_max(h0, omega, t.q_amp));
    }
    if (cfg.size() > 1) r.notes.push_back("per-cavity corrections summed");
    r.relative = r.h0 > 0.0 ? -r.delta_h / r.h0 : 0.0;
    r.valid = temperature <= r.t_max / 10.0;
    return r;
}

} // namespace cascade
#endif // CASCADE_METROLOGY_HPP
