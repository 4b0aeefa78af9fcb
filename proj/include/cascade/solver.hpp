#ifndef CASCADE_SOLVER_HPP
#define CASCADE_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cascade/chain.hpp"
#include "cascade/errors.hpp"
#include "cascade/fields.hpp"

namespace cascade
{

struct SolverOptions
{
    double memory_cutoff = 40.0;  // kernel truncation in units of 1/kappa
    double rel_tolerance = 1e-6;  // self-convergence threshold
    bool check_convergence = false;

    void validate() const
    {
        if (!(memory_cutoff >= 10.0) || !std::isfinite(memory_cutoff))
            throw ConfigError("solver.memory_cutoff must be >= 10", "solver.memory_cutoff");
        if (!(rel_tolerance > 0.0)) throw ConfigError("solver.rel_tolerance must be > 0", "solver.rel_tolerance");
    }
};

// Largest kappa * dt accepted by the time-domain recursion.
inline constexpr double max_kappa_dt = 0.05;

struct CascadeSolution
{
    Method method = Method::Direct;
    std::vector<FreqField> spectra;           // beta~_n, shifted frame, n = 1..N
    std::vector<TimeField> fields;            // beta_n(t); time-domain solver only
    FreqField output_spectrum;                // lab-frame output after the last cavity
    std::optional<TimeField> output_field;    // lab-frame output in time; time-domain solver only
    Warnings warnings;

    const FreqField& final_spectrum() const { return spectra.back(); }
};

// ---------------------------------------------------------------------------
// Output bookkeeping: <b_N^out(t)> = eta^{N-1} beta_N(t - (N-1) T) e^{i (N-1) w_L T}.

inline cplx output_prefactor(const ChainConfig& cfg)
{
    const double m = static_cast<double>(cfg.size() - 1);
    return std::pow(cfg.eta, m) * std::polar(1.0, m * cfg.omega_L * cfg.delay_T);
}

inline TimeField apply_output_bookkeeping(const TimeField& beta_n, const ChainConfig& cfg)
{
    const double shift = static_cast<double>(cfg.size() - 1) * cfg.delay_T;
    const cplx pre = output_prefactor(cfg);
    TimeField out(TimeGrid{beta_n.grid.t_start + shift, beta_n.grid.dt, beta_n.grid.n_points});
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = pre * beta_n.values[i];
    return out;
}

// Frequency-domain form; the time shift becomes e^{i w (N-1) T}.
inline FreqField apply_output_bookkeeping(const FreqField& beta_n, const ChainConfig& cfg)
{
    const double shift = static_cast<double>(cfg.size() - 1) * cfg.delay_T;
    const cplx pre = output_prefactor(cfg);
    FreqField out(beta_n.grid);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] = pre * std::polar(1.0, beta_n.grid.at(i) * shift) * beta_n.values[i];
    return out;
}

inline CascadeSolution apply_output_bookkeeping(CascadeSolution sol, const ChainConfig& cfg)
{
    sol.output_spectrum = apply_output_bookkeeping(sol.final_spectrum(), cfg);
    if (!sol.fields.empty()) sol.output_field = apply_output_bookkeeping(sol.fields.back(), cfg);
    return sol;
}

namespace detail
{

inline void regime_check(const ChainConfig& cfg, const PulseParams& p, Regime expected, Method m, Warnings& w)
{
    const auto d = diagnose_regime(cfg, p);
    if (d.recommended != expected)
        w.push_back(std::string(to_string(m)) + " used outside its validity window (diagnosed " +
                    std::string(to_string(d.recommended)) + ")");
}

// Q_n(0) for every cavity.
inline std::vector<double> arrival_amplitudes(const ChainConfig& cfg)
{
    std::vector<double> q(cfg.size());
    for (std::size_t n = 0; n < cfg.size(); ++n) q[n] = shifted_profile(cfg.signals[n], n + 1, cfg.delay_T, 0.0);
    return q;
}

// 1 - cos phi(w) = 2 / (1 + 4 (w - Delta)^2 / kappa^2).
inline double one_minus_cos(const CavityParams& c, double omega)
{
    const double x = 2.0 * (omega - c.delta) / c.kappa;
    return 2.0 / (1.0 + x * x);
}

// One cavity of the time-domain recursion. The memory integral
// int_0^inf dt' e^{-G(t) t'} beta(t - t') is truncated after M steps and
// evaluated with the trapezoid rule; S_i = sum_{j=0}^{M} u_i^j beta[i-j].
inline std::vector<cplx> direct_pass(const std::vector<cplx>& beta, const std::vector<cplx>& u,
                                     const std::vector<cplx>& u_m, const std::vector<cplx>& u_m1, double kappa_dt,
                                     std::size_t m)
{
    const std::size_t n = beta.size();
    const std::size_t off = m + 1;
    std::vector<double> re(n + off + 4, 0.0);
    std::vector<double> im(n + off + 4, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        re[i + off] = beta[i].real();
        im[i + off] = beta[i].imag();
    }
    auto at = [&](std::size_t padded) { return cplx(re[padded], im[padded]); };

    std::vector<cplx> out(n);
    cplx s_prev{};
    std::size_t i = 0;
    while (i < n) {
        if (i > 0 && u[i] == u[i - 1]) {
            // Same kernel as the previous sample: slide the window.
            const cplx s = beta[i] + u[i] * s_prev - u_m1[i] * at(i + off - m - 1);
            out[i] = beta[i] - kappa_dt * (s - 0.5 * beta[i] - 0.5 * u_m[i] * at(i + off - m));
            s_prev = s;
            ++i;
            continue;
        }
        // Horner evaluation, four outputs at a time.
        const std::size_t lanes = std::min<std::size_t>(4, n - i);
        double ur[4] = {0, 0, 0, 0};
        double ui[4] = {0, 0, 0, 0};
        for (std::size_t l = 0; l < lanes; ++l) {
            ur[l] = u[i + l].real();
            ui[l] = u[i + l].imag();
        }
        double ar[4] = {0, 0, 0, 0};
        double ai[4] = {0, 0, 0, 0};
        for (std::size_t j = m + 1; j-- > 0;) {
            const std::size_t base = i + off - j;
            for (std::size_t l = 0; l < 4; ++l) {
                const double xr = ar[l] * ur[l] - ai[l] * ui[l] + re[base + l];
                const double xi = ar[l] * ui[l] + ai[l] * ur[l] + im[base + l];
                ar[l] = xr;
                ai[l] = xi;
            }
        }
        for (std::size_t l = 0; l < lanes; ++l) {
            const std::size_t k = i + l;
            const cplx s(ar[l], ai[l]);
            out[k] = beta[k] - kappa_dt * (s - 0.5 * beta[k] - 0.5 * u_m[k] * at(k + off - m));
            s_prev = s;
        }
        i += lanes;
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Time-domain recursion (exact at any coupling).

inline CascadeSolution solve_direct(const ChainConfig& cfg, const PulseParams& p, const TimeGrid& grid,
                                    const SolverOptions& opts = {})
{
    cfg.validate();
    opts.validate();
    grid.validate();
    if (grid.dt * cfg.max_kappa() > max_kappa_dt)
        throw GridError("time step does not resolve the cavity response (kappa * dt > " +
                        std::to_string(max_kappa_dt) + ")");

    CascadeSolution sol;
    sol.method = Method::Direct;
    TimeField beta = gaussian_pulse(p, grid);
    const std::size_t n_t = grid.n_points;
    std::vector<cplx> u(n_t);
    std::vector<cplx> u_m(n_t);
    std::vector<cplx> u_m1(n_t);

    for (std::size_t n = 1; n <= cfg.size(); ++n) {
        const auto& c = cfg.cavities[n - 1];
        const auto& s = cfg.signals[n - 1];
        const auto m = static_cast<std::size_t>(std::ceil(opts.memory_cutoff / (c.kappa * grid.dt)));
        Warnings profile_warnings;
        for (std::size_t i = 0; i < n_t; ++i) {
            const double q = c.g == 0.0 ? 0.0 : shifted_profile(s, n, cfg.delay_T, grid.at(i), &profile_warnings);
            const cplx g_t = c.gamma() - cplx(0.0, c.g * q);
            u[i] = std::exp(-g_t * grid.dt);
            u_m[i] = std::exp(-g_t * (static_cast<double>(m) * grid.dt));
            u_m1[i] = std::exp(-g_t * (static_cast<double>(m + 1) * grid.dt));
        }
        if (!profile_warnings.empty())
            sol.warnings.push_back("cavity " + std::to_string(n) + ": " + profile_warnings.front());
        beta = TimeField(grid, detail::direct_pass(beta.values, u, u_m, u_m1, c.kappa * grid.dt, m));
        sol.fields.push_back(beta);
        sol.spectra.push_back(forward_transform(beta));
    }

    if (opts.check_convergence) {
        SolverOptions fine_opts = opts;
        fine_opts.check_convergence = false;
        const TimeGrid fine{grid.t_start, grid.dt / 2.0, grid.n_points * 2};
        const auto fine_sol = solve_direct(cfg, p, fine, fine_opts);
        const double coarse_norm = std::sqrt(trapezoid_abs2(sol.fields.back()));
        const double fine_norm = std::sqrt(trapezoid_abs2(fine_sol.fields.back()));
        const double change = coarse_norm > 0.0 ? std::abs(fine_norm - coarse_norm) / coarse_norm : 0.0;
        if (change > opts.rel_tolerance)
            sol.warnings.push_back("not converged: halving dt changes the output norm by " + std::to_string(change));
    }
    return apply_output_bookkeeping(std::move(sol), cfg);
}

// ---------------------------------------------------------------------------
// First-order (in g Q / kappa) frequency-space solution.
//
// beta~_n = P_n beta~ + R_n with P_n = e^{i sum_{j<=n} phi_j} and
// R_n = e^{i phi_n} R_{n-1} - i eps_n L_n[P_{n-1} beta~].

namespace detail
{

// P_{k}(x) = prod_{j<k} e^{i phi_j(x)} (k is the number of factors).
inline cplx filter_product(const ChainConfig& cfg, std::size_t k, double x)
{
    cplx acc(1.0, 0.0);
    for (std::size_t j = 0; j < k; ++j) acc *= response_factor(cfg.cavities[j], x);
    return acc;
}

// Integrand partner of L_k: B_k(x) = [1 - e^{i phi_k(x)}]^2 P_{k-1}(x) beta~(x).
inline cplx source_term(const ChainConfig& cfg, const PulseParams& p, std::size_t k, double x)
{
    return response_kernel(cfg.cavities[k - 1], x) * filter_product(cfg, k - 1, x) * gaussian_spectrum(p, x);
}

// |beta~(x)| < e^{-40} beta_bar tau beyond this offset.
inline double pulse_reach(const PulseParams& p) { return 9.0 / p.tau; }

// L_k[P_{k-1} beta~](w_i) on the output grid.
inline std::vector<cplx> l_operator(const ChainConfig& cfg, const PulseParams& p, std::size_t k, const FreqGrid& grid)
{
    const auto& s = cfg.signals[k - 1];
    const std::size_t n = grid.n_points;
    const double root = std::sqrt(constants::two_pi);
    const double reach = pulse_reach(p);
    std::vector<cplx> l(n);

    for (const auto& line : spectral_lines(s, k, cfg.delay_T)) {
        const cplx w = line.weight / root;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.at(i) - line.omega;
            if (std::abs(x) <= reach) l[i] += w * source_term(cfg, p, k, x);
        }
    }
    if (!has_continuum(s) || s.theta_scale == 0.0) return l;

    // Rectangle rule on a fine grid aligned with the output grid, so that
    // w_i - Omega_m = x_{iq - m}. The step keeps the aliasing period beyond
    // the time support of the integrand.
    const double delay = std::abs(static_cast<double>(k - 1) * cfg.delay_T);
    const double extent = 9.0 * p.tau + time_extent(s) + delay + 60.0 * static_cast<double>(k) / cfg.min_kappa();
    const double h_target = constants::pi / extent;
    const auto q = static_cast<std::int64_t>(std::max(1.0, std::ceil(grid.d_omega / h_target)));
    const double h = grid.d_omega / static_cast<double>(q);
    const double w0 = grid.omega_start;

    const auto j_lo = static_cast<std::int64_t>(std::ceil((-reach - w0) / h));
    const auto j_hi = static_cast<std::int64_t>(std::floor((reach - w0) / h));
    if (j_hi < j_lo) return l;
    std::vector<cplx> b(static_cast<std::size_t>(j_hi - j_lo + 1));
    for (std::int64_t j = j_lo; j <= j_hi; ++j)
        b[static_cast<std::size_t>(j - j_lo)] = source_term(cfg, p, k, w0 + static_cast<double>(j) * h);

    const auto last = static_cast<std::int64_t>(n - 1);
    const std::int64_t m_reach_lo = -j_hi;
    const std::int64_t m_reach_hi = last * q - j_lo;
    for (const auto& [lo, hi] : continuum_support(s)) {
        const auto m_lo = std::max(static_cast<std::int64_t>(std::ceil(lo / h)), m_reach_lo);
        const auto m_hi = std::min(static_cast<std::int64_t>(std::floor(hi / h)), m_reach_hi);
        for (std::int64_t m = m_lo; m <= m_hi; ++m) {
            const cplx qm = continuum_spectrum(s, k, cfg.delay_T, static_cast<double>(m) * h) * (h / root);
            if (qm == cplx{}) continue;
            // Outputs with j_lo <= i q - m <= j_hi.
            const auto num_lo = m + j_lo;
            const auto num_hi = m + j_hi;
            auto i_lo = num_lo >= 0 ? (num_lo + q - 1) / q : -((-num_lo) / q);
            auto i_hi = num_hi >= 0 ? num_hi / q : -((-num_hi + q - 1) / q);
            i_lo = std::max<std::int64_t>(i_lo, 0);
            i_hi = std::min(i_hi, last);
            for (std::int64_t i = i_lo; i <= i_hi; ++i)
                l[static_cast<std::size_t>(i)] += qm * b[static_cast<std::size_t>(i * q - m - j_lo)];
        }
    }
    return l;
}

} // namespace detail

inline CascadeSolution solve_first_order(const ChainConfig& cfg, const PulseParams& p, const FreqGrid& grid)
{
    cfg.validate();
    p.validate();
    grid.validate();
    CascadeSolution sol;
    sol.method = Method::FirstOrder;
    const std::size_t n = grid.n_points;

    std::vector<cplx> filter(n, cplx(1.0, 0.0));
    std::vector<cplx> rest(n);
    std::vector<double> carrier(n);
    for (std::size_t i = 0; i < n; ++i) carrier[i] = gaussian_spectrum(p, grid.at(i));

    for (std::size_t k = 1; k <= cfg.size(); ++k) {
        const auto& c = cfg.cavities[k - 1];
        const double eps = c.epsilon();
        const double coupling = std::abs(eps) * peak_amplitude(cfg.signals[k - 1]);
        if (std::abs(eps) > weak_coupling_limit)
            sol.warnings.push_back("cavity " + std::to_string(k) + ": g/kappa = " + std::to_string(eps) +
                                   " exceeds the weak-coupling limit");
        if (coupling > weak_coupling_limit)
            sol.warnings.push_back("cavity " + std::to_string(k) + ": g|Q|/kappa = " + std::to_string(coupling) +
                                   " exceeds the weak-coupling limit");

        std::vector<cplx> l;
        if (eps != 0.0) l = detail::l_operator(cfg, p, k, grid);
        for (std::size_t i = 0; i < n; ++i) {
            const cplx e = response_factor(c, grid.at(i));
            rest[i] = e * rest[i];
            if (!l.empty()) rest[i] -= cplx(0.0, eps) * l[i];
            filter[i] *= e;
        }
        FreqField f(grid);
        for (std::size_t i = 0; i < n; ++i) f.values[i] = filter[i] * carrier[i] + rest[i];
        sol.spectra.push_back(std::move(f));
    }
    return apply_output_bookkeeping(std::move(sol), cfg);
}

// ---------------------------------------------------------------------------
// Closed forms.

// Stroboscopic, weak coupling: cumulative phase
// sum_j [phi_j(w) + 2 eps_j Q_j(0) (1 - cos phi_j(w))].
inline CascadeSolution solve_stroboscopic_weak(const ChainConfig& cfg, const PulseParams& p, const FreqGrid& grid)
{
    cfg.validate();
    CascadeSolution sol;
    sol.method = Method::StrobWeak;
    detail::regime_check(cfg, p, Regime::Stroboscopic, sol.method, sol.warnings);
    const auto q0 = detail::arrival_amplitudes(cfg);
    std::vector<double> phase(grid.n_points, 0.0);
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        const auto& c = cfg.cavities[k];
        FreqField f(grid);
        for (std::size_t i = 0; i < grid.n_points; ++i) {
            const double w = grid.at(i);
            phase[i] += response_phase(c, w) + 2.0 * c.epsilon() * q0[k] * detail::one_minus_cos(c, w);
            f.values[i] = std::polar(gaussian_spectrum(p, w), phase[i]);
        }
        sol.spectra.push_back(std::move(f));
    }
    return apply_output_bookkeeping(std::move(sol), cfg);
}

// Stroboscopic at any coupling: e^{i chi_n(w)} = e^{i phi_n(w + g_n Q_n(0))}.
inline CascadeSolution solve_stroboscopic_strong(const ChainConfig& cfg, const PulseParams& p,
                                                 const FreqGrid& grid)
{
    cfg.validate();
    CascadeSolution sol;
    sol.method = Method::StrobStrong;
    detail::regime_check(cfg, p, Regime::Stroboscopic, sol.method, sol.warnings);
    const auto q0 = detail::arrival_amplitudes(cfg);
    std::vector<cplx> acc(grid.n_points);
    for (std::size_t i = 0; i < grid.n_points; ++i) acc[i] = gaussian_spectrum(p, grid.at(i));
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        const auto& c = cfg.cavities[k];
        FreqField f(grid);
        for (std::size_t i = 0; i < grid.n_points; ++i) {
            acc[i] *= response_factor(c, grid.at(i) + c.g * q0[k]);
            f.values[i] = acc[i];
        }
        sol.spectra.push_back(std::move(f));
    }
    return apply_output_bookkeeping(std::move(sol), cfg);
}

// Sideband weight (g_k kappa_k / Gamma_k^2) e^{-i phi_k(0)}.
inline cplx sideband_coefficient(const CavityParams& c)
{
    const cplx gm = c.gamma();
    return c.g * c.kappa / (gm * gm) * std::polar(1.0, -response_phase(c, 0.0));
}

// CW regime, finite signals: sidebands shaped by Q~_k.
inline CascadeSolution solve_cw_finite(const ChainConfig& cfg, const PulseParams& p, const FreqGrid& grid)
{
    cfg.validate();
    for (std::size_t k = 0; k < cfg.size(); ++k)
        if (!spectral_lines(cfg.signals[k], k + 1, cfg.delay_T).empty())
            throw RegimeError("cw-finite needs signals of finite duration; signal " + std::to_string(k) +
                              " has a line spectrum");
    CascadeSolution sol;
    sol.method = Method::CwFinite;
    detail::regime_check(cfg, p, Regime::CwFiniteSignal, sol.method, sol.warnings);
    const std::size_t n = grid.n_points;
    std::vector<cplx> side(n);
    double carrier_phase = 0.0;
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        const auto& c = cfg.cavities[k];
        carrier_phase += response_phase(c, 0.0);
        const cplx coef = sideband_coefficient(c);
        if (coef != cplx{} && cfg.signals[k].theta_scale != 0.0)
            for (std::size_t i = 0; i < n; ++i)
                side[i] += coef * continuum_spectrum(cfg.signals[k], k + 1, cfg.delay_T, grid.at(i));
        FreqField f(grid);
        const cplx global = std::polar(1.0, carrier_phase);
        for (std::size_t i = 0; i < n; ++i)
            f.values[i] = global * (gaussian_spectrum(p, grid.at(i)) - cplx(0.0, p.beta_bar) * side[i]);
        sol.spectra.push_back(std::move(f));
    }
    return apply_output_bookkeeping(std::move(sol), cfg);
}

// CW regime, continuous harmonic signals: pulse-shaped sidebands at w -+ Omega_k.
inline CascadeSolution solve_cw_continuous(const ChainConfig& cfg, const PulseParams& p, const FreqGrid& grid)
{
    cfg.validate();
    std::vector<double> omega(cfg.size());
    std::vector<cplx> half(cfg.size());
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        const auto& s = cfg.signals[k];
        if (s.holds<Sampled>())
            throw RegimeError("cw-continuous needs harmonic or constant signals; signal " + std::to_string(k) +
                              " is sampled");
        omega[k] = signal_band(s).omega;
        half[k] = halfline_inverse_fourier(s, k + 1, cfg.delay_T);
    }
    CascadeSolution sol;
    sol.method = Method::CwContinuous;
    detail::regime_check(cfg, p, Regime::CwContinuousSignal, sol.method, sol.warnings);
    const std::size_t n = grid.n_points;
    std::vector<cplx> side(n);
    double carrier_phase = 0.0;
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        const auto& c = cfg.cavities[k];
        carrier_phase += response_phase(c, 0.0);
        const cplx coef = sideband_coefficient(c);
        if (coef != cplx{} && half[k] != cplx{})
            for (std::size_t i = 0; i < n; ++i) {
                const double w = grid.at(i);
                side[i] += coef * (gaussian_spectrum(p, w + omega[k]) * std::conj(half[k]) +
                                   gaussian_spectrum(p, w - omega[k]) * half[k]);
            }
        FreqField f(grid);
        const cplx global = std::polar(1.0, carrier_phase);
        for (std::size_t i = 0; i < n; ++i)
            f.values[i] = global * (gaussian_spectrum(p, grid.at(i)) - cplx(0.0, 1.0) * side[i]);
        sol.spectra.push_back(std::move(f));
    }
    return apply_output_bookkeeping(std::move(sol), cfg);
}

// ---------------------------------------------------------------------------
// Dispatch. Frequency-space methods run on the grid conjugate to `grid`.

inline Method resolve_method(Method m, const ChainConfig& cfg, const PulseParams& p)
{
    return m == Method::Auto ? resolve_auto(diagnose_regime(cfg, p)) : m;
}

inline CascadeSolution solve(const ChainConfig& cfg, const PulseParams& p, Method method, const TimeGrid& grid,
                             const SolverOptions& opts = {})
{
    const Method m = resolve_method(method, cfg, p);
    const FreqGrid fg = conjugate(grid);
    switch (m) {
    case Method::Direct: return solve_direct(cfg, p, grid, opts);
    case Method::FirstOrder: return solve_first_order(cfg, p, fg);
    case Method::StrobWeak: return solve_stroboscopic_weak(cfg, p, fg);
    case Method::StrobStrong: return solve_stroboscopic_strong(cfg, p, fg);
    case Method::CwFinite: return solve_cw_finite(cfg, p, fg);
    case Method::CwContinuous: return solve_cw_continuous(cfg, p, fg);
    case Method::Auto: break;
    }
    throw ConfigError("unresolved method", "method");
}

// Frequency-space methods only.
inline CascadeSolution solve(const ChainConfig& cfg, const PulseParams& p, Method method, const FreqGrid& grid)
{
    const Method m = resolve_method(method, cfg, p);
    switch (m) {
    case Method::FirstOrder: return solve_first_order(cfg, p, grid);
    case Method::StrobWeak: return solve_stroboscopic_weak(cfg, p, grid);
    case Method::StrobStrong: return solve_stroboscopic_strong(cfg, p, grid);
    case Method::CwFinite: return solve_cw_finite(cfg, p, grid);
    case Method::CwContinuous: return solve_cw_continuous(cfg, p, grid);
    case Method::Direct: return solve_direct(cfg, p, conjugate(grid));
    case Method::Auto: break;
    }
    throw ConfigError("unresolved method", "method");
}

} // namespace cascade
#endif // CASCADE_SOLVER_HPP
