#ifndef CASCADE_FIELDS_HPP
#define CASCADE_FIELDS_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include "cascade/constants.hpp"
#include "cascade/errors.hpp"

namespace cascade
{

using cplx = std::complex<double>;

// Uniform sampling t_i = t_start + i * dt, i < n_points.
struct TimeGrid
{
    double t_start = 0.0;
    double dt = 1.0;
    std::size_t n_points = 2;

    double at(std::size_t i) const { return t_start + static_cast<double>(i) * dt; }
    double start() const { return t_start; }
    double step() const { return dt; }
    std::size_t size() const { return n_points; }
    // Exclusive end of the periodic span.
    double span_end() const { return t_start + static_cast<double>(n_points) * dt; }

    void validate() const
    {
        if (!(dt > 0.0) || !std::isfinite(dt) || !std::isfinite(t_start))
            throw GridError("time grid requires finite dt > 0");
        if (n_points < 2) throw GridError("time grid requires n_points >= 2");
    }

    bool operator==(const TimeGrid&) const = default;
};

// Uniform sampling of the rotating-frame offset omega - omega_L.
struct FreqGrid
{
    double omega_start = 0.0;
    double d_omega = 1.0;
    std::size_t n_points = 2;

    double at(std::size_t i) const { return omega_start + static_cast<double>(i) * d_omega; }
    double start() const { return omega_start; }
    double step() const { return d_omega; }
    std::size_t size() const { return n_points; }
    double span_end() const { return omega_start + static_cast<double>(n_points) * d_omega; }

    void validate() const
    {
        if (!(d_omega > 0.0) || !std::isfinite(d_omega) || !std::isfinite(omega_start))
            throw GridError("frequency grid requires finite d_omega > 0");
        if (n_points < 2) throw GridError("frequency grid requires n_points >= 2");
    }

    bool operator==(const FreqGrid&) const = default;
};

// Complex samples on a uniform grid. Time-domain values are in sqrt(photons/s),
// frequency-domain values carry the symmetric 1/sqrt(2 pi) convention.
template <class Grid>
struct Field
{
    Grid grid;
    std::vector<cplx> values;

    Field() = default;
    Field(Grid g, std::vector<cplx> v) : grid(g), values(std::move(v)) { validate(); }
    explicit Field(Grid g) : grid(g), values(g.n_points, cplx{}) { grid.validate(); }

    void validate() const
    {
        grid.validate();
        if (values.size() != grid.n_points)
            throw GridError("field length does not match its grid");
        for (const auto& v : values)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw NumericError("field contains non-finite samples");
    }

    std::size_t size() const { return values.size(); }
    double coordinate(std::size_t i) const { return grid.at(i); }
};

using TimeField = Field<TimeGrid>;
using FreqField = Field<FreqGrid>;

struct PulseParams
{
    double beta_bar = 1.0;  // peak amplitude, sqrt(photons/s)
    double tau = 1.0;       // pulse length, s

    void validate() const
    {
        if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("pulse.tau must be > 0", "pulse.tau");
        if (!(beta_bar >= 0.0) || !std::isfinite(beta_bar))
            throw ConfigError("pulse.beta_bar must be >= 0", "pulse.beta_bar");
    }
};

// Grid centred on t = 0, so that index n/2 is exactly t = 0.
inline TimeGrid centered_time_grid(double dt, std::size_t n)
{
    TimeGrid g{-static_cast<double>(n / 2) * dt, dt, n};
    g.validate();
    return g;
}

inline FreqGrid centered_freq_grid(double d_omega, std::size_t n)
{
    FreqGrid g{-static_cast<double>(n / 2) * d_omega, d_omega, n};
    g.validate();
    return g;
}

// d_omega = 2 pi / (n dt), centred on zero offset.
inline FreqGrid conjugate(const TimeGrid& g)
{
    g.validate();
    return centered_freq_grid(constants::two_pi / (static_cast<double>(g.n_points) * g.dt), g.n_points);
}

inline TimeGrid conjugate(const FreqGrid& g)
{
    g.validate();
    return centered_time_grid(constants::two_pi / (static_cast<double>(g.n_points) * g.d_omega), g.n_points);
}

inline bool are_conjugate(const TimeGrid& t, const FreqGrid& f)
{
    const double product = t.dt * f.d_omega * static_cast<double>(t.n_points);
    return t.n_points == f.n_points && std::abs(product / constants::two_pi - 1.0) < 1e-12;
}

// Smallest power-of-two grid with dt <= min(1/(20 max kappa), tau/50) whose span
// covers +-max(6 tau, 40/min kappa).
inline TimeGrid default_time_grid(const PulseParams& p, double min_kappa, double max_kappa)
{
    p.validate();
    if (!(min_kappa > 0.0) || !(max_kappa >= min_kappa))
        throw ConfigError("grid sizing needs 0 < min kappa <= max kappa");
    const double dt_max = std::min(1.0 / (20.0 * max_kappa), p.tau / 50.0);
    const double half_span = std::max(6.0 * p.tau, 40.0 / min_kappa);
    const auto needed = static_cast<std::uint64_t>(std::ceil(2.0 * half_span / dt_max));
    const std::uint64_t n = std::bit_ceil(std::max<std::uint64_t>(needed, 2));
    return centered_time_grid(2.0 * half_span / static_cast<double>(n), static_cast<std::size_t>(n));
}

inline double gaussian_value(const PulseParams& p, double t)
{
    return p.beta_bar * std::exp(-t * t / (2.0 * p.tau * p.tau));
}

// Transform of beta_bar exp(-t^2/2tau^2) under the symmetric e^{+i w t} convention.
inline double gaussian_spectrum(const PulseParams& p, double omega)
{
    return p.beta_bar * p.tau * std::exp(-p.tau * p.tau * omega * omega / 2.0);
}

inline bool covers_pulse(const TimeGrid& g, const PulseParams& p)
{
    const double reach = 6.0 * p.tau * (1.0 - 1e-12);
    return g.t_start <= -reach && g.span_end() >= reach;
}

inline TimeField gaussian_pulse(const PulseParams& p, const TimeGrid& grid)
{
    p.validate();
    grid.validate();
    if (!covers_pulse(grid, p))
        throw GridError("time grid does not cover +-6 tau around the pulse centre");
    TimeField f(grid);
    for (std::size_t i = 0; i < grid.n_points; ++i) f.values[i] = gaussian_value(p, grid.at(i));
    return f;
}

inline FreqField gaussian_pulse_spectrum(const PulseParams& p, const FreqGrid& grid)
{
    p.validate();
    FreqField f(grid);
    for (std::size_t i = 0; i < grid.n_points; ++i) f.values[i] = gaussian_spectrum(p, grid.at(i));
    return f;
}

namespace detail
{

inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

// Unnormalised in-place DFT; sign = +1 computes sum_j x_j e^{+2 pi i jk/n}.
inline void dft_inplace(std::vector<cplx>& data, int sign)
{
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan = nullptr;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(data.size()), ptr, ptr,
                                sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    if (plan == nullptr) throw NumericError("FFT planning failed");
    fftw_execute(plan);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

// Phase factor e^{i 2 pi (offset * j) / n}, computed from exact integer residues
// whenever the grid offset is an integer number of steps.
class GridPhase
{
public:
    GridPhase(double offset_steps, std::size_t n) : n_(static_cast<std::int64_t>(n))
    {
        const double r = std::round(offset_steps);
        integral_ = std::abs(offset_steps - r) < 1e-9;
        int_offset_ = static_cast<std::int64_t>(r);
        offset_ = offset_steps;
    }

    cplx operator()(std::int64_t j) const
    {
        if (integral_) {
            std::int64_t m = (int_offset_ % n_) * (j % n_) % n_;
            if (m < 0) m += n_;
            return std::polar(1.0, constants::two_pi * static_cast<double>(m) / static_cast<double>(n_));
        }
        return std::polar(1.0, constants::two_pi * offset_ * static_cast<double>(j) / static_cast<double>(n_));
    }

private:
    std::int64_t n_;
    std::int64_t int_offset_ = 0;
    double offset_ = 0.0;
    bool integral_ = false;
};

// e^{i omega_0 t_0} = e^{2 pi i s r / n}.
inline cplx corner_phase(double s, double r, std::size_t n)
{
    const double rr = std::round(r);
    if (std::abs(r - rr) < 1e-9) return GridPhase(s, n)(static_cast<std::int64_t>(rr));
    return std::polar(1.0, constants::two_pi * s * r / static_cast<double>(n));
}

} // namespace detail

// beta~(w) = int dt e^{i w t} beta(t) / sqrt(2 pi), evaluated on the grid conjugate
// to the input (or on `target`, which must be conjugate).
inline FreqField forward_transform(const TimeField& f, std::optional<FreqGrid> target = std::nullopt)
{
    f.validate();
    const FreqGrid out = target.value_or(conjugate(f.grid));
    if (!are_conjugate(f.grid, out)) throw GridError("frequency grid is not conjugate to the time grid");
    const std::size_t n = f.size();
    // omega_k t_j = 2 pi (s + k)(r + j) / n with s = omega_0/d_omega, r = t_0/dt.
    const double s = out.omega_start / out.d_omega;
    const double r = f.grid.t_start / f.grid.dt;
    const detail::GridPhase pre(s, n);
    const detail::GridPhase post(r, n);

    std::vector<cplx> data(n);
    for (std::size_t j = 0; j < n; ++j) data[j] = f.values[j] * pre(static_cast<std::int64_t>(j));
    detail::dft_inplace(data, +1);
    const double scale = f.grid.dt / std::sqrt(constants::two_pi);
    const cplx corner = detail::corner_phase(s, r, n);
    for (std::size_t k = 0; k < n; ++k)
        data[k] *= scale * corner * post(static_cast<std::int64_t>(k));
    return FreqField(out, std::move(data));
}

// beta(t) = int dw e^{-i w t} beta~(w) / sqrt(2 pi); exact inverse of forward_transform.
inline TimeField inverse_transform(const FreqField& f, std::optional<TimeGrid> target = std::nullopt)
{
    f.validate();
    const TimeGrid out = target.value_or(conjugate(f.grid));
    if (!are_conjugate(out, f.grid)) throw GridError("time grid is not conjugate to the frequency grid");
    const std::size_t n = f.size();
    const double s = f.grid.omega_start / f.grid.d_omega;
    const double r = out.t_start / out.dt;
    const detail::GridPhase pre(r, n);
    const detail::GridPhase post(s, n);

    std::vector<cplx> data(n);
    for (std::size_t k = 0; k < n; ++k) data[k] = f.values[k] * std::conj(pre(static_cast<std::int64_t>(k)));
    detail::dft_inplace(data, -1);
    const double scale = f.grid.d_omega / std::sqrt(constants::two_pi);
    const cplx corner = std::conj(detail::corner_phase(s, r, n));
    for (std::size_t j = 0; j < n; ++j)
        data[j] *= scale * corner * std::conj(post(static_cast<std::int64_t>(j)));
    return TimeField(out, std::move(data));
}

// Riemann sum of |f|^2 over one grid period; the periodic trapezoid rule, for
// which the discrete transform pair is exactly norm preserving.
template <class Grid>
double integrate_abs2(const Field<Grid>& f)
{
    double acc = 0.0;
    for (const auto& v : f.values) acc += std::norm(v);
    return acc * f.grid.step();
}

// Open trapezoid rule with half weights at both ends.
template <class Grid>
double trapezoid_abs2(const Field<Grid>& f)
{
    if (f.size() < 2) return 0.0;
    double acc = 0.5 * (std::norm(f.values.front()) + std::norm(f.values.back()));
    for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += std::norm(f.values[i]);
    return acc * f.grid.step();
}

// ||a - b|| / ||b|| over the common grid.
template <class Grid>
double relative_l2(const Field<Grid>& a, const Field<Grid>& b)
{
    if (!(a.grid == b.grid)) throw GridError("relative_l2 needs identical grids");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a.values[i] - b.values[i]);
        den += std::norm(b.values[i]);
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

// Number of photons in the input pulse, sqrt(pi) tau beta_bar^2.
inline double photon_number(const PulseParams& p)
{
    p.validate();
    return std::sqrt(constants::pi) * p.tau * p.beta_bar * p.beta_bar;
}

inline double photon_number(const TimeField& beta) { return trapezoid_abs2(beta); }

// Peak amplitude giving `n_in` photons for pulse length tau.
inline double beta_bar_for_photons(double n_in, double tau)
{
    return std::sqrt(n_in / (std::sqrt(constants::pi) * tau));
}

template <class Grid>
Field<Grid> operator-(const Field<Grid>& a, const Field<Grid>& b)
{
    if (!(a.grid == b.grid)) throw GridError("field difference needs identical grids");
    Field<Grid> out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = a.values[i] - b.values[i];
    return out;
}

template <class Grid>
Field<Grid> operator*(double s, Field<Grid> f)
{
    for (auto& v : f.values) v *= s;
    return f;
}

} // namespace cascade
#endif // CASCADE_FIELDS_HPP
