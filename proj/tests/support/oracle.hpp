#ifndef CASCADE_TESTS_ORACLE_HPP
#define CASCADE_TESTS_ORACLE_HPP

// Brute-force reference implementations, written without reusing library code.

#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace oracle
{

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

// O(n^2) transform: sum_j e^{+i w_k t_j} f_j dt / sqrt(2 pi).
inline std::vector<cplx> dft(const std::vector<cplx>& f, double t0, double dt, double w0, double dw)
{
    std::vector<cplx> out(f.size());
    const double scale = dt / std::sqrt(2.0 * pi);
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double w = w0 + dw * static_cast<double>(k);
        cplx acc;
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double t = t0 + dt * static_cast<double>(j);
            acc += std::polar(1.0, w * t) * f[j];
        }
        out[k] = acc * scale;
    }
    return out;
}

// Composite Simpson on [a, b] with an even number of panels.
inline cplx simpson(const std::function<cplx(double)>& f, double a, double b, std::size_t panels)
{
    if (panels % 2 != 0) ++panels;
    const double h = (b - a) / static_cast<double>(panels);
    cplx acc = f(a) + f(b);
    for (std::size_t i = 1; i < panels; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
    return acc * (h / 3.0);
}

// Cavity driven by beta_in(t) with a time-dependent shift:
//   a' = -(Gamma - i g Q(t)) a - sqrt(kappa) beta_in,  beta_out = beta_in + sqrt(kappa) a.
// Classical RK4 from t0 with a(t0) = 0, output sampled every `dt`.
inline std::vector<cplx> rk4_cavity(double kappa, double delta, double g, const std::function<double(double)>& q,
                                    const std::function<cplx(double)>& beta_in, double t0, double dt, std::size_t n,
                                    int substeps = 4)
{
    const cplx gamma(kappa / 2.0, delta);
    const double root = std::sqrt(kappa);
    auto rhs = [&](double t, cplx a) { return -(gamma - cplx(0.0, g * q(t))) * a - root * beta_in(t); };
    std::vector<cplx> out(n);
    cplx a;
    const double h = dt / substeps;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t0 + dt * static_cast<double>(i);
        out[i] = beta_in(t) + root * a;
        for (int s = 0; s < substeps; ++s) {
            const double ts = t + h * s;
            const cplx k1 = rhs(ts, a);
            const cplx k2 = rhs(ts + h / 2, a + h / 2 * k1);
            const cplx k3 = rhs(ts + h / 2, a + h / 2 * k2);
            const cplx k4 = rhs(ts + h, a + h * k3);
            a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    return out;
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double rel_l2(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return std::sqrt(num / den);
}

inline std::vector<cplx> random_field(std::size_t n, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<cplx> v(n);
    for (auto& x : v) x = {d(rng), d(rng)};
    return v;
}

} // namespace oracle
#endif
