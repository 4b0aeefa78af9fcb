#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cascade/chain.hpp"
#include "support/builders.hpp"
#include "support/oracle.hpp"

using namespace cascade;

TEST(CavityParams, DerivedQuantitiesAndValidation)
{
    const CavityParams c{4.0, 1.5, 0.2};
    EXPECT_EQ(c.gamma(), cplx(2.0, 1.5));
    EXPECT_DOUBLE_EQ(c.epsilon(), 0.05);
    EXPECT_THROW((CavityParams{0.0, 0.0, 0.0}.validate("c")), ConfigError);
    EXPECT_THROW((CavityParams{-1.0, 0.0, 0.0}.validate("c")), ConfigError);
}

TEST(ResponsePhase, ReferencePoints)
{
    const double k = 3.0;
    EXPECT_NEAR(response_phase({k, 0.0, 0.0}, 0.0), constants::pi, 1e-15);
    EXPECT_NEAR(response_phase({k, 0.0, 0.0}, k / 2), 1.5 * constants::pi, 1e-15);
    // pi - 2 atan(2)
    EXPECT_NEAR(response_phase({k, k, 0.0}, 0.0), constants::pi - 2.214297435588181, 1e-14);
}

TEST(ResponsePhase, MatchesComplexRatioAndIdentityOnRandomDraws)
{
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const CavityParams c{std::exp(3 * u(rng)), 10 * u(rng), 0.0};
        const double w = 20 * u(rng);
        const double phi = response_phase(c, w);
        EXPECT_GT(phi, 0.0);
        EXPECT_LT(phi, 2 * constants::pi);
        const cplx d = c.gamma() - cplx(0.0, w);
        const cplx ratio = -std::conj(d) / d;
        EXPECT_NEAR(std::abs(std::polar(1.0, phi) - ratio), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(response_factor(c, w) - ratio), 0.0, 1e-12);
        const double x = 2 * (w - c.delta) / c.kappa;
        EXPECT_NEAR(1 - std::cos(phi), 2 / (1 + x * x), 1e-12);
        const cplx one_minus = 1.0 - ratio;
        EXPECT_NEAR(std::abs(response_kernel(c, w) - one_minus * one_minus), 0.0, 1e-12);
    }
}

TEST(MechProfile, VariantShapes)
{
    EXPECT_DOUBLE_EQ(mech_time_profile(build::constant(1.0), 123.0), 1.0);
    EXPECT_DOUBLE_EQ(mech_time_profile(build::constant(2.0, 0.5), -3.0), 1.0);
    EXPECT_DOUBLE_EQ(mech_time_profile(build::harmonic(1.0, 5.0), 0.0), 1.0);
    const auto b = build::burst(1.0, 2 * constants::pi * 1e3, 1e-2);
    EXPECT_NEAR(mech_time_profile(b, 1e-2), 0.6065306597126334, 1e-12);
}

TEST(MechProfile, SampledInterpolatesAndWarnsOutsideGrid)
{
    TimeField f(TimeGrid{0.0, 1.0, 3}, {1.0, 3.0, 2.0});
    MechanicalSignal s{Sampled{f}, 2.0};
    EXPECT_DOUBLE_EQ(mech_time_profile(s, 0.5), 4.0);
    EXPECT_DOUBLE_EQ(mech_time_profile(s, 2.0), 4.0);
    Warnings w;
    EXPECT_EQ(mech_time_profile(s, 2.5, &w), 0.0);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_EQ(mech_time_profile(s, -0.1, &w), 0.0);
    EXPECT_EQ(w.size(), 2u);
}

TEST(MechProfile, ShiftedFrame)
{
    const auto s = build::burst(1.0, 3.0, 0.7, 0.2);
    for (double t : {-1.0, 0.0, 0.4})
        EXPECT_DOUBLE_EQ(shifted_profile(s, 3, 0.25, t), mech_time_profile(s, t + 0.5));
}

TEST(MechSpectrum, BurstMatchesTransformOfSampledProfile)
{
    const auto s = build::burst(1.2, 6.0, 1.5, 0.4, 0.8);
    const auto g = centered_time_grid(0.02, 4096);
    TimeField q(g);
    for (std::size_t i = 0; i < g.n_points; ++i) q.values[i] = mech_time_profile(s, g.at(i));
    const auto numeric = forward_transform(q);
    const auto analytic = mech_spectrum(s, 1, 0.0, numeric.grid);
    EXPECT_LT(relative_l2(analytic, numeric), 1e-6);
    // Two Gaussians at +-omega_m with width 1/envelope_width.
    const double peak = std::abs(continuum_spectrum(s, 1, 0.0, 6.0));
    const double off = std::abs(continuum_spectrum(s, 1, 0.0, 6.0 + 1.0 / 1.5));
    EXPECT_NEAR(off / peak, std::exp(-0.5), 1e-6);
}

TEST(MechSpectrum, RealityAndDelayPhase)
{
    const auto s = build::burst(1.0, 2.0, 1.0, 0.9);
    const FreqGrid g = centered_freq_grid(0.05, 256);
    const auto one = mech_spectrum(s, 1, 0.0, g);
    for (std::size_t i = 1; i < 128; ++i)
        EXPECT_NEAR(std::abs(one.values[128 - i] - std::conj(one.values[128 + i])), 0.0, 1e-14);
    const double T = 0.37;
    const auto a = mech_spectrum(s, 2, T, g);
    const auto b = mech_spectrum(s, 3, T, g);
    for (std::size_t i = 0; i < 256; ++i) {
        EXPECT_NEAR(std::abs(a.values[i]), std::abs(one.values[i]), 1e-14);
        EXPECT_NEAR(std::abs(b.values[i] - a.values[i] * std::polar(1.0, -g.at(i) * T)), 0.0, 1e-14);
    }
}

TEST(MechSpectrum, LinesForConstantAndHarmonic)
{
    std::vector<SpectralLine> lines;
    const FreqGrid g = centered_freq_grid(0.1, 16);
    const auto f = mech_spectrum(build::constant(2.0), 1, 0.0, g, &lines);
    for (const auto& v : f.values) EXPECT_EQ(v, cplx{});
    ASSERT_EQ(lines.size(), 1u);
    EXPECT_NEAR(lines[0].weight.real(), 2.0 * std::sqrt(2 * constants::pi), 1e-14);

    const auto h = spectral_lines(build::harmonic(1.0, 3.0, 0.0), 2, 0.5);
    ASSERT_EQ(h.size(), 2u);
    EXPECT_DOUBLE_EQ(h[0].omega, 3.0);
    EXPECT_NEAR(std::abs(h[0].weight), 0.5 * std::sqrt(2 * constants::pi), 1e-14);
    EXPECT_NEAR(std::arg(h[0].weight), -1.5, 1e-14);
}

TEST(MechSpectrum, SampledMatchesDiscreteTransformAtLowFrequency)
{
    const auto g = centered_time_grid(0.01, 2048);
    TimeField f(g);
    for (std::size_t i = 0; i < g.n_points; ++i) f.values[i] = std::exp(-g.at(i) * g.at(i));
    const MechanicalSignal s{Sampled{f}, 1.0};
    const double exact = std::sqrt(constants::pi) / std::sqrt(2 * constants::pi);  // transform of e^{-t^2} at 0
    EXPECT_NEAR(std::abs(continuum_spectrum(s, 1, 0.0, 0.0) - exact), 0.0, 1e-6);
    const double w = 2.0;
    EXPECT_NEAR(std::abs(continuum_spectrum(s, 1, 0.0, w) - exact * std::exp(-w * w / 4)), 0.0, 1e-5);
}

TEST(HalflineInverse, HarmonicWeights)
{
    EXPECT_NEAR(std::abs(halfline_inverse_fourier(build::harmonic(1.0, 4.0, 0.0)) - 0.5), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(halfline_inverse_fourier(build::harmonic(1.0, 4.0, constants::pi / 2)) - cplx(0.0, -0.5)),
                0.0, 1e-14);
    EXPECT_EQ(halfline_inverse_fourier(build::harmonic(0.0, 4.0)), cplx{});
    // Delay factor at omega_m.
    const auto d = halfline_inverse_fourier(build::harmonic(2.0, 4.0, 0.0), 3, 0.1);
    EXPECT_NEAR(std::abs(d - std::polar(1.0, -0.8)), 0.0, 1e-14);
}

TEST(HalflineInverse, BurstAgreesWithIndependentQuadrature)
{
    const auto s = build::burst(1.0, 20.0, 2.0, 0.3);
    const auto ref = oracle::simpson([&](double w) { return continuum_spectrum(s, 1, 0.0, w); }, 0.0, 40.0, 20000) /
                     std::sqrt(2 * constants::pi);
    EXPECT_NEAR(std::abs(halfline_inverse_fourier(s) - ref), 0.0, 1e-10);
    // Narrow band far from 0: approaches A/2 in magnitude.
    EXPECT_NEAR(std::abs(ref), 0.5, 1e-8);
}

TEST(Diagnostics, ReferenceRegimes)
{
    const PulseParams p{1.0, 1.0};
    auto one = [&](double kappa, MechanicalSignal s) {
        return diagnose_regime(build::uniform(1, {kappa, 0.0, 0.0}, s), p).recommended;
    };
    EXPECT_EQ(one(1e3, build::harmonic(1.0, 1e-2)), Regime::Stroboscopic);
    EXPECT_EQ(one(1e5, build::burst(1.0, 1e2, 1e-2)), Regime::CwFiniteSignal);
    EXPECT_EQ(one(1e5, build::burst(1.0, 1e2, 1e3)), Regime::CwContinuousSignal);
    EXPECT_EQ(one(1e5, build::harmonic(1.0, 1e2)), Regime::CwContinuousSignal);
    EXPECT_EQ(one(5.0, build::harmonic(1.0, 1.0)), Regime::NumericOnly);
    EXPECT_EQ(one(1e3, build::constant(1.0)), Regime::Stroboscopic);
}

TEST(Diagnostics, RatiosAreReported)
{
    const PulseParams p{1.0, 2.0};
    const auto d = diagnose_regime(build::uniform(2, {100.0, 0.0, 1.0}, build::burst(3.0, 5.0, 0.5)), p);
    ASSERT_EQ(d.cavities.size(), 2u);
    EXPECT_DOUBLE_EQ(d.cavities[0].omega_tau, 10.0);
    EXPECT_DOUBLE_EQ(d.cavities[0].kappa_tau, 200.0);
    EXPECT_DOUBLE_EQ(d.cavities[0].width_tau, 4.0);
    EXPECT_DOUBLE_EQ(d.cavities[0].omega_over_kappa, 0.05);
    EXPECT_DOUBLE_EQ(d.cavities[0].epsilon, 0.01);
    EXPECT_DOUBLE_EQ(d.cavities[0].coupling, 0.03);
    EXPECT_DOUBLE_EQ(d.max_coupling(), 0.03);
}

TEST(Diagnostics, AutoMethodMapping)
{
    const PulseParams p{1.0, 1.0};
    auto pick = [&](double g, MechanicalSignal s, double kappa = 1e3) {
        return resolve_auto(diagnose_regime(build::uniform(1, {kappa, 0.0, g}, s), p));
    };
    EXPECT_EQ(pick(1.0, build::constant(1.0)), Method::StrobWeak);
    EXPECT_EQ(pick(300.0, build::constant(1.0)), Method::StrobStrong);
    EXPECT_EQ(pick(1.0, build::burst(1.0, 1e2, 1e-2), 1e5), Method::CwFinite);
    EXPECT_EQ(pick(1.0, build::harmonic(1.0, 1e2), 1e5), Method::CwContinuous);
    EXPECT_EQ(pick(0.1, build::harmonic(1.0, 1.0), 5.0), Method::FirstOrder);
    EXPECT_EQ(pick(2.0, build::harmonic(1.0, 1.0), 5.0), Method::Direct);
}

TEST(Methods, NamesRoundTrip)
{
    for (Method m : {Method::Direct, Method::FirstOrder, Method::StrobWeak, Method::StrobStrong, Method::CwFinite,
                     Method::CwContinuous, Method::Auto})
        EXPECT_EQ(parse_method(to_string(m)), m);
    EXPECT_THROW(parse_method("fast"), ConfigError);
}

TEST(ChainConfig, Validation)
{
    auto cfg = build::uniform(2, {1.0, 0.0, 0.0}, build::constant(1.0));
    EXPECT_NO_THROW(cfg.validate());
    cfg.eta = 1.5;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.eta = 1.0;
    cfg.signals.pop_back();
    EXPECT_THROW(cfg.validate(), ConfigError);
    EXPECT_THROW(build::uniform(1, {1.0, 0.0, 0.0}, build::harmonic(-1.0, 1.0)).validate(), ConfigError);
    EXPECT_THROW(build::uniform(1, {1.0, 0.0, 0.0}, build::harmonic(1.0, 0.0)).validate(), ConfigError);
    EXPECT_THROW(ChainConfig{}.validate(), ConfigError);
}
