#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "decoseed/araki_zurek.hpp"
#include "decoseed/oracle.hpp"
#include "decoseed/random.hpp"
#include "test_support.hpp"

using namespace decoseed;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::precondition;
}

SystemSpec qubit(double h = 0.3) {
    const std::vector<double> v{-0.5, 0.5}, hs{-h, h};
    return validate_model(HermitianOperator::diagonal(hs), HermitianOperator::diagonal(v));
}

DensityOperator plus_state() {
    Vector v = Vector::Ones(2);
    return DensityOperator::pure(v);
}

} // namespace

TEST(ArakiZurek, NoncommutingModelRejected) {
    Matrix x = Matrix::Zero(2, 2);
    x(0, 1) = x(1, 0) = 1.0;
    const std::vector<double> z{-0.5, 0.5};
    EXPECT_EQ(kind_of([&] { validate_model(HermitianOperator(x), HermitianOperator::diagonal(z)); }), ErrorKind::assumption_violated);
}

TEST(ArakiZurek, GaussianChiIsGaussianInTime) {
    const auto mu = SpectralDensity::gaussian(0.0, 1.0);
    const auto t = linspace(0.0, 8.0, 161);
    const auto chi = chi_spectral(mu, 1.0, t);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(std::abs(chi[i]), std::exp(-0.5 * t[i] * t[i]), 1e-12);
    // shifted mean only adds a phase e^{-i dl t mean}
    const auto chi2 = chi_spectral(SpectralDensity::gaussian(0.7, 0.5), 2.0, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const cplx ref = std::exp(cplx(-0.5 * std::pow(0.5 * 2.0 * t[i], 2), -2.0 * t[i] * 0.7));
        EXPECT_LT(std::abs(chi2[i] - ref), 1e-12);
    }
}

TEST(ArakiZurek, BumpChiMatchesSimpsonQuadrature) {
    for (int s : {1, 2, 3}) {
        const auto mu = SpectralDensity::bump(s, 0.0, 1.0, 4096);
        const double norm = testsupport::simpson([&](double x) { return std::pow(1 - x * x, s); }, -1, 1, 20000);
        for (double t : {0.5, 3.0, 11.0, 40.0}) {
            const double ref = testsupport::simpson([&](double x) { return std::pow(1 - x * x, s) * std::cos(t * x); }, -1, 1, 20000) / norm;
            const auto chi = chi_spectral(mu, 1.0, std::vector<double>{t});
            EXPECT_NEAR(chi[0].real(), ref, 2e-6) << s << " " << t;
            EXPECT_NEAR(chi[0].imag(), 0.0, 1e-12);
        }
    }
}

TEST(ArakiZurek, MeasurePreconditions) {
    const SpectralDensity bad({-1.0, 0.0, 1.0}, {1.0, 1.0, 1.0}, {1.0, 1.0, 1.0});
    EXPECT_EQ(kind_of([&] { chi_spectral(bad, 1.0, std::vector<double>{1.0}); }), ErrorKind::unnormalized_measure);
    const auto coarse = SpectralDensity::gaussian(0.0, 1.0, 64);
    EXPECT_EQ(kind_of([&] { chi_spectral(coarse, 1.0, std::vector<double>{100.0}); }), ErrorKind::nyquist_violation);
    // discrete measures have no quadrature to alias
    EXPECT_NO_THROW(chi_spectral(SpectralDensity::discrete({0.0, 1.0}, {1.0, 1.0}), 1.0, std::vector<double>{1e6}));
}

TEST(ArakiZurek, GammaEvolutionMatchesChi) {
    rnd::Engine rng(2);
    const std::vector<double> ve{-1.2, -0.3, 0.4, 1.9};
    const FiniteModel model{qubit().H_S, qubit().V_S, HermitianOperator::diagonal(std::vector<double>{0.1, 0.7, -0.2, 0.3}),
                            HermitianOperator::diagonal(ve)};
    const Matrix omega = Matrix::Identity(4, 4) / 4.0;
    const auto mu = SpectralDensity::discrete(ve, {1, 1, 1, 1});
    const auto t = linspace(0.0, 5.0, 11);
    const auto a = gamma_evolution_check(model, omega, -0.5, 0.5, t);
    const auto b = chi_spectral(mu, -1.0, t);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-13);
}

TEST(ArakiZurek, FactorizedMatchesBruteForce) {
    rnd::Engine rng(4);
    for (auto [ds, de] : {std::pair{2, 32}, {3, 12}}) {
        std::vector<double> v(static_cast<std::size_t>(ds));
        for (int i = 0; i < ds; ++i) v[std::size_t(i)] = 0.8 * i;
        const auto spec = validate_model(HermitianOperator::diagonal(std::vector<double>(v.rbegin(), v.rend())),
                                         HermitianOperator::diagonal(v));
        const auto sur = equal_weight_surrogate(SpectralDensity::gaussian(0.2, 1.0), de);
        const auto rho0 = rnd::density(ds, rng);
        const FiniteModel model{spec.H_S, spec.V_S, HermitianOperator::zero(de), sur.V_E};
        const auto t = linspace(0.0, 6.0, 25);
        const auto brute = full_evolution(model, tensor(rho0, sur.omega), t);
        const auto fact = reduced_blocks_factorized(rho0, spec, sur.measure, t);
        for (std::size_t i = 0; i < t.size(); ++i) {
            EXPECT_LT(testsupport::trace_norm_eig(brute[i].matrix() - fact.states[i].matrix()), 1e-10);
        }
        EXPECT_EQ(fact.states[0].matrix(), rho0.matrix());
    }
}

TEST(ArakiZurek, DiagonalBlocksAreConservedUnderHsEvolution) {
    rnd::Engine rng(6);
    const auto spec = qubit();
    const auto rho0 = rnd::density(2, rng);
    const auto d = reduced_blocks_factorized(rho0, spec, SpectralDensity::gaussian(0.0, 1.0), linspace(0.0, 6.0, 31));
    for (const auto& s : d.states) {
        EXPECT_NEAR(std::abs(s.matrix()(0, 0) - rho0.matrix()(0, 0)), 0.0, 1e-14);
        EXPECT_TRUE(validate_density(s.matrix()).acceptable());
    }
    EXPECT_NEAR(d.curve.block_tn.back()(0, 1), std::abs(rho0.matrix()(0, 1)) * std::exp(-18.0), 1e-14);
}

TEST(ArakiZurek, MixtureIsWeightedSumOfComponents) {
    const auto spec = qubit();
    const auto rho0 = plus_state();
    const auto t = linspace(0.0, 4.0, 21);
    MixtureInitialState w;
    w.terms.push_back({0.3, rho0, SpectralDensity::gaussian(0.0, 0.5)});
    w.terms.push_back({0.7, rho0, SpectralDensity::gaussian(0.0, 2.0)});
    const auto mix = mixture_dynamics(w, spec, t);
    const auto a = reduced_blocks_factorized(rho0, spec, w.terms[0].omega, t);
    const auto b = reduced_blocks_factorized(rho0, spec, w.terms[1].omega, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_LT(max_abs(mix.states[i] - (0.3 * a.states[i].matrix() + 0.7 * b.states[i].matrix())), 1e-14);
    }
    w.terms[1].weight = 0.6;
    EXPECT_EQ(kind_of([&] { mixture_dynamics(w, spec, t); }), ErrorKind::weight_sum_invalid);
}

TEST(ArakiZurek, DecayFitOnKnownPowerLaw) {
    const auto t = linspace(0.0, 100.0, 1024);
    std::vector<double> mags;
    for (double x : t) mags.push_back(0.8 * std::pow(1.0 + x, -2.5) * (1.0 + 0.1 * std::cos(x)));
    const auto fit = fit_decay_bound(t, mags, 1.0);
    ASSERT_EQ(fit.status, DecayStatus::certified);
    EXPECT_NEAR(fit.bound.gamma, 2.5, 0.1);
    EXPECT_TRUE(fit.holds);
    EXPECT_TRUE(fit.bound.certifies(t, mags));
}

TEST(ArakiZurek, DecayFitFlagsInsufficientDecay) {
    const auto t = linspace(0.0, 10.0, 128);
    std::vector<double> flat(t.size(), 0.97);
    const auto fit = fit_decay_bound(t, flat, 1.0);
    EXPECT_EQ(fit.status, DecayStatus::insufficient_decay);
    EXPECT_FALSE(fit.holds);
    EXPECT_EQ(kind_of([&] { fit_decay_bound(std::vector<double>(10, 0.0), std::vector<double>(10, 1.0), 1.0); }),
              ErrorKind::precondition);
}

TEST(ArakiZurek, SmootherBumpsDecayFaster) {
    const auto spec = qubit();
    const auto t = linspace(0.0, 100.0, 1024);
    double last = 0.0;
    for (int s : {1, 2, 3}) {
        const auto d = reduced_blocks_factorized(plus_state(), spec, SpectralDensity::bump(s, 0.0, 1.0), t);
        const auto fit = fit_decay_bound(d.curve, 0, 1, 1.0);
        EXPECT_EQ(fit.status, DecayStatus::certified);
        EXPECT_TRUE(fit.holds);
        EXPECT_GT(fit.bound.gamma, last);
        // (1 - x^2)^s has a jump in derivative s at the edge: |chi| ~ t^{-(s+1)}
        EXPECT_NEAR(fit.bound.gamma, s + 1.0, 0.25);
        last = fit.bound.gamma;
    }
}

TEST(ArakiZurek, PointSpectrumRecurs) {
    std::vector<double> atoms, p;
    for (int k = 0; k <= 20; ++k) {
        atoms.push_back(0.5 * k);
        p.push_back(std::exp(-(k - 10.0) * (k - 10.0) / 18.0));
    }
    const auto mu = SpectralDensity::discrete(atoms, p);
    const double tr = recurrence_time(mu, 1.0);
    EXPECT_NEAR(tr, 4.0 * std::numbers::pi, 1e-9);
    const auto chi = chi_spectral(mu, 1.0, std::vector<double>{0.5 * tr, tr, 2 * tr});
    EXPECT_LT(std::abs(chi[0]), 0.99);
    EXPECT_NEAR(std::abs(chi[1]), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(chi[2]), 1.0, 1e-12);
    EXPECT_NEAR(approximate_gcd(std::vector<double>{0.6, 1.5, 2.1}), 0.3, 1e-12);
    EXPECT_EQ(kind_of([&] { recurrence_time(SpectralDensity::gaussian(0, 1), 1.0); }), ErrorKind::precondition);
}

TEST(ArakiZurek, WindowNormsNeedDenseSpectrumAndSeparatedWindows) {
    const auto spec = qubit();
    const auto mu = SpectralDensity::gaussian(0, 1);
    const std::vector<double> t{1.0};
    EXPECT_EQ(kind_of([&] { window_block_norm(spec, {0, 1}, {0.5, 2}, plus_state(), mu, t); }), ErrorKind::overlapping_windows);
    EXPECT_EQ(kind_of([&] { window_block_norm(spec, {-1, -0.2}, {0.2, 1}, plus_state(), mu, t); }), ErrorKind::precondition);

    std::vector<double> v;
    for (int i = 0; i < 64; ++i) v.push_back(i / 63.0);
    const auto dense = validate_model(HermitianOperator::zero(64), HermitianOperator::diagonal(v));
    const auto rho0 = DensityOperator::pure(Vector::Ones(64));
    const auto times = linspace(0.0, 40.0, 9);
    const auto n = window_block_norm(dense, {0.0, 0.3}, {0.7, 1.0}, rho0, mu, times);
    const auto full = reduced_blocks_factorized(rho0, dense, mu, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
        double acc = 0.0;
        for (std::size_t m = 0; m < 64; ++m)
            for (std::size_t k = 0; k < 64; ++k)
                if (v[m] <= 0.3 && v[k] >= 0.7) acc += std::norm(full.states[i].matrix()(Index(m), Index(k)));
        EXPECT_NEAR(n[i], std::sqrt(acc), 1e-12);
    }
    EXPECT_LT(n.back(), 1e-3 * n.front());
}

TEST(ArakiZurek, OffDiagonalObservablesVanishOnDecoheredState) {
    rnd::Engine rng(8);
    const auto spec = qubit();
    const auto obs = random_offdiagonal_observables(spec.sectors, 10, rng);
    for (const auto& a : obs) {
        EXPECT_LT(hermiticity_defect(a), 1e-15);
        EXPECT_NEAR(hermitian_operator_norm(a), 1.0, 1e-12);
        EXPECT_LT(max_abs(spec.sectors.projector(0) * a * spec.sectors.projector(0)), 1e-14);
    }
    const auto d = reduced_blocks_factorized(plus_state(), spec, SpectralDensity::gaussian(0, 1), std::vector<double>{8.0});
    for (double m : observable_magnitudes(obs, d.states[0].matrix())) EXPECT_LT(m, 1e-10);
}
