#include <gtest/gtest.h>

#include "decoseed/qcore.hpp"
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

} // namespace

TEST(Qcore, RejectsNonHermitian) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    EXPECT_EQ(kind_of([&] { HermitianOperator h(m); }), ErrorKind::non_hermitian_input);
}

TEST(Qcore, DensityValidation) {
    Matrix m = Matrix::Identity(2, 2);
    EXPECT_EQ(kind_of([&] { DensityOperator d(m); }), ErrorKind::invalid_state);
    m = Matrix::Zero(2, 2);
    m(0, 0) = 1.2;
    m(1, 1) = -0.2;
    EXPECT_EQ(kind_of([&] { DensityOperator d(m); }), ErrorKind::invalid_state);
    const auto d = validate_density(m);
    EXPECT_NEAR(d.min_eigenvalue, -0.2, 1e-14);
    EXPECT_FALSE(d.acceptable());
    EXPECT_NO_THROW(DensityOperator::maximally_mixed(4));
}

TEST(Qcore, PartialTraceMatchesIndexSums) {
    rnd::Engine rng(3);
    for (auto [ds, de] : {std::pair{2, 3}, {3, 5}, {4, 2}}) {
        const Matrix w = rnd::density(ds * de, rng).matrix();
        const Matrix a = partial_trace_env(w, ds, de);
        EXPECT_LT(max_abs(a - testsupport::partial_trace_loops(w, ds, de)), 1e-15);
    }
    // product states factor back
    const auto r = rnd::density(3, rng), o = rnd::density(4, rng);
    EXPECT_LT(max_abs(partial_trace_env(tensor(r, o).matrix(), 3, 4) - r.matrix()), 1e-14);
    EXPECT_EQ(kind_of([&] { partial_trace_env(Matrix::Identity(6, 6), 4, 2); }), ErrorKind::dimension_mismatch);
}

TEST(Qcore, TraceNormAgreesWithEigenvalues) {
    rnd::Engine rng(5);
    const Matrix h = rnd::hermitian(7, rng).matrix();
    EXPECT_NEAR(trace_norm(h), testsupport::trace_norm_eig(h), 1e-12);
    EXPECT_NEAR(hermitian_trace_norm(h), testsupport::trace_norm_eig(h), 1e-12);
}

TEST(Qcore, SpectralProjectorsResolveIdentity) {
    rnd::Engine rng(11);
    const Matrix u = rnd::unitary(5, rng);
    const std::vector<double> ev{-1.0, -1.0, 0.5, 2.0, 2.0};
    Matrix d = Matrix::Zero(5, 5);
    for (int i = 0; i < 5; ++i) d(i, i) = ev[std::size_t(i)];
    const auto f = spectral_projectors(HermitianOperator::symmetrized(u * d * u.adjoint()));
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f.rank(0), 2);
    EXPECT_EQ(f.rank(1), 1);
    EXPECT_LT(f.completeness_defect(), 1e-12);
    EXPECT_LT(f.orthogonality_defect(), 1e-12);
    EXPECT_LT(max_abs(f.recompose() - u * d * u.adjoint()), 1e-12);
    EXPECT_NEAR(f.min_gap(), 1.5, 1e-12);
}

TEST(Qcore, AmbiguousClusterChainRaises) {
    const std::vector<double> ev{0.0, 0.6e-8, 1.2e-8, 1.0};
    EXPECT_EQ(kind_of([&] { spectral_projectors(HermitianOperator::diagonal(ev)); }), ErrorKind::degenerate_clustering);
}

TEST(Qcore, PropagatorMatchesRk4AndTaylor) {
    rnd::Engine rng(13);
    const auto h = rnd::hermitian(6, rng);
    const auto rho = rnd::density(6, rng);
    const Propagator p(h);
    for (double t : {0.3, 1.7, 4.0}) {
        EXPECT_LT(max_abs(p.conjugate(rho.matrix(), t) - testsupport::rk4_evolve(h.matrix(), rho.matrix(), t, 4000)), 1e-10);
        EXPECT_LT(max_abs(p.unitary(t) - testsupport::expm_taylor(h.matrix(), t)), 1e-11);
    }
    const auto e = p.evolve(rho, 2.0);
    EXPECT_TRUE(validate_density(e.matrix()).acceptable());
}

TEST(Qcore, BlockNormsOfProjectedBlocks) {
    rnd::Engine rng(17);
    const std::vector<double> ev{0.0, 0.0, 1.0};
    const auto f = spectral_projectors(HermitianOperator::diagonal(ev));
    const Matrix a = rnd::ginibre(3, 3, rng);
    for (const auto& b : block_norms(a, f)) {
        const Matrix pb = f.projector(b.m) * a * f.projector(b.n);
        EXPECT_NEAR(b.trace_norm, trace_norm(pb), 1e-12);
        EXPECT_NEAR(b.hs_norm, pb.norm(), 1e-12);
        EXPECT_NEAR(b.operator_norm, operator_norm(pb), 1e-12);
    }
}
