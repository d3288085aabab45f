// scattering.hpp - Sector survival under an added scattering potential
//
// H = H0 + V with H0 = H_S x I + I x H_E + V_S x V_E. The wave operator
// lim e^{iHt} e^{-iH0t} is approximated by a windowed time average over
// [T/2, T] followed by polar re-unitarization.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "decoseed/araki_zurek.hpp"
#include "decoseed/qcore.hpp"
#include "decoseed/random.hpp"

namespace decoseed {

class ScatteringModel {
public:
    ScatteringModel(SystemSpec spec, HermitianOperator h_e, HermitianOperator v_e, HermitianOperator v)
        : spec_(std::move(spec)), h_e_(std::move(h_e)), v_e_(std::move(v_e)), v_(std::move(v)) {
        require_same_dim(h_e_.matrix(), v_e_.matrix(), "ScatteringModel");
        const Index n = spec_.dim() * h_e_.dim();
        if (n > 4096) throw Error(ErrorKind::dimension_cap, "ScatteringModel: total dimension exceeds 4096");
        if (v_.dim() != n) throw Error(ErrorKind::dimension_mismatch, "ScatteringModel: V must act on S x E");
        const Matrix is = Matrix::Identity(spec_.dim(), spec_.dim());
        const Matrix ie = Matrix::Identity(h_e_.dim(), h_e_.dim());
        h0_ = HermitianOperator::symmetrized(kron(spec_.H_S.matrix(), ie) + kron(is, h_e_.matrix()) +
                                             kron(spec_.V_S.matrix(), v_e_.matrix()));
        h_ = HermitianOperator(h0_.matrix() + v_.matrix());
        u0_ = Propagator(h0_);
        u_ = max_abs(v_.matrix()) == 0.0 ? u0_ : Propagator(h_);
    }

    const SystemSpec& spec() const noexcept { return spec_; }
    const HermitianOperator& H_E() const noexcept { return h_e_; }
    const HermitianOperator& V_E() const noexcept { return v_e_; }
    const HermitianOperator& V() const noexcept { return v_; }
    const HermitianOperator& H0() const noexcept { return h0_; }
    const HermitianOperator& H() const noexcept { return h_; }
    const Propagator& free_propagator() const noexcept { return u0_; }
    const Propagator& propagator() const noexcept { return u_; }
    Index dim_s() const noexcept { return spec_.dim(); }
    Index dim_e() const noexcept { return h_e_.dim(); }
    Index dim() const noexcept { return h0_.dim(); }
    bool interacting() const { return max_abs(v_.matrix()) != 0.0; }

private:
    SystemSpec spec_;
    HermitianOperator h_e_, v_e_, v_, h0_, h_;
    Propagator u0_, u_;
};

// V = R H0 R^+ - H0 with R = exp(i s K): H0 + V has the spectrum of H0, and K
// only couples H0 eigenstates whose energies differ by at least energy_gap, so V
// has no on-shell matrix elements. s is set by bisection to reach ||V|| = norm.
inline HermitianOperator offshell_isospectral_potential(const HermitianOperator& h0, double norm, double energy_gap,
                                                        rnd::Engine& rng) {
    if (!(norm > 0.0) || !(energy_gap >= 0.0)) throw Error(ErrorKind::precondition, "offshell potential: bad parameters");
    const Propagator p(h0);
    const Index n = h0.dim();
    Matrix k = hermitian_part(rnd::ginibre(n, n, rng));
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (std::abs(p.energies()(i) - p.energies()(j)) < energy_gap) k(i, j) = 0.0;
        }
    }
    const HermitianOperator gen = HermitianOperator::symmetrized(p.eigenvectors() * k * p.eigenvectors().adjoint());
    const Propagator r(gen);
    auto potential = [&](double s) {
        const Matrix u = r.unitary(-s);
        return Matrix(hermitian_part(u * h0.matrix() * u.adjoint() - h0.matrix()));
    };
    double lo = 0.0, hi = 1e-3;
    while (hermitian_operator_norm(potential(hi)) < norm) {
        hi *= 2.0;
        if (hi > 1e6) throw Error(ErrorKind::precondition, "offshell potential: gap filter left no coupling");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (hermitian_operator_norm(potential(mid)) < norm ? lo : hi) = mid;
    }
    return HermitianOperator(potential(0.5 * (lo + hi)));
}

struct MollerReport {
    Matrix omega;
    double horizon{0.0};
    double cauchy_defect{0.0};      // ||Omega(T) - Omega(T/2)||
    double unitarity_defect{0.0};   // ||Omega^+ Omega - I||
};

// Hann-weighted average of e^{iHt} e^{-iH0t} over [T/2, T], before polar correction.
inline Matrix moller_average(const ScatteringModel& model, double horizon, std::size_t n_samples) {
    const Index n = model.dim();
    if (!model.interacting()) return Matrix::Identity(n, n);
    std::vector<double> t(n_samples), w(n_samples);
    double wsum = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(n_samples);
        t[i] = horizon * (0.5 + 0.5 * x);
        w[i] = std::pow(std::sin(std::numbers::pi * x), 2);
        wsum += w[i];
    }
    for (auto& x : w) x /= wsum;
    const auto& e = model.propagator().energies();
    const auto& e0 = model.free_propagator().energies();
    Matrix overlap = model.propagator().eigenvectors().adjoint() * model.free_propagator().eigenvectors();
    for (Index j = 0; j < n; ++j) {
        for (Index k = 0; k < n; ++k) {
            const double de = e(j) - e0(k);
            cplx acc{0.0, 0.0};
            for (std::size_t i = 0; i < n_samples; ++i) acc += w[i] * std::polar(1.0, de * t[i]);
            overlap(j, k) *= acc;
        }
    }
    return model.propagator().eigenvectors() * overlap * model.free_propagator().eigenvectors().adjoint();
}

inline Matrix polar_unitary(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

inline Matrix moller_estimate(const ScatteringModel& model, double horizon, std::size_t n_samples) {
    if (!model.interacting()) return Matrix::Identity(model.dim(), model.dim());
    return polar_unitary(moller_average(model, horizon, n_samples));
}

inline MollerReport moller_approx(const ScatteringModel& model, double horizon, std::size_t n_samples) {
    if (!(horizon > 0.0)) throw Error(ErrorKind::precondition, "moller_approx: horizon must be > 0");
    if (n_samples < 8) throw Error(ErrorKind::precondition, "moller_approx: need at least 8 samples");
    MollerReport r;
    r.horizon = horizon;
    r.omega = moller_estimate(model, horizon, n_samples);
    const Matrix half = moller_estimate(model, 0.5 * horizon, n_samples);
    r.cauchy_defect = operator_norm(r.omega - half);
    r.unitarity_defect = hermitian_operator_norm(r.omega.adjoint() * r.omega - Matrix::Identity(model.dim(), model.dim()));
    return r;
}

inline constexpr double unitarity_tolerance = 1e-10;

// ||U(t) W U(t)^+ - U0(t) Omega^+ W Omega U0(t)^+||_1 for Hermitian W
inline double equivalence_residual(const Propagator& u, const Propagator& u0, const Matrix& w, const Matrix& omega, double t) {
    require_same_dim(w, omega, "equivalence_residual");
    require_same_dim(w, u.eigenvectors(), "equivalence_residual");
    require_same_dim(w, u0.eigenvectors(), "equivalence_residual");
    const double ud = hermitian_operator_norm(omega.adjoint() * omega - Matrix::Identity(omega.rows(), omega.cols()));
    if (!(ud <= unitarity_tolerance)) {
        throw Error(ErrorKind::non_unitary_input, "equivalence_residual: ||Omega^+ Omega - I|| = " + std::to_string(ud));
    }
    return hermitian_trace_norm(u.conjugate(w, t) - u0.conjugate(omega.adjoint() * w * omega, t));
}

inline double equivalence_residual(const ScatteringModel& model, const DensityOperator& w, const Matrix& omega, double t) {
    return equivalence_residual(model.propagator(), model.free_propagator(), w.matrix(), omega, t);
}

// Exact reduced dynamics under H with block norms against the sectors of V_S.
// chi_{m,n} is the component of P_m rho(t) P_n along the unperturbed direction
// P_m e^{-iH_S t} rho_0 e^{iH_S t} P_n, so V = 0 reproduces the closed form.
inline ReducedDynamics scattering_block_decay(const ScatteringModel& model, const DensityOperator& w0,
                                              std::span<const double> times) {
    require_same_dim(w0.matrix(), model.H0().matrix(), "scattering_block_decay");
    const auto& f = model.spec().sectors;
    const Matrix rho0 = partial_trace_env(w0.matrix(), model.dim_s(), model.dim_e());
    const Propagator u_s(model.spec().H_S);
    ReducedDynamics out;
    for (double t : times) {
        const Matrix rho = hermitian_part(partial_trace_env(model.propagator().conjugate(w0.matrix(), t), model.dim_s(), model.dim_e()));
        const Matrix x = f.basis().adjoint() * u_s.conjugate(rho0, t) * f.basis();
        const Matrix y = f.basis().adjoint() * rho * f.basis();
        const auto s = static_cast<Index>(f.size());
        Matrix chi = Matrix::Zero(s, s);
        for (Index m = 0; m < s; ++m) {
            for (Index n = 0; n < s; ++n) {
                const auto xb = x.block(f.offset(std::size_t(m)), f.offset(std::size_t(n)), f.rank(std::size_t(m)), f.rank(std::size_t(n)));
                const auto yb = y.block(f.offset(std::size_t(m)), f.offset(std::size_t(n)), f.rank(std::size_t(m)), f.rank(std::size_t(n)));
                const double nx = xb.squaredNorm();
                if (nx > 0.0) chi(m, n) = (xb.conjugate().cwiseProduct(yb)).sum() / nx;
            }
        }
        out.states.emplace_back(rho);
        out.curve.append(t, chi, rho, f);
    }
    return out;
}

} // namespace decoseed
