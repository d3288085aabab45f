// oracle.hpp - Brute-force full-space evolution for finite system-environment models

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "decoseed/qcore.hpp"
#include "decoseed/spectral_density.hpp"

namespace decoseed {

inline constexpr Index oracle_dimension_cap = 4096;

struct FiniteModel {
    HermitianOperator H_S;
    HermitianOperator V_S;
    HermitianOperator H_E;
    HermitianOperator V_E;

    Index dim_s() const noexcept { return H_S.dim(); }
    Index dim_e() const noexcept { return H_E.dim(); }
    Index dim() const noexcept { return dim_s() * dim_e(); }

    void check() const {
        require_same_dim(H_S.matrix(), V_S.matrix(), "FiniteModel");
        require_same_dim(H_E.matrix(), V_E.matrix(), "FiniteModel");
        if (dim() > oracle_dimension_cap) {
            throw Error(ErrorKind::dimension_cap, "total dimension " + std::to_string(dim()) + " exceeds 4096");
        }
    }

    // H_S x I + I x H_E + V_S x V_E
    HermitianOperator hamiltonian() const {
        check();
        const Matrix is = Matrix::Identity(dim_s(), dim_s());
        const Matrix ie = Matrix::Identity(dim_e(), dim_e());
        return HermitianOperator::symmetrized(kron(H_S.matrix(), ie) + kron(is, H_E.matrix()) +
                                              kron(V_S.matrix(), V_E.matrix()));
    }

    // H_E + lambda V_E
    HermitianOperator gamma(double lambda) const {
        return HermitianOperator::symmetrized(H_E.matrix() + lambda * V_E.matrix());
    }
};

// tr_E e^{-iHt} W0 e^{iHt}; W0 may be any Hermitian operator.
inline std::vector<Matrix> full_evolution_linear(const FiniteModel& model, const Matrix& w0, std::span<const double> times) {
    model.check();
    require_same_dim(w0, Matrix::Zero(model.dim(), model.dim()), "full_evolution");
    const Propagator u(model.hamiltonian());
    std::vector<Matrix> out;
    out.reserve(times.size());
    for (double t : times) out.push_back(partial_trace_env(u.conjugate(w0, t), model.dim_s(), model.dim_e()));
    return out;
}

inline std::vector<DensityOperator> full_evolution(const FiniteModel& model, const DensityOperator& w0,
                                                   std::span<const double> times) {
    const auto states = full_evolution_linear(model, w0.matrix(), times);
    std::vector<DensityOperator> out;
    out.reserve(states.size());
    for (const auto& s : states) out.emplace_back(hermitian_part(s));
    return out;
}

// tr(e^{i Gamma_n t} e^{-i Gamma_m t} omega)
inline std::vector<cplx> gamma_evolution_check(const FiniteModel& model, const Matrix& omega, double lambda_m,
                                               double lambda_n, std::span<const double> times) {
    require_same_dim(omega, model.H_E.matrix(), "gamma_evolution_check");
    std::vector<cplx> out(times.size(), cplx(1.0, 0.0));
    if (lambda_m == lambda_n) return out;
    const Propagator gm(model.gamma(lambda_m));
    const Propagator gn(model.gamma(lambda_n));
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] == 0.0) {
            out[i] = omega.trace();
            continue;
        }
        out[i] = (gn.unitary(-times[i]) * gm.unitary(times[i]) * omega).trace();
    }
    return out;
}

// Environment realized by dim_e equal-weight atoms at the quantiles (k + 1/2)/dim_e
// of mu; omega = I/dim_e then reproduces the discrete measure `measure` exactly.
struct EnvironmentSurrogate {
    HermitianOperator V_E;
    DensityOperator omega;
    SpectralDensity measure;
    std::vector<double> atoms;
};

inline EnvironmentSurrogate equal_weight_surrogate(const SpectralDensity& mu, Index dim_e) {
    if (dim_e < 1) throw Error(ErrorKind::precondition, "equal_weight_surrogate: dim_e must be >= 1");
    std::vector<double> q(static_cast<std::size_t>(dim_e));
    for (Index k = 0; k < dim_e; ++k) q[std::size_t(k)] = mu.quantile((static_cast<double>(k) + 0.5) / static_cast<double>(dim_e));
    std::vector<double> atoms, masses;
    for (double x : q) {
        if (!atoms.empty() && x == atoms.back()) {
            masses.back() += 1.0;
        } else {
            atoms.push_back(x);
            masses.push_back(1.0);
        }
    }
    EnvironmentSurrogate s{HermitianOperator::diagonal(q), DensityOperator::maximally_mixed(dim_e),
                           SpectralDensity::discrete(atoms, masses), q};
    return s;
}

} // namespace decoseed
