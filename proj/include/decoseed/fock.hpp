// fock.hpp - Truncated Fock space for one or two bosonic modes
//
// Field and momentum follow Q = (a + a^+)/sqrt(2), P = i(a^+ - a)/sqrt(2), so
// [Q, P] = i away from the truncation edge. Weyl operators are
// T(f, g) = exp(-i sum_j (f_j P_j + g_j Q_j)), exponentiated through the
// eigendecomposition of the truncated Hermitian generator.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "decoseed/qcore.hpp"

namespace decoseed {

// exp(s H) for Hermitian H and complex s.
inline Matrix exp_hermitian(const Matrix& h, cplx s) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::precondition, "exp_hermitian: eigendecomposition failed");
    Vector d(h.rows());
    for (Index k = 0; k < h.rows(); ++k) d(k) = std::exp(s * es.eigenvalues()(k));
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

class FockOracle {
public:
    static constexpr double tail_tolerance = 1e-8;

    explicit FockOracle(int n_max, int modes = 1) : n_(n_max), modes_(modes) {
        if (n_max < 2) throw Error(ErrorKind::truncation_too_small, "FockOracle: n_max must be >= 2");
        if (modes != 1 && modes != 2) throw Error(ErrorKind::precondition, "FockOracle: one or two modes only");
        Matrix a1 = Matrix::Zero(n_, n_);
        for (int k = 1; k < n_; ++k) a1(k - 1, k) = std::sqrt(static_cast<double>(k));
        const Matrix id = Matrix::Identity(n_, n_);
        if (modes_ == 1) {
            a_.push_back(a1);
        } else {
            a_.push_back(kron(a1, id));
            a_.push_back(kron(id, a1));
        }
        const double r = 1.0 / std::sqrt(2.0);
        for (const auto& a : a_) {
            q_.push_back(hermitian_part(r * (a + a.adjoint())));
            p_.push_back(hermitian_part(cplx(0.0, r) * (a.adjoint() - a)));
        }
    }

    int n_max() const noexcept { return n_; }
    int modes() const noexcept { return modes_; }
    Index dim() const noexcept { return a_.front().rows(); }

    const Matrix& annihilation(int mode = 0) const { return a_.at(std::size_t(mode)); }
    Matrix creation(int mode = 0) const { return annihilation(mode).adjoint(); }
    const Matrix& q(int mode = 0) const { return q_.at(std::size_t(mode)); }
    const Matrix& p(int mode = 0) const { return p_.at(std::size_t(mode)); }
    Matrix number(int mode = 0) const { return creation(mode) * annihilation(mode); }

    // sum_j eps_j a_j^+ a_j
    Matrix hamiltonian(std::span<const double> eps) const {
        require_modes(eps.size(), "hamiltonian");
        Matrix h = Matrix::Zero(dim(), dim());
        for (int j = 0; j < modes_; ++j) h += eps[std::size_t(j)] * number(j);
        return h;
    }

    Matrix hamiltonian(double eps) const {
        const double e[1] = {eps};
        return hamiltonian(std::span<const double>(e, 1));
    }

    // (P^2 + eps^2 Q^2)/2 on mode 0; eps = 0 is the free particle.
    Matrix oscillator(double eps) const { return hermitian_part(0.5 * (p(0) * p(0) + eps * eps * q(0) * q(0))); }

    Matrix generator(std::span<const double> f, std::span<const double> g) const {
        require_modes(f.size(), "weyl");
        require_modes(g.size(), "weyl");
        Matrix x = Matrix::Zero(dim(), dim());
        for (int j = 0; j < modes_; ++j) x += f[std::size_t(j)] * p(j) + g[std::size_t(j)] * q(j);
        return hermitian_part(x);
    }

    Matrix weyl(std::span<const double> f, std::span<const double> g) const {
        return exp_hermitian(generator(f, g), cplx(0.0, -1.0));
    }

    Matrix weyl(double f, double g) const {
        const double ff[1] = {f}, gg[1] = {g};
        return weyl(std::span<const double>(ff, 1), std::span<const double>(gg, 1));
    }

    Vector vacuum() const {
        Vector v = Vector::Zero(dim());
        v(0) = 1.0;
        return v;
    }

    Vector coherent(std::span<const double> f, std::span<const double> g) const { return weyl(f, g) * vacuum(); }
    Vector coherent(double f, double g) const { return weyl(f, g) * vacuum(); }

    // Squared amplitude on basis states with some mode at level >= n_max/2.
    double tail_mass(const Vector& v) const {
        if (v.size() != dim()) throw Error(ErrorKind::dimension_mismatch, "tail_mass: wrong state dimension");
        const int half = n_ / 2;
        double t = 0.0;
        for (Index i = 0; i < dim(); ++i) {
            const int hi = modes_ == 1 ? int(i) : int(i / n_);
            const int lo = modes_ == 1 ? 0 : int(i % n_);
            if (hi >= half || lo >= half) t += std::norm(v(i));
        }
        return t;
    }

    // Largest deviation of [a, a^+] from I below the truncation edge.
    double commutator_defect() const {
        double d = 0.0;
        for (int j = 0; j < modes_; ++j) {
            const Matrix c = commutator(annihilation(j), creation(j)) - Matrix::Identity(dim(), dim());
            for (Index r = 0; r < dim(); ++r) {
                if (at_edge(r)) continue;
                for (Index s = 0; s < dim(); ++s) {
                    if (!at_edge(s)) d = std::max(d, std::abs(c(r, s)));
                }
            }
        }
        return d;
    }

    // Restriction to basis states with every mode below level `levels`.
    Matrix low_block(const Matrix& x, int levels) const {
        std::vector<Index> keep;
        for (Index i = 0; i < dim(); ++i) {
            const int hi = modes_ == 1 ? int(i) : int(i / n_);
            const int lo = modes_ == 1 ? 0 : int(i % n_);
            if (hi < levels && lo < levels) keep.push_back(i);
        }
        Matrix out(Index(keep.size()), Index(keep.size()));
        for (std::size_t r = 0; r < keep.size(); ++r) {
            for (std::size_t s = 0; s < keep.size(); ++s) out(Index(r), Index(s)) = x(keep[r], keep[s]);
        }
        return out;
    }

private:
    void require_modes(std::size_t n, const char* who) const {
        if (n != std::size_t(modes_)) {
            throw Error(ErrorKind::dimension_mismatch, std::string(who) + ": expected " + std::to_string(modes_) + " mode amplitudes");
        }
    }

    bool at_edge(Index i) const {
        const int hi = modes_ == 1 ? int(i) : int(i / n_);
        const int lo = modes_ == 1 ? 0 : int(i % n_);
        return hi == n_ - 1 || (modes_ == 2 && lo == n_ - 1);
    }

    int n_;
    int modes_;
    std::vector<Matrix> a_, q_, p_;
};

inline void require_resolved(const FockOracle& o, const Vector& v, const char* who) {
    const double t = o.tail_mass(v);
    if (t > FockOracle::tail_tolerance) {
        throw Error(ErrorKind::truncation_too_small,
                    std::string(who) + ": Fock tail mass " + std::to_string(t) + " above level " + std::to_string(o.n_max() / 2));
    }
}

// <bra| X |ket>; both the ket and X|ket> must be resolved by the truncation.
inline cplx fock_matrix_element(const FockOracle& o, const Vector& bra, const Matrix& x, const Vector& ket) {
    if (x.rows() != o.dim() || x.cols() != o.dim()) throw Error(ErrorKind::dimension_mismatch, "fock_matrix_element");
    require_resolved(o, bra, "fock_matrix_element");
    require_resolved(o, ket, "fock_matrix_element");
    const Vector xk = x * ket;
    require_resolved(o, xk, "fock_matrix_element");
    return bra.dot(xk);
}

inline cplx fock_expectation(const FockOracle& o, const Matrix& x, const Vector& state) {
    return fock_matrix_element(o, state, x, state);
}

} // namespace decoseed
