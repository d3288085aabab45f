// qcore.hpp - Dense Hermitian linear algebra and density-operator utilities
//
// Shared by every model module. All tensor products follow the S-major
// convention: the composite index of (s, e) is s * dim_E + e.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "decoseed/error.hpp"

namespace decoseed {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace tol {
inline constexpr double hermitian = 1e-12;
inline constexpr double trace = 1e-12;
inline constexpr double positivity = -1e-10;
inline constexpr double projector = 1e-10;
inline constexpr double cluster = 1e-8;
inline constexpr double commutator = 1e-10;
} // namespace tol

inline double max_abs(const Matrix& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline double hermiticity_defect(const Matrix& a) {
    if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
    return max_abs(a - a.adjoint());
}

// (A + A^+)/2 is exactly Hermitian in floating point.
inline Matrix hermitian_part(const Matrix& a) {
    return 0.5 * (a + a.adjoint());
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

inline Matrix commutator(const Matrix& a, const Matrix& b) {
    return a * b - b * a;
}

inline void require_square(const Matrix& a, const char* who) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw Error(ErrorKind::dimension_mismatch, std::string(who) + ": matrix must be square and non-empty");
    }
}

inline void require_same_dim(const Matrix& a, const Matrix& b, const char* who) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(ErrorKind::dimension_mismatch,
                    std::string(who) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

// ------------------------------- Norms ---------------------------------------

inline RealVector singular_values(const Matrix& a) {
    if (a.size() == 0) return RealVector();
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues();
}

inline double trace_norm(const Matrix& a) { return singular_values(a).sum(); }
inline double hs_norm(const Matrix& a) { return a.norm(); }
inline double operator_norm(const Matrix& a) {
    const RealVector s = singular_values(a);
    return s.size() == 0 ? 0.0 : s.maxCoeff();
}

// Hermitian inputs only: the singular values are the absolute eigenvalues.
inline RealVector abs_eigenvalues(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs();
}
inline double hermitian_trace_norm(const Matrix& a) { return a.size() ? abs_eigenvalues(a).sum() : 0.0; }
inline double hermitian_operator_norm(const Matrix& a) { return a.size() ? abs_eigenvalues(a).maxCoeff() : 0.0; }

// ---------------------------- Operator types ---------------------------------

class HermitianOperator {
public:
    HermitianOperator() = default;

    explicit HermitianOperator(Matrix m) : m_(std::move(m)) {
        require_square(m_, "HermitianOperator");
        const double d = hermiticity_defect(m_);
        if (!(d <= tol::hermitian)) {
            throw Error(ErrorKind::non_hermitian_input, "hermiticity defect " + std::to_string(d));
        }
    }

    static HermitianOperator diagonal(std::span<const double> values) {
        Matrix m = Matrix::Zero(static_cast<Index>(values.size()), static_cast<Index>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Index>(i), static_cast<Index>(i)) = values[i];
        return HermitianOperator(std::move(m));
    }

    static HermitianOperator zero(Index dim) { return HermitianOperator(Matrix::Zero(dim, dim)); }
    static HermitianOperator identity(Index dim) { return HermitianOperator(Matrix::Identity(dim, dim)); }

    // Symmetrizes round-off; use only on matrices that are Hermitian in exact arithmetic.
    static HermitianOperator symmetrized(const Matrix& m) { return HermitianOperator(hermitian_part(m)); }

    const Matrix& matrix() const noexcept { return m_; }
    Index dim() const noexcept { return m_.rows(); }

private:
    Matrix m_;
};

struct DensityDiagnostics {
    double hermiticity_defect{0.0};
    double trace_defect{0.0};
    double min_eigenvalue{0.0};

    bool acceptable() const noexcept {
        return hermiticity_defect <= tol::hermitian && trace_defect <= tol::trace &&
               min_eigenvalue >= tol::positivity;
    }
};

// Pure diagnostic; never throws on a square input.
inline DensityDiagnostics validate_density(const Matrix& w) {
    DensityDiagnostics d;
    if (w.rows() != w.cols() || w.rows() == 0) {
        d.hermiticity_defect = d.trace_defect = std::numeric_limits<double>::infinity();
        d.min_eigenvalue = -std::numeric_limits<double>::infinity();
        return d;
    }
    d.hermiticity_defect = hermiticity_defect(w);
    d.trace_defect = std::abs(w.trace() - cplx(1.0, 0.0));
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(w), Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    return d;
}

class DensityOperator {
public:
    DensityOperator() = default;

    explicit DensityOperator(Matrix m) : m_(std::move(m)) {
        require_square(m_, "DensityOperator");
        const DensityDiagnostics d = validate_density(m_);
        if (!d.acceptable()) {
            throw Error(ErrorKind::invalid_state,
                        "hermiticity " + std::to_string(d.hermiticity_defect) + ", trace defect " +
                            std::to_string(d.trace_defect) + ", min eigenvalue " + std::to_string(d.min_eigenvalue));
        }
    }

    static DensityOperator pure(const Vector& psi) {
        const Vector n = psi / psi.norm();
        return DensityOperator(hermitian_part(n * n.adjoint()));
    }

    static DensityOperator maximally_mixed(Index dim) {
        return DensityOperator(Matrix::Identity(dim, dim) / static_cast<double>(dim));
    }

    const Matrix& matrix() const noexcept { return m_; }
    Index dim() const noexcept { return m_.rows(); }

private:
    Matrix m_;
};

inline DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
    return DensityOperator(hermitian_part(kron(a.matrix(), b.matrix())));
}

// ---------------------------- Sector families --------------------------------

struct Interval {
    double lo{0.0};
    double hi{0.0};

    bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

inline double distance(const Interval& a, const Interval& b) noexcept {
    if (a.hi < b.lo) return b.lo - a.hi;
    if (b.hi < a.lo) return a.lo - b.hi;
    return 0.0;
}

// Spectral family of a Hermitian operator with clustered eigenvalues. The
// eigenvector basis is stored with columns grouped by sector (ascending
// eigenvalue), so P_m = B_m B_m^+.
class SectorFamily {
public:
    SectorFamily() = default;

    SectorFamily(Matrix basis, std::vector<double> eigenvalues, std::vector<Index> offsets)
        : basis_(std::move(basis)), eigenvalues_(std::move(eigenvalues)), offsets_(std::move(offsets)) {
        projectors_.reserve(eigenvalues_.size());
        for (std::size_t m = 0; m < eigenvalues_.size(); ++m) {
            const auto b = sector_basis(m);
            projectors_.push_back(hermitian_part(b * b.adjoint()));
        }
        column_sector_.resize(static_cast<std::size_t>(dim()));
        for (std::size_t m = 0; m < eigenvalues_.size(); ++m) {
            for (Index c = offsets_[m]; c < offsets_[m + 1]; ++c) column_sector_[static_cast<std::size_t>(c)] = m;
        }
    }

    std::size_t size() const noexcept { return eigenvalues_.size(); }
    Index dim() const noexcept { return basis_.rows(); }
    double eigenvalue(std::size_t m) const { return eigenvalues_.at(m); }
    const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
    const Matrix& projector(std::size_t m) const { return projectors_.at(m); }
    Index rank(std::size_t m) const { return offsets_.at(m + 1) - offsets_.at(m); }
    Index offset(std::size_t m) const { return offsets_.at(m); }
    const Matrix& basis() const noexcept { return basis_; }
    std::size_t sector_of_column(Index c) const { return column_sector_.at(static_cast<std::size_t>(c)); }

    Eigen::Block<const Matrix, Eigen::Dynamic, Eigen::Dynamic, true> sector_basis(std::size_t m) const {
        return basis_.middleCols(offsets_[m], offsets_[m + 1] - offsets_[m]);
    }

    // Smallest gap |lambda_m - lambda_n| over distinct sectors.
    double min_gap() const {
        double g = std::numeric_limits<double>::infinity();
        for (std::size_t m = 1; m < size(); ++m) g = std::min(g, eigenvalues_[m] - eigenvalues_[m - 1]);
        return g;
    }

    // P(Delta): sum of sector projectors with eigenvalue inside the window.
    Matrix window_projector(const Interval& window) const {
        Matrix p = Matrix::Zero(dim(), dim());
        for (std::size_t m = 0; m < size(); ++m) {
            if (window.contains(eigenvalues_[m])) p += projectors_[m];
        }
        return p;
    }

    std::vector<std::size_t> sectors_in(const Interval& window) const {
        std::vector<std::size_t> out;
        for (std::size_t m = 0; m < size(); ++m) {
            if (window.contains(eigenvalues_[m])) out.push_back(m);
        }
        return out;
    }

    Matrix recompose() const {
        Matrix v = Matrix::Zero(dim(), dim());
        for (std::size_t m = 0; m < size(); ++m) v += eigenvalues_[m] * projectors_[m];
        return v;
    }

    double orthogonality_defect() const {
        double d = 0.0;
        for (std::size_t m = 0; m < size(); ++m) {
            d = std::max(d, operator_norm(projectors_[m] * projectors_[m] - projectors_[m]));
            for (std::size_t n = 0; n < size(); ++n) {
                if (m != n) d = std::max(d, operator_norm(projectors_[m] * projectors_[n]));
            }
        }
        return d;
    }

    double completeness_defect() const {
        Matrix s = Matrix::Zero(dim(), dim());
        for (const auto& p : projectors_) s += p;
        return operator_norm(s - Matrix::Identity(dim(), dim()));
    }

private:
    Matrix basis_;
    std::vector<double> eigenvalues_;
    std::vector<Index> offsets_;
    std::vector<Matrix> projectors_;
    std::vector<std::size_t> column_sector_;
};

// Eigenvalues within cluster_tol of their cluster's first member are merged.
// A chain that would join two clusters within tolerance is ambiguous and raises
// DegenerateClustering.
inline SectorFamily spectral_projectors(const HermitianOperator& v, double cluster_tol = tol::cluster) {
    if (!(cluster_tol > 0.0)) throw Error(ErrorKind::precondition, "cluster_tol must be > 0");
    Eigen::SelfAdjointEigenSolver<Matrix> es(v.matrix());
    if (es.info() != Eigen::Success) throw Error(ErrorKind::precondition, "eigendecomposition failed");
    const RealVector& ev = es.eigenvalues();

    std::vector<double> means;
    std::vector<Index> offsets{0};
    Index start = 0;
    for (Index i = 1; i <= ev.size(); ++i) {
        if (i < ev.size() && ev(i) - ev(start) <= cluster_tol) continue;
        if (i < ev.size() && ev(i) - ev(i - 1) <= cluster_tol) {
            throw Error(ErrorKind::degenerate_clustering,
                        "eigenvalues " + std::to_string(ev(i - 1)) + " and " + std::to_string(ev(i)) +
                            " are within tolerance but fall in different clusters");
        }
        means.push_back(ev.segment(start, i - start).mean());
        offsets.push_back(i);
        start = i;
    }
    return SectorFamily(es.eigenvectors(), std::move(means), std::move(offsets));
}

// ----------------------------- Time evolution --------------------------------

// Eigendecomposition of a Hermitian generator, reused for every time sample.
class Propagator {
public:
    Propagator() = default;

    explicit Propagator(const HermitianOperator& h) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix());
        if (es.info() != Eigen::Success) throw Error(ErrorKind::precondition, "eigendecomposition failed");
        energies_ = es.eigenvalues();
        vectors_ = es.eigenvectors();
    }

    Index dim() const noexcept { return vectors_.rows(); }
    const RealVector& energies() const noexcept { return energies_; }
    const Matrix& eigenvectors() const noexcept { return vectors_; }

    // e^{-iHt}
    Matrix unitary(double t) const {
        if (t == 0.0) return Matrix::Identity(dim(), dim());
        Vector phases(dim());
        for (Index k = 0; k < dim(); ++k) phases(k) = std::polar(1.0, -energies_(k) * t);
        return vectors_ * phases.asDiagonal() * vectors_.adjoint();
    }

    // e^{-iHt} W e^{iHt}; W need not be positive.
    Matrix conjugate(const Matrix& w, double t) const {
        require_same_dim(w, vectors_, "Propagator::conjugate");
        if (t == 0.0) return w;
        Vector phases(dim());
        for (Index k = 0; k < dim(); ++k) phases(k) = std::polar(1.0, -energies_(k) * t);
        Matrix x = vectors_.adjoint() * w * vectors_;
        for (Index j = 0; j < dim(); ++j) {
            for (Index i = 0; i < dim(); ++i) x(i, j) *= phases(i) * std::conj(phases(j));
        }
        return vectors_ * x * vectors_.adjoint();
    }

    DensityOperator evolve(const DensityOperator& w, double t) const {
        if (t == 0.0) return w;
        return DensityOperator(hermitian_part(conjugate(w.matrix(), t)));
    }

private:
    RealVector energies_;
    Matrix vectors_;
};

inline DensityOperator evolve(const HermitianOperator& h, double t, const DensityOperator& w) {
    require_same_dim(h.matrix(), w.matrix(), "evolve");
    return Propagator(h).evolve(w, t);
}

// ------------------------------ Partial trace --------------------------------

inline Matrix partial_trace_env(const Matrix& w, Index dim_s, Index dim_e) {
    if (dim_s <= 0 || dim_e <= 0 || w.rows() != dim_s * dim_e || w.cols() != dim_s * dim_e) {
        throw Error(ErrorKind::dimension_mismatch, "partial_trace_env: " + std::to_string(w.rows()) + " != " +
                                                       std::to_string(dim_s) + "*" + std::to_string(dim_e));
    }
    Matrix rho = Matrix::Zero(dim_s, dim_s);
    for (Index s = 0; s < dim_s; ++s) {
        for (Index sp = 0; sp < dim_s; ++sp) {
            cplx acc{0.0, 0.0};
            for (Index e = 0; e < dim_e; ++e) acc += w(s * dim_e + e, sp * dim_e + e);
            rho(s, sp) = acc;
        }
    }
    return rho;
}

inline DensityOperator partial_trace_env(const DensityOperator& w, Index dim_s, Index dim_e) {
    return DensityOperator(hermitian_part(partial_trace_env(w.matrix(), dim_s, dim_e)));
}

// ------------------------------- Block norms ---------------------------------

struct BlockNorm {
    std::size_t m{0};
    std::size_t n{0};
    double trace_norm{0.0};
    double hs_norm{0.0};
    double operator_norm{0.0};
};

// Norms of P_m A P_n, computed on the isometric compression B_m^+ A B_n which has
// the same nonzero singular values.
inline std::vector<BlockNorm> block_norms(const Matrix& a, const SectorFamily& f) {
    require_same_dim(a, f.basis(), "block_norms");
    std::vector<BlockNorm> out;
    out.reserve(f.size() * f.size());
    for (std::size_t m = 0; m < f.size(); ++m) {
        for (std::size_t n = 0; n < f.size(); ++n) {
            const Matrix block = f.sector_basis(m).adjoint() * a * f.sector_basis(n);
            const RealVector s = singular_values(block);
            out.push_back({m, n, s.sum(), s.norm(), s.size() ? s.maxCoeff() : 0.0});
        }
    }
    return out;
}

} // namespace decoseed
