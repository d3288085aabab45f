// random.hpp - Seeded random matrices for property checks and scenario draws

#pragma once

#include <random>

#include "decoseed/qcore.hpp"

namespace decoseed::rnd {

using Engine = std::mt19937_64;

inline Matrix ginibre(Index rows, Index cols, Engine& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = cplx(g(rng), g(rng));
    }
    return m;
}

inline HermitianOperator hermitian(Index dim, Engine& rng) {
    return HermitianOperator(hermitian_part(ginibre(dim, dim, rng)));
}

inline DensityOperator density(Index dim, Engine& rng) {
    const Matrix g = ginibre(dim, dim, rng);
    Matrix w = g * g.adjoint();
    w /= w.trace().real();
    return DensityOperator(hermitian_part(w));
}

inline Matrix unitary(Index dim, Engine& rng) {
    Eigen::HouseholderQR<Matrix> qr(ginibre(dim, dim, rng));
    return qr.householderQ();
}

} // namespace decoseed::rnd
