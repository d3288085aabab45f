// test_support.hpp - Independent reference computations for the test suite

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace testsupport {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

// Classical RK4 for d rho/dt = -i [H, rho]; no eigendecomposition involved.
inline Mat rk4_evolve(const Mat& h, const Mat& rho0, double t, int steps) {
    const cplx mi(0.0, -1.0);
    auto deriv = [&](const Mat& r) -> Mat { return mi * (h * r - r * h); };
    Mat r = rho0;
    const double dt = t / steps;
    for (int s = 0; s < steps; ++s) {
        const Mat k1 = deriv(r);
        const Mat k2 = deriv(r + 0.5 * dt * k1);
        const Mat k3 = deriv(r + 0.5 * dt * k2);
        const Mat k4 = deriv(r + dt * k3);
        r += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return r;
}

// Taylor series for exp(-i H t) with scaling and squaring.
inline Mat expm_taylor(const Mat& h, double t) {
    const double norm = h.cwiseAbs().rowwise().sum().maxCoeff() * std::abs(t);
    int squarings = 0;
    while (norm / std::pow(2.0, squarings) > 0.5) ++squarings;
    const Mat a = cplx(0.0, -t / std::pow(2.0, squarings)) * h;
    Mat term = Mat::Identity(h.rows(), h.cols()), sum = term;
    for (int k = 1; k < 30; ++k) {
        term = term * a / double(k);
        sum += term;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

// tr_E by explicit index sums, system index major.
inline Mat partial_trace_loops(const Mat& w, int ds, int de) {
    Mat out = Mat::Zero(ds, ds);
    for (int i = 0; i < ds; ++i)
        for (int j = 0; j < ds; ++j)
            for (int e = 0; e < de; ++e) out(i, j) += w(i * de + e, j * de + e);
    return out;
}

inline double trace_norm_eig(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.adjoint()));
    return es.eigenvalues().cwiseAbs().sum();
}

inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

} // namespace testsupport
