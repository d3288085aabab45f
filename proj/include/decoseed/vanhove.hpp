// vanhove.hpp - Decoherence by a free boson field with linear coupling
//
// Sector alpha of the system sees the environment Hamiltonian
// H_alpha = H_E + alpha Phi(f). With h = eps^{-1} f the evolution
// U_ab(t) = e^{i H_a t} e^{-i H_b t} is a Weyl operator up to a phase,
//
//   U_ab(t) = e^{i theta} T(-F, -G),
//   F = (a - b)(1 - cos eps t) h,   G = (a - b) sin(eps t) h,
//   theta = (a^2 - b^2)/2 * (h | (sin eps t - eps t) h),
//
// and all traces against coherent mixtures reduce to Gaussian matrix elements.
// The sector pair (m, n) of the reduced dynamics uses a = lambda_n, b = lambda_m.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "decoseed/fock.hpp"
#include "decoseed/qcore.hpp"
#include "decoseed/spectral_density.hpp"

namespace decoseed {

// ------------------------------- Mode functions ------------------------------

class ModeFunction {
public:
    ModeFunction() = default;

    ModeFunction(std::vector<double> k, std::vector<double> weights, std::vector<double> f, double c = 1.0)
        : k_(std::move(k)), w_(std::move(weights)), f_(std::move(f)), c_(c) {
        if (k_.empty() || k_.size() != w_.size() || k_.size() != f_.size()) {
            throw Error(ErrorKind::grid_mismatch, "ModeFunction: k, weights and f must have equal nonzero size");
        }
        if (!(c_ > 0.0)) throw Error(ErrorKind::negative_frequency, "ModeFunction: dispersion c must be > 0");
        for (std::size_t i = 0; i < k_.size(); ++i) {
            if (!(k_[i] > 0.0)) throw Error(ErrorKind::negative_frequency, "ModeFunction: k must be > 0");
            if (i > 0 && !(k_[i] > k_[i - 1])) throw Error(ErrorKind::precondition, "ModeFunction: k must be strictly increasing");
            if (!(w_[i] > 0.0)) throw Error(ErrorKind::precondition, "ModeFunction: weights must be > 0");
            if (!std::isfinite(f_[i])) throw Error(ErrorKind::precondition, "ModeFunction: f must be finite");
        }
    }

    // Geometric grid between k_min and k_max with trapezoid weights.
    static ModeFunction geometric(double k_min, double k_max, std::size_t points, const std::function<double(double)>& fn,
                                  double c = 1.0) {
        if (!(k_min > 0.0 && k_max > k_min)) throw Error(ErrorKind::precondition, "geometric: need 0 < k_min < k_max");
        if (points < 2) throw Error(ErrorKind::precondition, "geometric: need at least 2 points");
        std::vector<double> k(points), f(points);
        const double r = std::log(k_max / k_min);
        for (std::size_t i = 0; i < points; ++i) {
            k[i] = k_min * std::exp(r * static_cast<double>(i) / static_cast<double>(points - 1));
        }
        k.front() = k_min;
        k.back() = k_max;
        for (std::size_t i = 0; i < points; ++i) f[i] = fn(k[i]);
        auto w = trapezoid_weights(k);
        return ModeFunction(std::move(k), std::move(w), std::move(f), c);
    }

    // One mode of frequency eps with unit weight.
    static ModeFunction single_mode(double eps, double f0) {
        if (!(eps > 0.0)) throw Error(ErrorKind::negative_frequency, "single_mode: eps must be > 0");
        return ModeFunction({eps}, {1.0}, {f0}, 1.0);
    }

    const std::vector<double>& k() const noexcept { return k_; }
    const std::vector<double>& weights() const noexcept { return w_; }
    const std::vector<double>& f() const noexcept { return f_; }
    double c() const noexcept { return c_; }
    std::size_t size() const noexcept { return k_.size(); }
    double eps(std::size_t i) const { return c_ * k_.at(i); }

    // eps^{-1} f
    std::vector<double> h() const {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) out[i] = f_[i] / eps(i);
        return out;
    }

    double inner(std::span<const double> u, std::span<const double> v) const {
        if (u.size() != size() || v.size() != size()) throw Error(ErrorKind::grid_mismatch, "ModeFunction::inner");
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) s += u[i] * v[i] * w_[i];
        return s;
    }

    double norm_sq() const { return inner(f_, f_); }
    double inv_eps_norm_sq() const {
        const auto x = h();
        return inner(x, x);
    }
    double inv_sqrt_eps_norm_sq() const {
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) s += f_[i] * f_[i] / eps(i) * w_[i];
        return s;
    }

    // The velocity-coupled Hamiltonian stays bounded below when ||eps^{-1/2} f|| < 2^{-1/2}.
    bool bounded_below() const { return std::sqrt(inv_sqrt_eps_norm_sq()) < 1.0 / std::sqrt(2.0); }

private:
    std::vector<double> k_, w_, f_;
    double c_{1.0};
};

// ------------------------------ Coherent states ------------------------------

struct CoherentTerm {
    double weight{1.0};
    std::vector<double> f;
    std::vector<double> g;
};

struct CoherentMixture {
    std::vector<CoherentTerm> terms;

    static CoherentMixture vacuum(std::size_t grid) {
        return CoherentMixture{{CoherentTerm{1.0, std::vector<double>(grid, 0.0), std::vector<double>(grid, 0.0)}}};
    }

    void validate(std::size_t grid) const {
        if (terms.empty()) throw Error(ErrorKind::weight_sum_invalid, "CoherentMixture: no terms");
        double s = 0.0;
        for (const auto& t : terms) {
            if (!(t.weight >= 0.0)) throw Error(ErrorKind::precondition, "CoherentMixture: weights must be >= 0");
            if (t.f.size() != grid || t.g.size() != grid) throw Error(ErrorKind::grid_mismatch, "CoherentMixture: term grid size");
            s += t.weight;
        }
        if (!(std::abs(s - 1.0) <= 1e-10)) {
            throw Error(ErrorKind::weight_sum_invalid, "CoherentMixture: weights sum to " + std::to_string(s));
        }
    }
};

// ---------------------------- Displacement pairs -----------------------------

struct DisplacementPair {
    std::vector<double> F;
    std::vector<double> G;
    double t{0.0};
    double phase{0.0};
    std::vector<double> weights;

    double inner(std::span<const double> u, std::span<const double> v) const {
        if (u.size() != weights.size() || v.size() != weights.size()) {
            throw Error(ErrorKind::grid_mismatch, "DisplacementPair: grid function size");
        }
        double s = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) s += u[i] * v[i] * weights[i];
        return s;
    }

    double norm_sq() const { return inner(F, F) + inner(G, G); }
};

struct DisplacementOptions {
    double ir_cap{1e4};          // cap on ||eps^{-1} f||^2
    bool allow_ir_divergent{false};
};

inline void check_ir(const ModeFunction& mf, const DisplacementOptions& opt) {
    const double n = mf.inv_eps_norm_sq();
    if (!opt.allow_ir_divergent && !(n <= opt.ir_cap)) {
        throw Error(ErrorKind::ir_divergent_without_override,
                    "||eps^{-1} f||^2 = " + std::to_string(n) + " exceeds cap " + std::to_string(opt.ir_cap));
    }
}

inline DisplacementPair displacement_pair_unchecked(const ModeFunction& mf, double alpha, double beta, double t) {
    DisplacementPair d;
    d.t = t;
    d.weights = mf.weights();
    d.F.assign(mf.size(), 0.0);
    d.G.assign(mf.size(), 0.0);
    if (t == 0.0 || alpha == beta) return d;
    const double ab = alpha - beta;
    double s = 0.0;
    for (std::size_t i = 0; i < mf.size(); ++i) {
        const double e = mf.eps(i);
        const double h = mf.f()[i] / e;
        const double x = e * t;
        d.F[i] = ab * (1.0 - std::cos(x)) * h;
        d.G[i] = ab * std::sin(x) * h;
        s += h * h * (std::sin(x) - x) * mf.weights()[i];
    }
    d.phase = 0.5 * (alpha * alpha - beta * beta) * s;
    return d;
}

inline DisplacementPair displacement_pair(const ModeFunction& mf, double alpha, double beta, double t,
                                          const DisplacementOptions& opt = {}) {
    check_ir(mf, opt);
    return displacement_pair_unchecked(mf, alpha, beta, t);
}

// <T(f_m, g_m) Omega| U |T(f_n, g_n) Omega> for U = e^{i phase} T(-F, -G).
inline cplx coherent_matrix_element(const DisplacementPair& d, std::span<const double> f_m, std::span<const double> g_m,
                                    std::span<const double> f_n, std::span<const double> g_n) {
    const std::size_t n = d.weights.size();
    if (d.F.size() != n || d.G.size() != n || f_m.size() != n || g_m.size() != n || f_n.size() != n || g_n.size() != n) {
        throw Error(ErrorKind::grid_mismatch, "coherent_matrix_element: grid functions differ in size");
    }
    double a2 = 0.0, b2 = 0.0, phi = d.phase;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = d.weights[i];
        const double a = f_n[i] - f_m[i] - d.F[i];
        const double b = g_n[i] - g_m[i] - d.G[i];
        a2 += a * a * w;
        b2 += b * b * w;
        phi += 0.5 * w * (f_m[i] * d.G[i] - d.F[i] * g_m[i]);
        phi += 0.5 * w * (-f_m[i] * g_n[i] - d.F[i] * g_n[i] + f_n[i] * g_m[i] + f_n[i] * d.G[i]);
    }
    return std::polar(std::exp(-0.25 * a2 - 0.25 * b2), phi);
}

inline cplx mixture_trace(const DisplacementPair& d, const CoherentMixture& omega) {
    cplx acc{0.0, 0.0};
    for (const auto& term : omega.terms) acc += term.weight * coherent_matrix_element(d, term.f, term.g, term.f, term.g);
    return acc;
}

inline std::vector<cplx> chi_vanhove(const CoherentMixture& omega, const ModeFunction& mf, double alpha, double beta,
                                     std::span<const double> times, const DisplacementOptions& opt = {}) {
    omega.validate(mf.size());
    check_ir(mf, opt);
    std::vector<cplx> out(times.size(), cplx(1.0, 0.0));
    if (alpha == beta) return out;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] == 0.0) continue;
        out[i] = mixture_trace(displacement_pair_unchecked(mf, alpha, beta, times[i]), omega);
    }
    return out;
}

// ------------------------------ Infrared behaviour ---------------------------

struct ModeFamily {
    std::function<double(double)> f;
    double k_max{1.0};
    std::size_t points{4096};
    double c{1.0};
    std::optional<ModeFunction> fixed;   // a cutoff-independent mode set, e.g. one mode

    ModeFunction at(double k_min) const {
        if (fixed) return *fixed;
        return ModeFunction::geometric(k_min, k_max, points, f, c);
    }
};

struct IRReport {
    bool regular{false};
    std::vector<double> cutoffs;
    std::vector<double> exponents;        // D(t_probe) = (||F||^2 + ||G||^2)/4 per cutoff
    std::vector<double> inv_eps_norm_sq;  // ||eps^{-1} f||^2 per cutoff
    bool exponents_increasing{false};
    double sup_bound{std::numeric_limits<double>::infinity()};  // bound on sup_t |log chi_vacuum|
};

inline constexpr double ir_convergence_tolerance = 0.05;

inline IRReport ir_classify(const ModeFamily& family, std::span<const double> cutoffs, double t_probe,
                            double alpha = 0.5, double beta = -0.5) {
    if (cutoffs.size() < 2 && !family.fixed) throw Error(ErrorKind::precondition, "ir_classify: need at least two cutoffs");
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
        if (!(cutoffs[i] > 0.0) || (i > 0 && !(cutoffs[i] < cutoffs[i - 1]))) {
            throw Error(ErrorKind::non_monotone_cutoffs, "ir_classify: cutoffs must be positive and strictly decreasing");
        }
    }
    IRReport r;
    r.cutoffs.assign(cutoffs.begin(), cutoffs.end());
    for (double k_min : cutoffs) {
        const ModeFunction mf = family.at(k_min);
        const auto d = displacement_pair_unchecked(mf, alpha, beta, t_probe);
        r.exponents.push_back(0.25 * d.norm_sq());
        r.inv_eps_norm_sq.push_back(mf.inv_eps_norm_sq());
    }
    r.exponents_increasing = r.exponents.size() >= 2;
    for (std::size_t i = 1; i < r.exponents.size(); ++i) {
        r.exponents_increasing = r.exponents_increasing && r.exponents[i] > r.exponents[i - 1];
    }
    if (family.fixed || r.inv_eps_norm_sq.size() < 2) {
        r.regular = true;
    } else {
        const double a = r.inv_eps_norm_sq[r.inv_eps_norm_sq.size() - 2];
        const double b = r.inv_eps_norm_sq.back();
        r.regular = std::isfinite(b) && std::abs(b - a) <= ir_convergence_tolerance * std::abs(b);
    }
    if (r.regular) r.sup_bound = (alpha - beta) * (alpha - beta) * r.inv_eps_norm_sq.back();
    return r;
}

// ------------------------------- Single mode ---------------------------------

// One oscillator H_E = (P^2 + eps^2 Q^2)/2 with coupling f0 Q; eps = 0 is a free
// particle. Coherent states are displacements of the eps = 1 ground state.
inline DisplacementPair single_mode_displacement(double eps, double f0, double alpha, double beta, double t) {
    if (eps < 0.0 || !std::isfinite(eps)) throw Error(ErrorKind::negative_frequency, "single_mode: eps must be >= 0");
    DisplacementPair d;
    d.t = t;
    d.weights = {1.0};
    const double ab = (alpha - beta) * f0;
    const double a2b2 = (alpha * alpha - beta * beta) * f0 * f0;
    if (eps == 0.0) {
        d.F = {0.5 * ab * t * t};
        d.G = {ab * t};
        d.phase = -a2b2 * t * t * t / 12.0;
    } else {
        const double x = eps * t;
        d.F = {ab * (1.0 - std::cos(x)) / (eps * eps)};
        d.G = {ab * std::sin(x) / eps};
        d.phase = 0.5 * a2b2 * (std::sin(x) - x) / (eps * eps * eps);
    }
    return d;
}

inline std::vector<cplx> single_mode_chi(double eps, double f0, double alpha, double beta, const CoherentMixture& state,
                                         std::span<const double> times) {
    if (eps < 0.0 || !std::isfinite(eps)) throw Error(ErrorKind::negative_frequency, "single_mode_chi: eps must be >= 0");
    state.validate(1);
    std::vector<cplx> out(times.size(), cplx(1.0, 0.0));
    if (alpha == beta) return out;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] == 0.0) continue;
        out[i] = mixture_trace(single_mode_displacement(eps, f0, alpha, beta, times[i]), state);
    }
    return out;
}

// ------------------------------ Dressing identity ----------------------------

// ||T H_E T^{-1} - lambda^2/2 ||eps^{-1/2} f||^2 - (H_E + lambda Phi(f))|| on the lowest
// n_max/2 levels, with T = T(-lambda eps^{-1} f, 0).
inline double dressing_identity_check(const ModeFunction& mf, double lambda, int n_max) {
    if (mf.size() != 1) throw Error(ErrorKind::precondition, "dressing_identity_check: single mode only");
    if (n_max < 20) throw Error(ErrorKind::truncation_too_small, "dressing_identity_check: n_max must be >= 20");
    if (lambda == 0.0) return 0.0;
    const FockOracle o(n_max);
    const double e = mf.eps(0);
    const double f = mf.f()[0] * std::sqrt(mf.weights()[0]);
    const double h = f / e;
    const Matrix he = o.hamiltonian(e);
    const Matrix t = o.weyl(-lambda * h, 0.0);
    const Matrix lhs = t * he * t.adjoint() - 0.5 * lambda * lambda * (f * f / e) * Matrix::Identity(o.dim(), o.dim());
    const Matrix rhs = he + lambda * f * o.q();
    return operator_norm(o.low_block(lhs - rhs, n_max / 2));
}

} // namespace decoseed
