// araki_zurek.hpp - Closed-form reduced dynamics for commuting system-environment models
//
// Total Hamiltonian H_S x I + I x H_E + V_S x V_E with [H_S, V_S] = 0 and, for the
// environment, [H_E, V_E] = 0. For a product initial state rho x omega the
// reduced state is
//
//   P_m rho(t) P_n = P_m e^{-iH_S t} rho e^{iH_S t} P_n * chi_{m,n}(t),
//   chi_{m,n}(t)   = integral of exp(-i (lambda_m - lambda_n) lambda t) dmu(lambda),
//
// where mu is the spectral measure of V_E in the environment state.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "decoseed/qcore.hpp"
#include "decoseed/random.hpp"
#include "decoseed/spectral_density.hpp"

namespace decoseed {

// ------------------------------- Model spec ----------------------------------

struct SystemSpec {
    HermitianOperator H_S;
    HermitianOperator V_S;
    SectorFamily sectors;

    Index dim() const noexcept { return H_S.dim(); }
};

struct EnvironmentOperators {
    HermitianOperator H_E;
    HermitianOperator V_E;
};

inline SystemSpec validate_model(const HermitianOperator& h_s, const HermitianOperator& v_s,
                                 const std::optional<EnvironmentOperators>& env = std::nullopt,
                                 double cluster_tol = tol::cluster) {
    require_same_dim(h_s.matrix(), v_s.matrix(), "validate_model");
    const double c = operator_norm(commutator(h_s.matrix(), v_s.matrix()));
    if (!(c <= tol::commutator)) {
        throw Error(ErrorKind::assumption_violated, "[H_S, V_S] != 0 (norm " + std::to_string(c) + ")");
    }
    SectorFamily sectors = spectral_projectors(v_s, cluster_tol);
    for (std::size_t m = 0; m < sectors.size(); ++m) {
        const double cp = operator_norm(commutator(h_s.matrix(), sectors.projector(m)));
        if (!(cp <= tol::commutator)) {
            throw Error(ErrorKind::assumption_violated,
                        "[H_S, P_" + std::to_string(m) + "] != 0 (norm " + std::to_string(cp) + ")");
        }
    }
    if (env) {
        require_same_dim(env->H_E.matrix(), env->V_E.matrix(), "validate_model");
        const double ce = operator_norm(commutator(env->H_E.matrix(), env->V_E.matrix()));
        if (!(ce <= tol::commutator)) {
            throw Error(ErrorKind::assumption_violated, "[H_E, V_E] != 0 (norm " + std::to_string(ce) + ")");
        }
    }
    return SystemSpec{h_s, v_s, std::move(sectors)};
}

// ----------------------------- Decoherence function --------------------------

inline constexpr double measure_tolerance = 1e-8;

inline void require_normalized(const SpectralDensity& mu) {
    const double d = mu.normalization_defect();
    if (!(d <= measure_tolerance)) {
        throw Error(ErrorKind::unnormalized_measure, "total mass deviates from 1 by " + std::to_string(d));
    }
}

// Fourier quadrature of a continuous measure aliases once |dlambda| t h exceeds pi.
inline void require_nyquist(const SpectralDensity& mu, double delta_lambda, std::span<const double> times) {
    if (mu.is_discrete() || times.empty()) return;
    double t_max = 0.0;
    for (double t : times) t_max = std::max(t_max, std::abs(t));
    const double phase_step = std::abs(delta_lambda) * t_max * mu.max_spacing();
    if (phase_step > std::numbers::pi) {
        throw Error(ErrorKind::nyquist_violation,
                    "|dlambda| * t_max * grid spacing = " + std::to_string(phase_step) + " > pi; refine the grid");
    }
}

inline std::vector<cplx> chi_spectral(const SpectralDensity& mu, double delta_lambda, std::span<const double> times) {
    require_normalized(mu);
    require_nyquist(mu, delta_lambda, times);
    std::vector<cplx> out(times.size());
    const auto& grid = mu.grid();
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double w = delta_lambda * times[i];
        cplx acc{0.0, 0.0};
        for (std::size_t k = 0; k < grid.size(); ++k) acc += mu.probability(k) * std::polar(1.0, -w * grid[k]);
        out[i] = acc;
    }
    return out;
}

// ----------------------------- Decoherence curve -----------------------------

struct DecoherenceCurve {
    std::vector<double> times;
    std::vector<Matrix> chi;                 // per time: sectors x sectors
    std::vector<Eigen::MatrixXd> block_tn;   // per time: trace norms of P_m rho P_n
    std::vector<Eigen::MatrixXd> block_hs;   // per time: Hilbert-Schmidt norms

    std::size_t samples() const noexcept { return times.size(); }
    std::size_t sectors() const noexcept { return chi.empty() ? 0 : static_cast<std::size_t>(chi.front().rows()); }

    std::vector<double> abs_chi(std::size_t m, std::size_t n) const {
        std::vector<double> out(samples());
        for (std::size_t i = 0; i < samples(); ++i) out[i] = std::abs(chi[i](Index(m), Index(n)));
        return out;
    }

    std::vector<double> trace_norms(std::size_t m, std::size_t n) const {
        std::vector<double> out(samples());
        for (std::size_t i = 0; i < samples(); ++i) out[i] = block_tn[i](Index(m), Index(n));
        return out;
    }

    void append(double t, Matrix c, const Matrix& state, const SectorFamily& f) {
        times.push_back(t);
        chi.push_back(std::move(c));
        Eigen::MatrixXd tn(f.size(), f.size()), hs(f.size(), f.size());
        for (const auto& b : block_norms(state, f)) {
            tn(Index(b.m), Index(b.n)) = b.trace_norm;
            hs(Index(b.m), Index(b.n)) = b.hs_norm;
        }
        block_tn.push_back(std::move(tn));
        block_hs.push_back(std::move(hs));
    }
};

// chi_{m,n} as a sectors x sectors matrix per time: diagonal exactly 1, lower
// triangle the conjugate of the upper.
inline std::vector<Matrix> chi_matrices(const SpectralDensity& mu, const SectorFamily& f, std::span<const double> times) {
    const auto s = static_cast<Index>(f.size());
    std::vector<Matrix> out(times.size(), Matrix::Identity(s, s));
    for (Index m = 0; m < s; ++m) {
        for (Index n = m + 1; n < s; ++n) {
            const auto c = chi_spectral(mu, f.eigenvalue(std::size_t(m)) - f.eigenvalue(std::size_t(n)), times);
            for (std::size_t i = 0; i < times.size(); ++i) {
                out[i](m, n) = c[i];
                out[i](n, m) = std::conj(c[i]);
            }
        }
    }
    return out;
}

// rho = sum_{m,n} chi_{m,n} P_m X P_n, evaluated in the sector basis as a Schur product.
inline Matrix apply_sector_weights(const Matrix& x, const Matrix& chi, const SectorFamily& f) {
    Matrix y = f.basis().adjoint() * x * f.basis();
    for (Index j = 0; j < y.cols(); ++j) {
        const Index sj = Index(f.sector_of_column(j));
        for (Index i = 0; i < y.rows(); ++i) y(i, j) *= chi(Index(f.sector_of_column(i)), sj);
    }
    return f.basis() * y * f.basis().adjoint();
}

struct ReducedDynamics {
    DecoherenceCurve curve;
    std::vector<DensityOperator> states;
};

inline ReducedDynamics reduced_blocks_factorized(const DensityOperator& rho0, const SystemSpec& spec,
                                                 const SpectralDensity& mu, std::span<const double> times) {
    require_same_dim(rho0.matrix(), spec.H_S.matrix(), "reduced_blocks_factorized");
    const auto chis = chi_matrices(mu, spec.sectors, times);
    const Propagator u_s(spec.H_S);

    ReducedDynamics out;
    out.states.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        if (t == 0.0) {
            out.states.push_back(rho0);
        } else {
            const Matrix x = u_s.conjugate(rho0.matrix(), t);
            out.states.emplace_back(hermitian_part(apply_sector_weights(x, chis[i], spec.sectors)));
        }
        out.curve.append(t, chis[i], out.states.back().matrix(), spec.sectors);
    }
    return out;
}

// --------------------------------- Mixtures ----------------------------------

struct MixtureTerm {
    double weight{1.0};
    DensityOperator rho;
    SpectralDensity omega;
};

struct MixtureInitialState {
    std::vector<MixtureTerm> terms;

    double weight_sum() const {
        double s = 0.0;
        for (const auto& t : terms) s += t.weight;
        return s;
    }
};

struct MixtureDynamics {
    std::vector<Matrix> states;
    DecoherenceCurve curve;   // chi is the weighted sum of the per-term chi
};

// Linear in the initial state; the total need not be positive termwise.
inline MixtureDynamics mixture_dynamics(const MixtureInitialState& w, const SystemSpec& spec, std::span<const double> times) {
    if (w.terms.empty() || !(std::abs(w.weight_sum() - 1.0) <= 1e-10)) {
        throw Error(ErrorKind::weight_sum_invalid, "mixture weights sum to " + std::to_string(w.weight_sum()));
    }
    const auto s = static_cast<Index>(spec.sectors.size());
    MixtureDynamics out;
    out.states.assign(times.size(), Matrix::Zero(spec.dim(), spec.dim()));
    std::vector<Matrix> chi(times.size(), Matrix::Zero(s, s));
    for (const auto& term : w.terms) {
        const auto part = reduced_blocks_factorized(term.rho, spec, term.omega, times);
        for (std::size_t i = 0; i < times.size(); ++i) {
            out.states[i] += term.weight * part.states[i].matrix();
            chi[i] += term.weight * part.curve.chi[i];
        }
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        out.states[i] = hermitian_part(out.states[i]);
        out.curve.append(times[i], chi[i], out.states[i], spec.sectors);
    }
    return out;
}

// ------------------------------- Decay bounds --------------------------------

struct DecayBound {
    double C_gamma{0.0};
    double gamma{0.0};
    double delta{0.0};

    double at(double t) const { return C_gamma * std::pow(1.0 + delta * std::abs(t), -gamma); }

    bool certifies(std::span<const double> times, std::span<const double> values, double rel_slack = 1e-6) const {
        if (times.size() != values.size()) throw Error(ErrorKind::dimension_mismatch, "certifies: size mismatch");
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (values[i] > at(times[i]) * (1.0 + rel_slack)) return false;
        }
        return true;
    }
};

enum class DecayStatus { certified, insufficient_decay };

struct DecayFit {
    DecayBound bound;
    bool holds{false};
    DecayStatus status{DecayStatus::insufficient_decay};
    std::size_t fit_samples{0};
};

inline constexpr double decay_floor = 1e-12;

// The exponent is the least-squares slope of log(envelope) against
// log(1 + delta t), where the envelope is the running maximum taken from the
// right. The constant is the smallest one that makes C (1 + delta t)^-gamma a
// bound on every sample, so any smaller gamma with the same C is a bound too.
inline DecayFit fit_decay_bound(std::span<const double> times, std::span<const double> magnitudes, double delta) {
    if (times.size() != magnitudes.size()) throw Error(ErrorKind::dimension_mismatch, "fit_decay_bound: size mismatch");
    if (times.size() < 64) throw Error(ErrorKind::precondition, "fit_decay_bound: need at least 64 samples");
    if (!(delta > 0.0)) throw Error(ErrorKind::precondition, "fit_decay_bound: delta must be > 0");

    const std::size_t n = times.size();
    std::vector<double> env(n);
    double run = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        run = std::max(run, magnitudes[i]);
        env[i] = run;
    }

    DecayFit fit;
    fit.bound.delta = delta;
    const double half = times.front() + 0.5 * (times.back() - times.front());
    bool decays = false;
    for (std::size_t i = 0; i < n && times[i] <= half; ++i) decays = decays || env[i] < 0.9;

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(env[i] > decay_floor)) continue;
        const double x = std::log1p(delta * std::abs(times[i]));
        const double y = std::log(env[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++k;
    }
    fit.fit_samples = k;
    const double denom = static_cast<double>(k) * sxx - sx * sx;
    const double slope = (k >= 2 && denom > 0.0) ? (static_cast<double>(k) * sxy - sx * sy) / denom : 0.0;
    fit.bound.gamma = -slope;

    if (!decays || !(fit.bound.gamma > 0.0)) {
        fit.status = DecayStatus::insufficient_decay;
        fit.bound.gamma = std::max(fit.bound.gamma, 0.0);
        fit.bound.C_gamma = *std::max_element(magnitudes.begin(), magnitudes.end());
        fit.holds = false;
        return fit;
    }

    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        c = std::max(c, magnitudes[i] * std::pow(1.0 + delta * std::abs(times[i]), fit.bound.gamma));
    }
    fit.bound.C_gamma = c;
    fit.status = DecayStatus::certified;
    fit.holds = fit.bound.certifies(times, magnitudes);
    return fit;
}

inline DecayFit fit_decay_bound(const DecoherenceCurve& curve, std::size_t m, std::size_t n, double delta) {
    const auto mags = curve.abs_chi(m, n);
    return fit_decay_bound(curve.times, mags, delta);
}

// ------------------------- Windows of a dense spectrum -----------------------

inline constexpr std::size_t dense_spectrum_min_sectors = 64;

// ||P(window_a) rho(t) P(window_b)||_2 for the product state rho0 x omega.
inline std::vector<double> window_block_norm(const SystemSpec& spec, const Interval& window_a, const Interval& window_b,
                                             const DensityOperator& rho0, const SpectralDensity& mu,
                                             std::span<const double> times) {
    if (!(distance(window_a, window_b) > 0.0)) {
        throw Error(ErrorKind::overlapping_windows, "windows must have positive distance");
    }
    if (spec.sectors.size() < dense_spectrum_min_sectors) {
        throw Error(ErrorKind::precondition, "window_block_norm: V_S needs a dense spectrum of at least 64 eigenvalues");
    }
    require_same_dim(rho0.matrix(), spec.H_S.matrix(), "window_block_norm");
    const auto& f = spec.sectors;
    const auto rows = f.sectors_in(window_a);
    const auto cols = f.sectors_in(window_b);

    std::map<std::pair<std::size_t, std::size_t>, std::vector<cplx>> chi;
    for (auto m : rows) {
        for (auto n : cols) chi.emplace(std::pair{m, n}, chi_spectral(mu, f.eigenvalue(m) - f.eigenvalue(n), times));
    }

    const Propagator u_s(spec.H_S);
    std::vector<double> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const Matrix x = f.basis().adjoint() * u_s.conjugate(rho0.matrix(), times[i]) * f.basis();
        double acc = 0.0;
        for (auto m : rows) {
            for (auto n : cols) {
                const double c = std::norm(chi.at({m, n})[i]);
                acc += c * x.block(f.offset(m), f.offset(n), f.rank(m), f.rank(n)).squaredNorm();
            }
        }
        out[i] = std::sqrt(acc);
    }
    return out;
}

// ------------------------------ Point spectra --------------------------------

// Largest g with every value an integer multiple of g within rel_tol.
inline double approximate_gcd(std::span<const double> values, double rel_tol = 1e-9) {
    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::abs(v));
    if (!(scale > 0.0)) return 0.0;
    const double eps = rel_tol * scale;
    double g = 0.0;
    for (double v : values) {
        double a = std::abs(v), b = g;
        if (b < a) std::swap(a, b);
        while (a > eps) {
            double r = std::fmod(b, a);
            if (a - r <= eps) r = 0.0;
            b = a;
            a = r;
        }
        g = b;
    }
    return g;
}

// Time after which chi_{m,n} returns for a discrete measure with commensurate atoms.
inline double recurrence_time(const SpectralDensity& mu, double delta_lambda) {
    if (!mu.is_discrete()) throw Error(ErrorKind::precondition, "recurrence_time: needs a discrete measure");
    std::vector<double> gaps;
    for (std::size_t k = 1; k < mu.size(); ++k) gaps.push_back(mu.grid()[k] - mu.grid()[k - 1]);
    const double g = approximate_gcd(gaps);
    if (!(g > 0.0) || delta_lambda == 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 * std::numbers::pi / (std::abs(delta_lambda) * g);
}

// -------------------------- Off-diagonal observables -------------------------

// A - sum_m P_m A P_m: an observable without diagonal matrix elements.
inline Matrix strip_diagonal_blocks(const Matrix& a, const SectorFamily& f) {
    require_same_dim(a, f.basis(), "strip_diagonal_blocks");
    Matrix out = a;
    for (std::size_t m = 0; m < f.size(); ++m) out -= f.projector(m) * a * f.projector(m);
    return out;
}

// Hermitian, unit operator norm, and P_m A P_m = 0 for every sector.
inline std::vector<Matrix> random_offdiagonal_observables(const SectorFamily& f, std::size_t count, rnd::Engine& rng) {
    std::vector<Matrix> out;
    out.reserve(count);
    while (out.size() < count) {
        Matrix a = hermitian_part(strip_diagonal_blocks(rnd::hermitian(f.dim(), rng).matrix(), f));
        const double n = hermitian_operator_norm(a);
        if (n > 0.0) out.push_back(a / n);
    }
    return out;
}

// True when every off-diagonal block of every evolved state stays below the bound.
inline bool certificate_holds_for_states(const DecayBound& bound, const SystemSpec& spec, const SpectralDensity& mu,
                                         std::span<const double> times, std::span<const DensityOperator> states,
                                         double rel_slack = 1e-6) {
    for (const auto& rho0 : states) {
        const auto dyn = reduced_blocks_factorized(rho0, spec, mu, times);
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double cap = bound.at(times[i]) * (1.0 + rel_slack);
            for (std::size_t m = 0; m < spec.sectors.size(); ++m) {
                for (std::size_t n = 0; n < spec.sectors.size(); ++n) {
                    if (m != n && dyn.curve.block_tn[i](Index(m), Index(n)) > cap) return false;
                }
            }
        }
    }
    return true;
}

// |tr(A rho)| for each observable.
inline std::vector<double> observable_magnitudes(std::span<const Matrix> observables, const Matrix& rho) {
    std::vector<double> out;
    out.reserve(observables.size());
    for (const auto& a : observables) {
        require_same_dim(a, rho, "observable_magnitudes");
        out.push_back(std::abs((a * rho).trace()));
    }
    return out;
}

} // namespace decoseed
