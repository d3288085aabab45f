// run.hpp - Scenario execution, validation summary and artifact emission

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "decoseed/araki_zurek.hpp"
#include "decoseed/fock.hpp"
#include "decoseed/harness/config.hpp"
#include "decoseed/oracle.hpp"
#include "decoseed/random.hpp"
#include "decoseed/scattering.hpp"
#include "decoseed/vanhove.hpp"

namespace decoseed::harness {

inline constexpr const char* version = "1.0.0";
inline constexpr const char* csv_header = "t,pair_m,pair_n,re_chi,im_chi,abs_chi,block_tn,block_hs";

struct ValidationCheck {
    std::string name;
    bool passed{false};
    double value{0.0};
    double threshold{0.0};
    bool hard{true};      // hard checks decide the exit status
    bool oracle{false};   // oracle checks map to the oracle-mismatch status
};

struct RunOptions {
    bool write_files{true};
    std::optional<std::string> output_dir;
    std::optional<bool> oracle;
};

struct RunArtifacts {
    int status{0};   // 0 ok, 2 validation failure, 3 oracle mismatch
    ScenarioConfig config;
    DecoherenceCurve curve;
    std::vector<Matrix> states;
    std::vector<ValidationCheck> checks;
    std::optional<double> oracle_deviation;
    nlohmann::ordered_json report = nlohmann::ordered_json::object();
    std::vector<std::string> files;
    nlohmann::ordered_json manifest;

    const ValidationCheck* check(std::string_view name) const {
        for (const auto& c : checks) {
            if (c.name == name) return &c;
        }
        return nullptr;
    }
};

// ---------------------------------- Threads ----------------------------------

inline unsigned worker_count() {
    unsigned n = 0;
    if (const char* env = std::getenv("DECOSEED_THREADS")) n = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

// Evaluates fn on contiguous chunks of the time grid and concatenates the
// results in order, so the output does not depend on the worker count.
template <class Fn>
ReducedDynamics chunked_dynamics(std::span<const double> times, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(1, times.size() / 16));
    if (workers <= 1) return fn(times);
    std::vector<ReducedDynamics> parts(workers);
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t a = times.size() * w / workers, b = times.size() * (w + 1) / workers;
            pool.emplace_back([&, w, a, b] {
                try {
                    parts[w] = fn(times.subspan(a, b - a));
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    ReducedDynamics out;
    for (auto& p : parts) {
        auto& c = out.curve;
        c.times.insert(c.times.end(), p.curve.times.begin(), p.curve.times.end());
        c.chi.insert(c.chi.end(), p.curve.chi.begin(), p.curve.chi.end());
        c.block_tn.insert(c.block_tn.end(), p.curve.block_tn.begin(), p.curve.block_tn.end());
        c.block_hs.insert(c.block_hs.end(), p.curve.block_hs.begin(), p.curve.block_hs.end());
        out.states.insert(out.states.end(), p.states.begin(), p.states.end());
    }
    return out;
}

// ------------------------------ Shared checks --------------------------------

inline void add_check(RunArtifacts& r, std::string name, bool passed, double value, double threshold, bool hard = true,
                      bool oracle = false) {
    r.checks.push_back({std::move(name), passed, value, threshold, hard, oracle});
}

inline void check_states(RunArtifacts& r) {
    double trace = 0.0, herm = 0.0, min_eig = std::numeric_limits<double>::infinity();
    for (const auto& s : r.states) {
        const auto d = validate_density(s);
        trace = std::max(trace, d.trace_defect);
        herm = std::max(herm, d.hermiticity_defect);
        min_eig = std::min(min_eig, d.min_eigenvalue);
    }
    add_check(r, "state_trace_defect", trace <= tol::trace, trace, tol::trace);
    add_check(r, "state_hermiticity_defect", herm <= tol::hermitian, herm, tol::hermitian);
    add_check(r, "state_min_eigenvalue", min_eig >= tol::positivity, min_eig, tol::positivity);
}

inline void check_chi(RunArtifacts& r, bool unit_diagonal) {
    double excess = 0.0, asym = 0.0, diag = 0.0;
    for (const auto& c : r.curve.chi) {
        for (Index m = 0; m < c.rows(); ++m) {
            diag = std::max(diag, std::abs(c(m, m) - cplx(1.0, 0.0)));
            for (Index n = 0; n < c.cols(); ++n) {
                excess = std::max(excess, std::abs(c(m, n)) - 1.0);
                asym = std::max(asym, std::abs(c(m, n) - std::conj(c(n, m))));
            }
        }
    }
    add_check(r, "chi_conjugate_symmetry", asym <= 1e-12, asym, 1e-12);
    if (!unit_diagonal) return;   // projected coefficients are not bounded by 1
    add_check(r, "chi_modulus_excess", excess <= 1e-12, excess, 1e-12);
    add_check(r, "chi_diagonal_exact", diag == 0.0, diag, 0.0);
}

inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count) {
    std::vector<std::size_t> idx;
    if (n == 0) return idx;
    count = std::min(count, n);
    for (std::size_t i = 0; i < count; ++i) idx.push_back(count == 1 ? 0 : i * (n - 1) / (count - 1));
    return idx;
}

inline Eigen::MatrixXd off_diagonal_tn(const RunArtifacts& r, std::size_t i) {
    Eigen::MatrixXd x = r.curve.block_tn.at(i);
    x.diagonal().setZero();
    return x;
}

// ------------------------------- Araki-Zurek ---------------------------------

inline void run_araki_zurek(RunArtifacts& r, bool oracle) {
    const ScenarioConfig& c = r.config;
    const auto times = time_grid(c);
    const SystemSpec spec = validate_model(HermitianOperator(system_h(c)), HermitianOperator(system_v(c)), std::nullopt,
                                           c.cluster_tol);
    const DensityOperator rho0 = initial_state(c);
    const bool mixture = !c.mixture_weights.empty();

    if (mixture) {
        MixtureInitialState w;
        for (std::size_t k = 0; k < c.mixture_weights.size(); ++k) {
            w.terms.push_back({c.mixture_weights[k], rho0, environment_measure(c, c.mixture_sigmas[k])});
        }
        auto d = mixture_dynamics(w, spec, times);
        r.curve = std::move(d.curve);
        r.states = std::move(d.states);
    } else {
        const SpectralDensity mu = environment_measure(c);
        auto d = chunked_dynamics(times, [&](std::span<const double> ts) { return reduced_blocks_factorized(rho0, spec, mu, ts); });
        r.curve = std::move(d.curve);
        for (auto& s : d.states) r.states.push_back(s.matrix());
    }
    check_states(r);
    check_chi(r, true);

    const std::size_t sectors = spec.sectors.size();
    if (sectors >= 2) {
        const double delta = spec.sectors.min_gap();
        const double dl = spec.sectors.eigenvalue(1) - spec.sectors.eigenvalue(0);
        r.report["delta"] = delta;

        if (c.fit_decay && !mixture) {
            const auto fit = fit_decay_bound(r.curve, 0, 1, delta);
            const bool certified = fit.status == DecayStatus::certified;
            r.report["decay_fit"] = {{"gamma", fit.bound.gamma},
                                     {"C_gamma", fit.bound.C_gamma},
                                     {"delta", fit.bound.delta},
                                     {"holds", fit.holds},
                                     {"status", certified ? "certified" : "InsufficientDecay"},
                                     {"fit_samples", fit.fit_samples}};
            if (certified) add_check(r, "decay_certificate_holds", fit.holds, fit.bound.gamma, 0.0);
            if (certified && c.certificate_draws > 0) {
                rnd::Engine rng(c.seed);
                std::vector<DensityOperator> draws;
                for (int k = 0; k < c.certificate_draws; ++k) draws.push_back(rnd::density(spec.dim(), rng));
                const bool ok = certificate_holds_for_states(fit.bound, spec, environment_measure(c), times, draws);
                add_check(r, "decay_certificate_random_states", ok, double(c.certificate_draws), 0.0);
            }
        }

        const SpectralDensity mu = mixture ? environment_measure(c, c.mixture_sigmas.front()) : environment_measure(c);
        if (mu.is_discrete() && !mixture) {
            const double tr = recurrence_time(mu, dl);
            r.report["recurrence_time"] = tr;
            if (std::isfinite(tr) && tr <= c.t_max) {
                const std::size_t i = std::size_t(std::lround(tr / (c.t_max / double(c.n_steps - 1))));
                r.report["abs_chi_at_recurrence"] = std::abs(r.curve.chi.at(std::min(i, times.size() - 1))(0, 1));
            }
        }

        if (c.definition_one_draws > 0) {
            rnd::Engine rng(c.seed + 1);
            const auto obs = random_offdiagonal_observables(spec.sectors, std::size_t(c.definition_one_draws), rng);
            const auto inter = observable_magnitudes(obs, r.states.back());
            const auto control = observable_magnitudes(obs, Propagator(spec.H_S).conjugate(rho0.matrix(), c.t_max));
            r.report["definition_one"] = {{"max_interacting", *std::max_element(inter.begin(), inter.end())},
                                          {"min_control", *std::min_element(control.begin(), control.end())},
                                          {"draws", c.definition_one_draws}};
        }
    }

    if (!oracle) return;
    const auto idx = sample_indices(times.size(), 64);
    std::vector<double> ts;
    for (auto i : idx) ts.push_back(times[i]);
    const Index ne = c.oracle_env_dim;
    double dev = 0.0;
    if (mixture) {
        double spread = 0.0;
        for (double s : c.mixture_sigmas) spread = std::max(spread, s);
        const auto grid = linspace(c.mean - 5.0 * spread, c.mean + 5.0 * spread, std::size_t(ne));
        FiniteModel model{spec.H_S, spec.V_S, HermitianOperator::zero(ne), HermitianOperator::diagonal(grid)};
        Matrix w0 = Matrix::Zero(model.dim(), model.dim());
        MixtureInitialState w;
        for (std::size_t k = 0; k < c.mixture_weights.size(); ++k) {
            std::vector<double> p(grid.size());
            for (std::size_t j = 0; j < grid.size(); ++j) p[j] = std::exp(-0.5 * std::pow((grid[j] - c.mean) / c.mixture_sigmas[k], 2));
            const auto measure = SpectralDensity::discrete(grid, p);
            Matrix omega = Matrix::Zero(ne, ne);
            for (Index j = 0; j < ne; ++j) omega(j, j) = measure.probability(std::size_t(j));
            w0 += c.mixture_weights[k] * kron(rho0.matrix(), omega);
            w.terms.push_back({c.mixture_weights[k], rho0, measure});
        }
        const auto brute = full_evolution_linear(model, w0, ts);
        const auto closed = mixture_dynamics(w, spec, ts);
        for (std::size_t i = 0; i < ts.size(); ++i) dev = std::max(dev, trace_norm(brute[i] - closed.states[i]));
    } else {
        const auto sur = equal_weight_surrogate(environment_measure(c), ne);
        FiniteModel model{spec.H_S, spec.V_S, HermitianOperator::zero(ne), sur.V_E};
        const auto brute = full_evolution(model, tensor(rho0, sur.omega), ts);
        const auto closed = reduced_blocks_factorized(rho0, spec, sur.measure, ts);
        for (std::size_t i = 0; i < ts.size(); ++i) dev = std::max(dev, trace_norm(brute[i].matrix() - closed.states[i].matrix()));
    }
    r.oracle_deviation = dev;
    r.report["oracle"] = {{"kind", "full_evolution"}, {"env_dim", ne}, {"time_points", ts.size()}, {"max_trace_norm_deviation", dev}};
    add_check(r, "oracle_trace_norm_deviation", dev <= c.oracle_tolerance, dev, c.oracle_tolerance, true, true);
}

// ------------------------------ Boson fields ---------------------------------

inline ReducedDynamics assemble_from_chi(const SystemSpec& spec, const DensityOperator& rho0, std::span<const double> times,
                                         const std::vector<Matrix>& chi) {
    const Propagator u_s(spec.H_S);
    ReducedDynamics out;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] == 0.0) {
            out.states.push_back(rho0);
        } else {
            out.states.emplace_back(hermitian_part(apply_sector_weights(u_s.conjugate(rho0.matrix(), times[i]), chi[i], spec.sectors)));
        }
        out.curve.append(times[i], chi[i], out.states.back().matrix(), spec.sectors);
    }
    return out;
}

template <class ChiFn>
std::vector<Matrix> pair_chi(const SectorFamily& f, std::span<const double> times, ChiFn&& chi_fn) {
    const auto s = static_cast<Index>(f.size());
    std::vector<Matrix> out(times.size(), Matrix::Identity(s, s));
    for (Index m = 0; m < s; ++m) {
        for (Index n = m + 1; n < s; ++n) {
            const auto v = chi_fn(f.eigenvalue(std::size_t(n)), f.eigenvalue(std::size_t(m)), times);
            for (std::size_t i = 0; i < times.size(); ++i) {
                out[i](m, n) = v[i];
                out[i](n, m) = std::conj(v[i]);
            }
        }
    }
    return out;
}

inline void store(RunArtifacts& r, ReducedDynamics&& d) {
    r.curve = std::move(d.curve);
    for (auto& s : d.states) r.states.push_back(s.matrix());
}

inline void run_vanhove(RunArtifacts& r) {
    const ScenarioConfig& c = r.config;
    const auto times = time_grid(c);
    const SystemSpec spec = validate_model(HermitianOperator(system_h(c)), HermitianOperator(system_v(c)), std::nullopt,
                                           c.cluster_tol);
    const DensityOperator rho0 = initial_state(c);
    const ModeFunction mf = mode_function(c);
    const DisplacementOptions opt{c.ir_cap, c.ir_override};
    const CoherentMixture omega = coherent_state(c, mf.k());
    const double h2 = mf.inv_eps_norm_sq();
    r.report["inv_eps_norm_sq"] = h2;
    r.report["inv_sqrt_eps_norm_sq"] = mf.inv_sqrt_eps_norm_sq();
    r.report["bounded_below"] = mf.bounded_below();

    store(r, chunked_dynamics(times, [&](std::span<const double> ts) {
        const auto chi = pair_chi(spec.sectors, ts, [&](double a, double b, std::span<const double> tt) {
            return chi_vanhove(omega, mf, a, b, tt, opt);
        });
        return assemble_from_chi(spec, rho0, ts, chi);
    }));
    check_states(r);
    check_chi(r, true);

    if (spec.sectors.size() >= 2 && omega.terms.size() == 1 && h2 <= c.ir_cap) {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < spec.sectors.size(); ++m) {
            for (std::size_t n = m + 1; n < spec.sectors.size(); ++n) {
                const double dl = spec.sectors.eigenvalue(n) - spec.sectors.eigenvalue(m);
                const double floor = std::exp(-dl * dl * h2);
                for (std::size_t i = 0; i < times.size(); ++i) {
                    worst = std::min(worst, std::abs(r.curve.chi[i](Index(m), Index(n))) - (floor - 1e-8));
                }
            }
        }
        add_check(r, "ir_regular_floor_margin", worst >= 0.0, worst, 0.0);
        const auto a = r.curve.abs_chi(0, 1);
        r.report["min_abs_chi"] = *std::min_element(a.begin(), a.end());
        const double dl = spec.sectors.eigenvalue(1) - spec.sectors.eigenvalue(0);
        r.report["floor"] = std::exp(-dl * dl * h2);
    }

    if (!c.cutoffs.empty() && spec.sectors.size() >= 2) {
        ModeFamily fam{coupling_function(c), c.k_max, std::size_t(c.k_points), c.dispersion, std::nullopt};
        const auto rep = ir_classify(fam, c.cutoffs, c.probe_time, spec.sectors.eigenvalue(1), spec.sectors.eigenvalue(0));
        std::vector<double> growth;
        for (std::size_t i = 1; i < rep.exponents.size(); ++i) growth.push_back(rep.exponents[i] / rep.exponents[i - 1]);
        r.report["ir"] = {{"regular", rep.regular},
                          {"cutoffs", rep.cutoffs},
                          {"exponents", rep.exponents},
                          {"exponent_ratios", growth},
                          {"inv_eps_norm_sq", rep.inv_eps_norm_sq},
                          {"exponents_increasing", rep.exponents_increasing},
                          {"sup_bound", rep.regular ? nlohmann::ordered_json(rep.sup_bound) : nlohmann::ordered_json("infinite")}};
        if (!rep.regular) add_check(r, "ir_divergent_exponents_increasing", rep.exponents_increasing, growth.empty() ? 0.0 : growth.back(), 1.0);
    }
}

inline void run_single_mode(RunArtifacts& r, bool oracle) {
    const ScenarioConfig& c = r.config;
    const bool free = c.model == ModelKind::free_particle;
    const double eps = free ? 0.0 : c.energy;
    const auto times = time_grid(c);
    const SystemSpec spec = validate_model(HermitianOperator(system_h(c)), HermitianOperator(system_v(c)), std::nullopt,
                                           c.cluster_tol);
    const DensityOperator rho0 = initial_state(c);
    const CoherentMixture state = coherent_state(c, std::vector<double>{1.0});

    auto chi_of = [&](std::span<const double> ts) {
        return pair_chi(spec.sectors, ts, [&](double a, double b, std::span<const double> tt) {
            return single_mode_chi(eps, c.f0, a, b, state, tt);
        });
    };
    store(r, chunked_dynamics(times, [&](std::span<const double> ts) { return assemble_from_chi(spec, rho0, ts, chi_of(ts)); }));
    check_states(r);
    check_chi(r, true);
    if (spec.sectors.size() < 2) return;

    if (!free) {
        const double period = 2.0 * std::numbers::pi / eps;
        r.report["recurrence_time"] = period;
        std::vector<double> shifted;
        for (double t : times) shifted.push_back(t + period);
        const auto later = chi_of(shifted);
        double d = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) d = std::max(d, max_abs(later[i] - r.curve.chi[i]));
        r.report["periodicity_defect"] = d;
    } else {
        const auto a = r.curve.abs_chi(0, 1);
        bool mono = true;
        for (std::size_t i = 1; i < a.size(); ++i) mono = mono && a[i] <= a[i - 1];
        r.report["monotone_decreasing"] = mono;
        if (state.terms.size() == 1) add_check(r, "free_particle_monotone", mono, a.back(), 0.0);
    }

    if (!oracle) return;
    const FockOracle o(c.fock_levels);
    const Matrix h = o.oscillator(eps);
    const double a = spec.sectors.eigenvalue(1), b = spec.sectors.eigenvalue(0);
    const Propagator ha(HermitianOperator::symmetrized(h + a * c.f0 * o.q()));
    const Propagator hb(HermitianOperator::symmetrized(h + b * c.f0 * o.q()));
    double dev = 0.0;
    std::size_t used = 0;
    for (auto i : sample_indices(times.size(), 16)) {
        const double t = times[i];
        const Matrix u = ha.unitary(-t) * hb.unitary(t);
        cplx acc{0.0, 0.0};
        try {
            for (const auto& term : state.terms) {
                const Vector v = o.coherent(term.f[0], term.g[0]);
                acc += term.weight * fock_matrix_element(o, v, u, v);
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::truncation_too_small) throw;
            break;
        }
        dev = std::max(dev, std::abs(acc - r.curve.chi[i](0, 1)));
        ++used;
    }
    r.oracle_deviation = dev;
    r.report["oracle"] = {{"kind", "truncated_fock"}, {"levels", c.fock_levels}, {"time_points", used}, {"max_abs_deviation", dev}};
    add_check(r, "oracle_fock_deviation", used > 0 && dev <= c.oracle_tolerance, dev, c.oracle_tolerance, true, true);
}

// -------------------------------- Scattering ---------------------------------

// Non-degenerate bounded environment energies commuting with V_E.
inline std::vector<double> scattering_environment_energies(Index n) {
    std::vector<double> e(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) e[std::size_t(k)] = std::fmod(std::sqrt(2.0) * 0.05 * double(k), 1.7);
    return e;
}

inline void run_scattering(RunArtifacts& r, bool oracle) {
    const ScenarioConfig& c = r.config;
    const auto times = time_grid(c);
    const SystemSpec spec = validate_model(HermitianOperator(system_h(c)), HermitianOperator(system_v(c)), std::nullopt,
                                           c.cluster_tol);
    const DensityOperator rho0 = initial_state(c);
    const Index ne = c.env_dim;
    const auto sur = equal_weight_surrogate(SpectralDensity::gaussian(c.mean, c.sigma), ne);
    const HermitianOperator h_e = HermitianOperator::diagonal(scattering_environment_energies(ne));
    const ScatteringModel free_model(spec, h_e, sur.V_E, HermitianOperator::zero(spec.dim() * ne));
    HermitianOperator v = HermitianOperator::zero(free_model.dim());
    if (c.potential_norm > 0.0) {
        rnd::Engine rng(c.seed);
        v = offshell_isospectral_potential(free_model.H0(), c.potential_norm, c.energy_gap, rng);
    }
    const ScatteringModel model(spec, h_e, sur.V_E, v);
    const DensityOperator w0 = tensor(rho0, sur.omega);
    r.report["potential_norm"] = hermitian_operator_norm(v.matrix());

    store(r, chunked_dynamics(times, [&](std::span<const double> ts) { return scattering_block_decay(model, w0, ts); }));
    check_states(r);
    check_chi(r, false);

    const double off0 = off_diagonal_tn(r, 0).maxCoeff();
    const double off1 = off_diagonal_tn(r, times.size() - 1).maxCoeff();
    r.report["offdiag_tn_initial"] = off0;
    r.report["offdiag_tn_final"] = off1;
    r.report["suppression_factor"] = off1 > 0.0 ? off0 / off1 : std::numeric_limits<double>::infinity();

    // Wave operator over a doubling sequence of horizons.
    std::vector<double> horizons, defects;
    std::vector<Matrix> est;
    const std::size_t ns = std::size_t(c.moller_samples);
    est.push_back(moller_estimate(model, 0.5 * c.moller_horizon, ns));
    for (int k = 0; k <= c.moller_doublings; ++k) {
        const double t = c.moller_horizon * std::pow(2.0, k);
        est.push_back(moller_estimate(model, t, ns));
        horizons.push_back(t);
        defects.push_back(operator_norm(est.back() - est[est.size() - 2]));
    }
    bool halves = true;
    for (std::size_t k = 1; k < defects.size(); ++k) halves = halves && defects[k] <= 0.5 * defects[k - 1];
    const Matrix& omega = est[1];
    const double udef = hermitian_operator_norm(omega.adjoint() * omega - Matrix::Identity(model.dim(), model.dim()));

    // Equivalence residual on [0, T] for the estimate at the base horizon T.
    const Matrix id = Matrix::Identity(model.dim(), model.dim());
    std::vector<double> early, late, late_identity;
    for (double t : linspace(0.0, c.moller_horizon, 33)) {
        const double x = equivalence_residual(model, w0, omega, t);
        (t < 0.5 * c.moller_horizon ? early : late).push_back(x);
        if (t >= 0.5 * c.moller_horizon) late_identity.push_back(equivalence_residual(model, w0, id, t));
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v.empty() ? 0.0 : (v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]));
    };
    r.report["moller"] = {{"horizons", horizons},
                          {"cauchy_defects", defects},
                          {"defect_halves_per_doubling", halves},
                          {"unitarity_defect", udef},
                          {"residual_median_early", median(early)},
                          {"residual_median_late", median(late)},
                          {"residual_median_late_identity", median(late_identity)}};
    add_check(r, "moller_unitarity", udef <= unitarity_tolerance, udef, unitarity_tolerance);
    add_check(r, "moller_cauchy_halving", halves, defects.back(), 0.5 * defects[defects.size() - 2], false);
    add_check(r, "equivalence_residual_below_identity", median(late) < median(late_identity), median(late),
              median(late_identity), false);

    if (!oracle) return;
    const ScatteringModel control(spec, h_e, sur.V_E, HermitianOperator::zero(free_model.dim()));
    const auto idx = sample_indices(times.size(), 64);
    std::vector<double> ts;
    for (auto i : idx) ts.push_back(times[i]);
    const auto exact = scattering_block_decay(control, w0, ts);
    const auto closed = reduced_blocks_factorized(rho0, spec, sur.measure, ts);
    double dev = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) dev = std::max(dev, trace_norm(exact.states[i].matrix() - closed.states[i].matrix()));
    r.oracle_deviation = dev;
    r.report["oracle"] = {{"kind", "potential_free_control"}, {"env_dim", ne}, {"time_points", ts.size()}, {"max_trace_norm_deviation", dev}};
    add_check(r, "oracle_control_deviation", dev <= c.oracle_tolerance, dev, c.oracle_tolerance, true, true);
}

// --------------------------------- Emission ----------------------------------

inline std::string render_csv(const DecoherenceCurve& curve) {
    std::string out = std::string(csv_header) + "\n";
    for (std::size_t i = 0; i < curve.samples(); ++i) {
        const auto& chi = curve.chi[i];
        for (Index m = 0; m < chi.rows(); ++m) {
            for (Index n = 0; n < chi.cols(); ++n) {
                const cplx z = chi(m, n);
                out += format_double(curve.times[i]) + "," + std::to_string(m) + "," + std::to_string(n) + "," +
                       format_double(z.real()) + "," + format_double(z.imag()) + "," + format_double(std::abs(z)) + "," +
                       format_double(curve.block_tn[i](m, n)) + "," + format_double(curve.block_hs[i](m, n)) + "\n";
            }
        }
    }
    return out;
}

inline std::string render_svg(const DecoherenceCurve& curve, std::size_t m, std::size_t n, const std::string& title) {
    const double width = 640, height = 400, left = 60, right = 20, top = 40, bottom = 50;
    const double pw = width - left - right, ph = height - top - bottom;
    const auto chi = curve.abs_chi(m, n);
    const auto tn = curve.trace_norms(m, n);
    const double t0 = curve.times.front(), t1 = curve.times.back() > t0 ? curve.times.back() : t0 + 1.0;
    double ymax = 1.0;
    for (double v : tn) ymax = std::max(ymax, v);
    char buf[128];
    auto fmt = [&](const char* f, double a, double b) {
        std::snprintf(buf, sizeof buf, f, a, b);
        return std::string(buf);
    };
    auto path = [&](const std::vector<double>& y) {
        std::string d;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double x = left + pw * (curve.times[i] - t0) / (t1 - t0);
            const double yy = top + ph * (1.0 - std::clamp(y[i] / ymax, 0.0, 1.0));
            d += fmt(i ? " L%.2f,%.2f" : "M%.2f,%.2f", x, yy);
        }
        return d;
    };
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" + title + "</text>\n";
    s += "<rect x=\"60\" y=\"40\" width=\"560\" height=\"310\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double y = top + ph * k / 4.0, x = left + pw * k / 4.0;
        s += "<line x1=\"60\" x2=\"620\"" + fmt(" y1=\"%.2f\" y2=\"%.2f\"", y, y) + " stroke=\"#ddd\"/>\n";
        s += "<text" + fmt(" x=\"54\" y=\"%.2f\"", y + 4, 0) + " text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
             fmt("%.3g", ymax * (1.0 - k / 4.0), 0) + "</text>\n";
        s += "<text" + fmt(" x=\"%.2f\" y=\"368\"", x, 0) + " text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
             fmt("%.3g", t0 + (t1 - t0) * k / 4.0, 0) + "</text>\n";
    }
    s += "<text x=\"340\" y=\"392\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">t</text>\n";
    s += "<path d=\"" + path(chi) + "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
    s += "<path d=\"" + path(tn) + "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"/>\n";
    s += "<text x=\"500\" y=\"60\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#1f77b4\">abs_chi</text>\n";
    s += "<text x=\"500\" y=\"76\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d62728\">block_tn</text>\n";
    s += "</svg>\n";
    return s;
}

// FNV-1a, stable across platforms.
inline std::string input_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Writes every file or none: on failure the files already written are removed.
inline void write_all(const std::filesystem::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::io_error, "cannot create output directory " + dir.string());
    std::vector<fs::path> written;
    for (const auto& [name, body] : files) {
        const fs::path p = dir / name;
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (out) out.write(body.data(), std::streamsize(body.size()));
        if (out) out.close();
        if (!out) {
            for (const auto& w : written) fs::remove(w, ec);
            fs::remove(p, ec);
            throw Error(ErrorKind::io_error, "cannot write " + p.string());
        }
        written.push_back(p);
    }
}

// ---------------------------------- Driver -----------------------------------

inline RunArtifacts run_scenario(const ScenarioConfig& config, const RunOptions& options = {}) {
    using clock = std::chrono::steady_clock;
    auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
    RunArtifacts r;
    r.config = config;
    if (options.output_dir) r.config.directory = *options.output_dir;
    if (options.oracle) r.config.oracle_enabled = *options.oracle;
    auto errors = validate_scenario(r.config);
    if (!errors.empty()) throw ValidationError(std::move(errors));
    const bool oracle = r.config.oracle_enabled;

    const auto t0 = clock::now();
    switch (r.config.model) {
        case ModelKind::araki_zurek: run_araki_zurek(r, oracle); break;
        case ModelKind::vanhove:
            run_vanhove(r);
            if (oracle) r.report["oracle"] = {{"kind", "none"}, {"note", "no brute-force oracle for multimode fields"}};
            break;
        case ModelKind::single_mode:
        case ModelKind::free_particle: run_single_mode(r, oracle); break;
        case ModelKind::scattering: run_scattering(r, oracle); break;
    }
    const auto t1 = clock::now();

    bool hard_fail = false, oracle_fail = false;
    for (const auto& c : r.checks) {
        if (c.passed || !c.hard) continue;
        (c.oracle ? oracle_fail : hard_fail) = true;
    }
    r.status = oracle_fail ? 3 : hard_fail ? 2 : 0;

    std::vector<std::pair<std::string, std::string>> files;
    const auto& fmts = r.config.formats;
    if (std::find(fmts.begin(), fmts.end(), "csv") != fmts.end()) files.emplace_back(r.config.name + ".csv", render_csv(r.curve));
    if (std::find(fmts.begin(), fmts.end(), "svg") != fmts.end()) {
        const std::size_t s = r.curve.sectors();
        for (std::size_t m = 0; m < s; ++m) {
            for (std::size_t n = m + 1; n < s; ++n) {
                const std::string stem = r.config.name + "_pair_" + std::to_string(m) + "_" + std::to_string(n);
                files.emplace_back(stem + ".svg", render_svg(r.curve, m, n, r.config.name + " (" + std::to_string(m) + "," +
                                                                                std::to_string(n) + ")"));
            }
        }
    }
    for (const auto& f : files) r.files.push_back(f.first);

    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"threshold", c.threshold},
                          {"hard", c.hard}, {"oracle", c.oracle}});
    }
    const auto t2 = clock::now();
    r.manifest = {{"scenario", r.config.name},
                  {"model", std::string(to_string(r.config.model))},
                  {"input_hash", input_hash(serialize_scenario(r.config))},
                  {"versions", {{"decoseed", version},
                                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                              std::to_string(EIGEN_MINOR_VERSION)},
                                {"compiler", __VERSION__}}},
                  {"created", utc_timestamp()},
                  {"threads", worker_count()},
                  {"timings_ms", {{"compute", ms(t1 - t0)}, {"render", ms(t2 - t1)}}},
                  {"files", r.files},
                  {"oracle_deviation", r.oracle_deviation ? nlohmann::ordered_json(*r.oracle_deviation) : nlohmann::ordered_json(nullptr)},
                  {"validation", checks},
                  {"report", r.report},
                  {"status", r.status}};
    if (options.write_files) {
        files.emplace_back("manifest.json", r.manifest.dump(2) + "\n");
        write_all(r.config.directory, files);
        r.files.push_back("manifest.json");
    }
    return r;
}

} // namespace decoseed::harness
