// config.hpp - Scenario documents: parsing, validation, serialization and presets
//
// Line-oriented format:
//
//   [section]
//   key = value        # comment
//
// Matrices are bracketed row lists of complex literals, e.g.
// [[1+0i, 0.5-2i], [0.5+2i, -1]]; arrays are comma separated. A value whose
// brackets are unbalanced continues on the following lines.

#pragma once

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "decoseed/araki_zurek.hpp"
#include "decoseed/error.hpp"
#include "decoseed/oracle.hpp"
#include "decoseed/qcore.hpp"
#include "decoseed/spectral_density.hpp"
#include "decoseed/vanhove.hpp"

namespace decoseed::harness {

enum class ModelKind { araki_zurek, vanhove, single_mode, free_particle, scattering };

inline std::string_view to_string(ModelKind m) {
    switch (m) {
        case ModelKind::araki_zurek: return "araki_zurek";
        case ModelKind::vanhove: return "vanhove";
        case ModelKind::single_mode: return "single_mode";
        case ModelKind::free_particle: return "free_particle";
        case ModelKind::scattering: return "scattering";
    }
    return "araki_zurek";
}

inline bool model_from_string(std::string_view s, ModelKind& out) {
    for (auto m : {ModelKind::araki_zurek, ModelKind::vanhove, ModelKind::single_mode, ModelKind::free_particle,
                   ModelKind::scattering}) {
        if (s == to_string(m)) {
            out = m;
            return true;
        }
    }
    return false;
}

using ComplexRows = std::vector<std::vector<cplx>>;

struct ScenarioConfig {
    // [scenario]
    ModelKind model{ModelKind::araki_zurek};
    std::string name{"scenario"};
    std::uint64_t seed{1};

    // [system]
    int dim{2};
    ComplexRows H_S;
    ComplexRows V_S;
    std::vector<double> H_S_diagonal;
    std::vector<double> V_S_diagonal;
    double cluster_tol{tol::cluster};

    // [environment]
    std::string family{"gaussian"};      // gaussian | bump | discrete
    double mean{0.0};
    double sigma{1.0};
    int bump_order{2};
    int grid_points{2048};
    double half_width{0.0};              // gaussian: in sigmas, 0 = pad to 1e-16; bump: support half width
    std::vector<double> atoms;
    std::vector<double> probabilities;
    double k_min{1e-3};
    double k_max{12.0};
    int k_points{4096};
    std::string coupling{"linear_exp"};  // linear_exp: k e^{-k}; power: k^exponent
    double coupling_exponent{-0.25};
    double dispersion{1.0};
    std::vector<double> cutoffs;
    double probe_time{10.0};
    double ir_cap{1e4};
    bool ir_override{false};
    double energy{1.0};                  // single mode frequency
    double f0{1.0};
    int env_dim{64};                     // scattering surrogate
    double potential_norm{0.05};
    double energy_gap{1.0};

    // [initial]
    std::string rho0{"plus"};            // plus | mixed | random | entries
    ComplexRows rho0_entries;
    std::vector<double> mixture_weights;
    std::vector<double> mixture_sigmas;
    std::vector<double> coherent_weights;
    std::vector<double> coherent_f;
    std::vector<double> coherent_g;

    // [time]
    double t_max{8.0};
    int n_steps{801};

    // [oracle]
    bool oracle_enabled{false};
    int oracle_env_dim{32};
    double oracle_tolerance{1e-10};
    int fock_levels{40};

    // [analysis]
    bool fit_decay{false};
    int certificate_draws{0};
    int definition_one_draws{0};
    double moller_horizon{20.0};
    int moller_doublings{3};
    int moller_samples{1024};

    // [output]
    std::string directory{"decoseed_out"};
    std::vector<std::string> formats{"csv", "svg"};

    bool operator==(const ScenarioConfig&) const = default;
};

// ------------------------------ Scalar formatting ----------------------------

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string format_complex(cplx z) {
    std::string s = format_double(z.real());
    const double im = z.imag();
    s += std::signbit(im) ? "-" : "+";
    s += format_double(std::abs(im));
    s += "i";
    return s;
}

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline bool parse_real(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return errno == 0 && end == s.c_str() + s.size();
}

// Complex literal: a, bi, a+bi, a-bi, i, -i.
inline bool parse_complex(const std::string& raw, cplx& out) {
    std::string s;
    for (char c : raw) {
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    }
    if (s.empty()) return false;
    if (s.back() != 'i') {
        double r;
        if (!parse_real(s, r)) return false;
        out = {r, 0.0};
        return true;
    }
    const std::string body = s.substr(0, s.size() - 1);
    // Split at the last sign that is not an exponent sign and not leading.
    std::size_t split = std::string::npos;
    for (std::size_t i = body.size(); i-- > 1;) {
        if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    auto imag_part = [](const std::string& t, double& v) {
        if (t.empty() || t == "+") return v = 1.0, true;
        if (t == "-") return v = -1.0, true;
        return parse_real(t, v);
    };
    double re = 0.0, im = 0.0;
    if (split == std::string::npos) {
        if (!imag_part(body, im)) return false;
    } else {
        if (!parse_real(body.substr(0, split), re)) return false;
        if (!imag_part(body.substr(split), im)) return false;
    }
    out = {re, im};
    return true;
}

inline std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

struct ValueError {
    std::string message;
};

inline void parse_value(const std::string& v, double& out) {
    if (!parse_real(v, out)) throw ValueError{"expected a real number, got '" + v + "'"};
}

inline void parse_value(const std::string& v, int& out) {
    double d;
    if (!parse_real(v, d) || d != std::floor(d) || std::abs(d) > 2e9) throw ValueError{"expected an integer, got '" + v + "'"};
    out = static_cast<int>(d);
}

inline void parse_value(const std::string& v, std::uint64_t& out) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
        throw ValueError{"expected a non-negative integer, got '" + v + "'"};
    }
    errno = 0;
    out = std::strtoull(v.c_str(), nullptr, 10);
    if (errno != 0) throw ValueError{"integer out of range: '" + v + "'"};
}

inline void parse_value(const std::string& v, bool& out) {
    if (v == "true" || v == "on" || v == "yes" || v == "1") {
        out = true;
    } else if (v == "false" || v == "off" || v == "no" || v == "0") {
        out = false;
    } else {
        throw ValueError{"expected a boolean, got '" + v + "'"};
    }
}

inline void parse_value(const std::string& v, std::string& out) { out = v; }

inline void parse_value(const std::string& v, ModelKind& out) {
    if (!model_from_string(v, out)) throw ValueError{"unknown model '" + v + "'"};
}

inline void parse_value(const std::string& v, std::vector<double>& out) {
    out.clear();
    for (const auto& item : split_commas(v)) {
        double d;
        if (!parse_real(item, d)) throw ValueError{"expected a real number in list, got '" + item + "'"};
        out.push_back(d);
    }
}

inline void parse_value(const std::string& v, std::vector<std::string>& out) {
    if (v == "none") {
        out.clear();
        return;
    }
    out = split_commas(v);
    for (const auto& s : out) {
        if (s.empty()) throw ValueError{"empty list entry"};
    }
}

inline void parse_value(const std::string& raw, ComplexRows& out) {
    out.clear();
    const std::string v = trim(raw);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') throw ValueError{"matrix must be a bracketed list of rows"};
    const std::string body = v.substr(1, v.size() - 2);
    std::size_t i = 0;
    while (i < body.size()) {
        const char c = body[i];
        if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
            ++i;
            continue;
        }
        if (c != '[') throw ValueError{"matrix rows must be bracketed"};
        const std::size_t close = body.find(']', i);
        if (close == std::string::npos) throw ValueError{"unterminated matrix row"};
        std::vector<cplx> row;
        for (const auto& item : split_commas(body.substr(i + 1, close - i - 1))) {
            cplx z;
            if (!parse_complex(item, z)) throw ValueError{"bad complex literal '" + item + "'"};
            row.push_back(z);
        }
        out.push_back(std::move(row));
        i = close + 1;
    }
}

inline std::string render(double x) { return format_double(x); }
inline std::string render(int x) { return std::to_string(x); }
inline std::string render(std::uint64_t x) { return std::to_string(x); }
inline std::string render(bool x) { return x ? "true" : "false"; }
inline std::string render(const std::string& x) { return x; }
inline std::string render(ModelKind x) { return std::string(to_string(x)); }

inline std::string render(const std::vector<double>& x) {
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ", " : "") + format_double(x[i]);
    return s;
}

inline std::string render(const std::vector<std::string>& x) {
    if (x.empty()) return "none";
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ", " : "") + x[i];
    return s;
}

inline std::string render(const ComplexRows& x) {
    std::string s = "[";
    for (std::size_t r = 0; r < x.size(); ++r) {
        s += r ? ", [" : "[";
        for (std::size_t c = 0; c < x[r].size(); ++c) s += (c ? ", " : "") + format_complex(x[r][c]);
        s += "]";
    }
    return s + "]";
}

template <class T>
bool is_empty_value(const T&) { return false; }
template <class T>
bool is_empty_value(const std::vector<T>& v) { return v.empty(); }
inline bool is_empty_value(const std::vector<std::string>&) { return false; }

// Calls v(section, key, member) for every field, in document order.
template <class Config, class Visitor>
void visit_fields(Config& c, Visitor&& v) {
    v("scenario", "model", c.model);
    v("scenario", "name", c.name);
    v("scenario", "seed", c.seed);

    v("system", "dim", c.dim);
    v("system", "H_S", c.H_S);
    v("system", "V_S", c.V_S);
    v("system", "H_S_diagonal", c.H_S_diagonal);
    v("system", "V_S_diagonal", c.V_S_diagonal);
    v("system", "cluster_tol", c.cluster_tol);

    v("environment", "family", c.family);
    v("environment", "mean", c.mean);
    v("environment", "sigma", c.sigma);
    v("environment", "bump_order", c.bump_order);
    v("environment", "grid_points", c.grid_points);
    v("environment", "half_width", c.half_width);
    v("environment", "atoms", c.atoms);
    v("environment", "probabilities", c.probabilities);
    v("environment", "k_min", c.k_min);
    v("environment", "k_max", c.k_max);
    v("environment", "k_points", c.k_points);
    v("environment", "coupling", c.coupling);
    v("environment", "coupling_exponent", c.coupling_exponent);
    v("environment", "dispersion", c.dispersion);
    v("environment", "cutoffs", c.cutoffs);
    v("environment", "probe_time", c.probe_time);
    v("environment", "ir_cap", c.ir_cap);
    v("environment", "ir_override", c.ir_override);
    v("environment", "energy", c.energy);
    v("environment", "f0", c.f0);
    v("environment", "env_dim", c.env_dim);
    v("environment", "potential_norm", c.potential_norm);
    v("environment", "energy_gap", c.energy_gap);

    v("initial", "rho0", c.rho0);
    v("initial", "rho0_entries", c.rho0_entries);
    v("initial", "mixture_weights", c.mixture_weights);
    v("initial", "mixture_sigmas", c.mixture_sigmas);
    v("initial", "coherent_weights", c.coherent_weights);
    v("initial", "coherent_f", c.coherent_f);
    v("initial", "coherent_g", c.coherent_g);

    v("time", "t_max", c.t_max);
    v("time", "n_steps", c.n_steps);

    v("oracle", "enabled", c.oracle_enabled);
    v("oracle", "env_dim", c.oracle_env_dim);
    v("oracle", "tolerance", c.oracle_tolerance);
    v("oracle", "fock_levels", c.fock_levels);

    v("analysis", "fit_decay", c.fit_decay);
    v("analysis", "certificate_draws", c.certificate_draws);
    v("analysis", "definition_one_draws", c.definition_one_draws);
    v("analysis", "moller_horizon", c.moller_horizon);
    v("analysis", "moller_doublings", c.moller_doublings);
    v("analysis", "moller_samples", c.moller_samples);

    v("output", "directory", c.directory);
    v("output", "formats", c.formats);
}

inline int bracket_balance(const std::string& s) {
    int b = 0;
    for (char c : s) b += (c == '[') - (c == ']');
    return b;
}

} // namespace detail

// ---------------------------------- Builders ---------------------------------

inline Matrix to_matrix(const ComplexRows& rows) {
    const auto n = static_cast<Index>(rows.size());
    Matrix m = Matrix::Zero(n, n);
    for (Index r = 0; r < n; ++r) {
        if (static_cast<Index>(rows[std::size_t(r)].size()) != n) {
            throw Error(ErrorKind::dimension_mismatch, "matrix rows must all have length " + std::to_string(n));
        }
        for (Index c = 0; c < n; ++c) m(r, c) = rows[std::size_t(r)][std::size_t(c)];
    }
    return m;
}

inline ComplexRows to_rows(const Matrix& m) {
    ComplexRows rows(std::size_t(m.rows()), std::vector<cplx>(std::size_t(m.cols())));
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) rows[std::size_t(r)][std::size_t(c)] = m(r, c);
    }
    return rows;
}

inline Matrix system_h(const ScenarioConfig& c) {
    if (!c.H_S.empty()) return to_matrix(c.H_S);
    if (!c.H_S_diagonal.empty()) return HermitianOperator::diagonal(c.H_S_diagonal).matrix();
    return Matrix::Zero(c.dim, c.dim);
}

// Default coupling spectrum: dim equally spaced values with unit gaps, centered at 0.
inline Matrix system_v(const ScenarioConfig& c) {
    if (!c.V_S.empty()) return to_matrix(c.V_S);
    if (!c.V_S_diagonal.empty()) return HermitianOperator::diagonal(c.V_S_diagonal).matrix();
    std::vector<double> d(std::size_t(std::max(c.dim, 1)));
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(i) - 0.5 * static_cast<double>(d.size() - 1);
    return HermitianOperator::diagonal(d).matrix();
}

inline SpectralDensity environment_measure(const ScenarioConfig& c, double sigma) {
    if (c.family == "gaussian") return SpectralDensity::gaussian(c.mean, sigma, std::size_t(c.grid_points), c.half_width);
    if (c.family == "bump") {
        return SpectralDensity::bump(c.bump_order, c.mean, c.half_width > 0.0 ? c.half_width : 1.0, std::size_t(c.grid_points));
    }
    if (c.family == "discrete") return SpectralDensity::discrete(c.atoms, c.probabilities);
    throw Error(ErrorKind::precondition, "unknown environment family '" + c.family + "'");
}

inline SpectralDensity environment_measure(const ScenarioConfig& c) { return environment_measure(c, c.sigma); }

inline std::function<double(double)> coupling_function(const ScenarioConfig& c) {
    if (c.coupling == "power") {
        const double p = c.coupling_exponent;
        return [p](double k) { return std::pow(k, p); };
    }
    return [](double k) { return k * std::exp(-k); };
}

inline ModeFunction mode_function(const ScenarioConfig& c, double k_min) {
    return ModeFunction::geometric(k_min, c.k_max, std::size_t(c.k_points), coupling_function(c), c.dispersion);
}

inline ModeFunction mode_function(const ScenarioConfig& c) { return mode_function(c, c.k_min); }

// Coherent terms are displacements along the profile e^{-k} (one amplitude per
// term); for a single mode the profile is the constant 1.
inline CoherentMixture coherent_state(const ScenarioConfig& c, const std::vector<double>& k) {
    if (c.coherent_weights.empty()) return CoherentMixture::vacuum(k.size());
    CoherentMixture m;
    for (std::size_t n = 0; n < c.coherent_weights.size(); ++n) {
        CoherentTerm t;
        t.weight = c.coherent_weights[n];
        const double fa = n < c.coherent_f.size() ? c.coherent_f[n] : 0.0;
        const double ga = n < c.coherent_g.size() ? c.coherent_g[n] : 0.0;
        for (double kk : k) {
            const double profile = k.size() == 1 ? 1.0 : std::exp(-kk);
            t.f.push_back(fa * profile);
            t.g.push_back(ga * profile);
        }
        m.terms.push_back(std::move(t));
    }
    return m;
}

inline DensityOperator initial_state(const ScenarioConfig& c) {
    const Index d = c.dim;
    if (c.rho0 == "mixed") return DensityOperator::maximally_mixed(d);
    if (c.rho0 == "entries") return DensityOperator(to_matrix(c.rho0_entries));
    if (c.rho0 == "random") {
        rnd::Engine rng(c.seed);
        return rnd::density(d, rng);
    }
    return DensityOperator::pure(Vector::Ones(d));
}

inline std::vector<double> time_grid(const ScenarioConfig& c) { return linspace(0.0, c.t_max, std::size_t(c.n_steps)); }

// ---------------------------------- Validation -------------------------------

inline std::vector<std::string> validate_scenario(const ScenarioConfig& c) {
    std::vector<std::string> e;
    auto hermitian_rows = [&](const ComplexRows& rows, const char* key, std::size_t expect) {
        if (rows.empty()) return;
        if (rows.size() != expect) {
            e.push_back(std::string(key) + ": expected " + std::to_string(expect) + " rows, got " + std::to_string(rows.size()));
            return;
        }
        for (const auto& r : rows) {
            if (r.size() != expect) {
                e.push_back(std::string(key) + ": every row must have " + std::to_string(expect) + " entries");
                return;
            }
        }
        if (!(hermiticity_defect(to_matrix(rows)) <= tol::hermitian)) e.push_back(std::string(key) + ": matrix is not Hermitian");
    };

    if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) e.push_back("scenario.name must be a non-empty file stem");
    if (c.dim < 1) e.push_back("system.dim must be >= 1");
    const std::size_t d = std::size_t(std::max(c.dim, 1));
    hermitian_rows(c.H_S, "system.H_S", d);
    hermitian_rows(c.V_S, "system.V_S", d);
    if (!c.H_S.empty() && !c.H_S_diagonal.empty()) e.push_back("system: give H_S or H_S_diagonal, not both");
    if (!c.V_S.empty() && !c.V_S_diagonal.empty()) e.push_back("system: give V_S or V_S_diagonal, not both");
    if (!c.H_S_diagonal.empty() && c.H_S_diagonal.size() != d) e.push_back("system.H_S_diagonal must have dim entries");
    if (!c.V_S_diagonal.empty() && c.V_S_diagonal.size() != d) e.push_back("system.V_S_diagonal must have dim entries");
    if (!(c.cluster_tol > 0.0)) e.push_back("system.cluster_tol must be > 0");

    if (!(c.t_max > 0.0)) e.push_back("time.t_max must be > 0");
    if (c.n_steps < 2) e.push_back("time.n_steps must be >= 2");

    static const std::set<std::string> rho_kinds{"plus", "mixed", "random", "entries"};
    if (!rho_kinds.count(c.rho0)) e.push_back("initial.rho0 must be plus, mixed, random or entries");
    if (c.rho0 == "entries") {
        if (c.rho0_entries.empty()) {
            e.push_back("initial.rho0_entries required when rho0 = entries");
        } else {
            hermitian_rows(c.rho0_entries, "initial.rho0_entries", d);
            if (c.rho0_entries.size() == d && !validate_density(to_matrix(c.rho0_entries)).acceptable()) {
                e.push_back("initial.rho0_entries is not a density operator");
            }
        }
    }
    if (!c.mixture_weights.empty() || !c.mixture_sigmas.empty()) {
        if (c.mixture_weights.size() != c.mixture_sigmas.size()) {
            e.push_back("initial.mixture_weights and initial.mixture_sigmas must have equal length");
        }
        double s = 0.0;
        for (double w : c.mixture_weights) s += w;
        if (!(std::abs(s - 1.0) <= 1e-10)) {
            e.push_back("initial.mixture_weights must sum to 1 (normalization of the mixed initial state), got " + format_double(s));
        }
        for (double sg : c.mixture_sigmas) {
            if (!(sg > 0.0)) e.push_back("initial.mixture_sigmas must be > 0");
        }
        if (c.model != ModelKind::araki_zurek) e.push_back("initial.mixture_weights apply to the araki_zurek model only");
    }
    if (!c.coherent_weights.empty()) {
        double s = 0.0;
        for (double w : c.coherent_weights) {
            s += w;
            if (!(w >= 0.0)) e.push_back("initial.coherent_weights must be >= 0");
        }
        if (!(std::abs(s - 1.0) <= 1e-10)) e.push_back("initial.coherent_weights must sum to 1");
        if (c.coherent_f.size() > c.coherent_weights.size() || c.coherent_g.size() > c.coherent_weights.size()) {
            e.push_back("initial.coherent_f/coherent_g have more entries than coherent_weights");
        }
    }

    if (c.oracle_env_dim < 1) e.push_back("oracle.env_dim must be >= 1");
    if (std::size_t(std::max(c.oracle_env_dim, 1)) * d > 4096) e.push_back("oracle: dim * env_dim exceeds 4096");
    if (!(c.oracle_tolerance > 0.0)) e.push_back("oracle.tolerance must be > 0");
    if (c.fock_levels < 20) e.push_back("oracle.fock_levels must be >= 20");
    if (c.certificate_draws < 0 || c.definition_one_draws < 0) e.push_back("analysis draw counts must be >= 0");
    for (const auto& f : c.formats) {
        if (f != "csv" && f != "svg") e.push_back("output.formats entries must be csv or svg, got '" + f + "'");
    }

    switch (c.model) {
        case ModelKind::araki_zurek: {
            if (c.family == "gaussian") {
                if (!(c.sigma > 0.0)) e.push_back("environment.sigma must be > 0");
            } else if (c.family == "bump") {
                if (c.bump_order < 0) e.push_back("environment.bump_order must be >= 0");
            } else if (c.family == "discrete") {
                if (c.atoms.empty() || c.atoms.size() != c.probabilities.size()) {
                    e.push_back("environment.atoms and environment.probabilities must be non-empty and of equal length");
                }
                for (double p : c.probabilities) {
                    if (!(p >= 0.0)) e.push_back("environment.probabilities must be >= 0");
                }
            } else {
                e.push_back("environment.family must be gaussian, bump or discrete");
            }
            if (c.family != "discrete" && c.grid_points < 3) e.push_back("environment.grid_points must be >= 3");
            if (c.half_width < 0.0) e.push_back("environment.half_width must be >= 0");
            break;
        }
        case ModelKind::vanhove: {
            if (!(c.k_min > 0.0 && c.k_max > c.k_min)) e.push_back("environment: need 0 < k_min < k_max");
            if (c.k_points < 2) e.push_back("environment.k_points must be >= 2");
            if (c.coupling != "linear_exp" && c.coupling != "power") e.push_back("environment.coupling must be linear_exp or power");
            if (!(c.dispersion > 0.0)) e.push_back("environment.dispersion must be > 0");
            for (std::size_t i = 0; i < c.cutoffs.size(); ++i) {
                if (!(c.cutoffs[i] > 0.0) || (i > 0 && !(c.cutoffs[i] < c.cutoffs[i - 1]))) {
                    e.push_back("environment.cutoffs must be positive and strictly decreasing");
                    break;
                }
            }
            if (!(c.ir_cap > 0.0)) e.push_back("environment.ir_cap must be > 0");
            break;
        }
        case ModelKind::single_mode:
            if (!(c.energy > 0.0)) e.push_back("environment.energy must be > 0 for single_mode (use free_particle for 0)");
            break;
        case ModelKind::free_particle:
            break;
        case ModelKind::scattering:
            if (c.env_dim < 2) e.push_back("environment.env_dim must be >= 2");
            if (std::size_t(std::max(c.env_dim, 1)) * d > 4096) e.push_back("scattering: dim * env_dim exceeds 4096");
            if (!(c.potential_norm >= 0.0)) e.push_back("environment.potential_norm must be >= 0");
            if (!(c.energy_gap >= 0.0)) e.push_back("environment.energy_gap must be >= 0");
            if (!(c.sigma > 0.0)) e.push_back("environment.sigma must be > 0");
            if (!(c.moller_horizon > 0.0)) e.push_back("analysis.moller_horizon must be > 0");
            if (c.moller_doublings < 1) e.push_back("analysis.moller_doublings must be >= 1");
            if (c.moller_samples < 8) e.push_back("analysis.moller_samples must be >= 8");
            break;
    }
    if (!e.empty()) return e;

    // Checks that need the assembled operators.
    try {
        const Matrix h = system_h(c), v = system_v(c);
        if (!(operator_norm(commutator(h, v)) <= tol::commutator)) e.push_back("system: H_S and V_S must commute");
        const SectorFamily f = spectral_projectors(HermitianOperator::symmetrized(v), c.cluster_tol);
        if (c.model == ModelKind::araki_zurek && c.family != "discrete") {
            const SpectralDensity mu = environment_measure(c);
            const double spread = f.eigenvalues().back() - f.eigenvalues().front();
            const double step = spread * c.t_max * mu.max_spacing();
            if (step > std::numbers::pi) {
                e.push_back("Nyquist: |delta lambda| * t_max * grid spacing = " + format_double(step) +
                            " exceeds pi; increase environment.grid_points");
            }
        }
    } catch (const Error& err) {
        e.push_back(err.what());
    }
    return e;
}

// ----------------------------- Parse and serialize ---------------------------

inline ScenarioConfig parse_scenario(std::string_view text) {
    ScenarioConfig c;
    std::map<std::string, std::size_t> seen;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t start = line_no;
        auto strip_comment = [](std::string s) {
            const auto p = s.find_first_of("#;");
            if (p != std::string::npos) s.erase(p);
            return detail::trim(s);
        };
        std::string s = strip_comment(line);
        if (s.empty()) continue;
        if (s.front() == '[' && s.back() == ']' && s.find('=') == std::string::npos) {
            section = detail::trim(s.substr(1, s.size() - 2));
            static const std::set<std::string> known{"scenario", "system", "environment", "initial", "time",
                                                     "oracle", "analysis", "output"};
            if (!known.count(section)) throw ParseError(start, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(start, "expected 'key = value'");
        if (section.empty()) throw ParseError(start, "key outside of any [section]");
        const std::string key = detail::trim(s.substr(0, eq));
        std::string value = detail::trim(s.substr(eq + 1));
        while (detail::bracket_balance(value) > 0) {
            if (!std::getline(in, line)) throw ParseError(start, "unbalanced brackets in value of '" + key + "'");
            ++line_no;
            value += " " + strip_comment(line);
        }
        if (detail::bracket_balance(value) < 0) throw ParseError(start, "unbalanced brackets in value of '" + key + "'");
        const std::string full = section + "." + key;
        if (seen.count(full)) throw ParseError(start, "duplicate key '" + full + "' (first on line " + std::to_string(seen[full]) + ")");
        seen[full] = start;
        bool matched = false;
        detail::visit_fields(c, [&](const char* sec, const char* k, auto& member) {
            if (matched || section != sec || key != k) return;
            matched = true;
            try {
                detail::parse_value(value, member);
            } catch (const detail::ValueError& ve) {
                throw ParseError(start, full + ": " + ve.message);
            }
        });
        if (!matched) throw ParseError(start, "unknown key '" + key + "' in [" + section + "]");
    }
    auto errors = validate_scenario(c);
    if (!errors.empty()) throw ValidationError(std::move(errors));
    return c;
}

// Every field is written, empty lists are omitted; parse_scenario inverts this exactly.
inline std::string serialize_scenario(const ScenarioConfig& c) {
    std::string out;
    std::string section;
    detail::visit_fields(c, [&](const char* sec, const char* key, const auto& member) {
        if (section != sec) {
            if (!section.empty()) out += "\n";
            section = sec;
            out += "[" + section + "]\n";
        }
        if (detail::is_empty_value(member)) return;
        out += std::string(key) + " = " + detail::render(member) + "\n";
    });
    return out;
}

// --------------------------------- Presets -----------------------------------

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{
        "az_gaussian", "az_bump_s1",         "az_bump_s2",           "az_bump_s3",  "az_point_spectrum",
        "vanhove_ir_regular", "vanhove_ir_divergent", "single_mode", "free_particle_pfeifer", "scattering_weak"};
    return names;
}

inline std::string preset_text(const std::string& name) {
    const std::string two_sectors = "[system]\ndim = 2\nV_S_diagonal = -0.5, 0.5\n";
    if (name == "az_gaussian") {
        return "[scenario]\nmodel = araki_zurek\nname = az_gaussian\nseed = 7\n\n" + two_sectors +
               "\n[environment]\nfamily = gaussian\nmean = 0\nsigma = 1\ngrid_points = 2048\n"
               "\n[initial]\nrho0 = plus\n\n[time]\nt_max = 8\nn_steps = 801\n"
               "\n[oracle]\nenabled = true\nenv_dim = 32\ntolerance = 1e-10\n"
               "\n[analysis]\ndefinition_one_draws = 20\n";
    }
    if (name == "az_bump_s1" || name == "az_bump_s2" || name == "az_bump_s3") {
        return "[scenario]\nmodel = araki_zurek\nname = " + name + "\nseed = 11\n\n" + two_sectors +
               "\n[environment]\nfamily = bump\nbump_order = " + name.substr(name.size() - 1) +
               "\nhalf_width = 1\ngrid_points = 2048\n"
               "\n[initial]\nrho0 = plus\n\n[time]\nt_max = 100\nn_steps = 1024\n"
               "\n[oracle]\nenabled = true\nenv_dim = 32\n"
               "\n[analysis]\nfit_decay = true\ncertificate_draws = 100\n";
    }
    if (name == "az_point_spectrum") {
        std::string atoms, probs;
        for (int k = 0; k <= 20; ++k) {
            atoms += (k ? ", " : "") + std::to_string(k);
            probs += (k ? ", " : "") + format_double(std::exp(-0.5 * (k - 10) * (k - 10) / 9.0));
        }
        return "[scenario]\nmodel = araki_zurek\nname = az_point_spectrum\nseed = 3\n\n" + two_sectors +
               "\n[environment]\nfamily = discrete\natoms = " + atoms + "\nprobabilities = " + probs +
               "\n\n[initial]\nrho0 = plus\n\n[time]\nt_max = 10\nn_steps = 1001\n"
               "\n[oracle]\nenabled = true\nenv_dim = 32\n";
    }
    if (name == "vanhove_ir_regular") {
        return "[scenario]\nmodel = vanhove\nname = vanhove_ir_regular\n\n" + two_sectors +
               "\n[environment]\nk_min = 1e-3\nk_max = 12\nk_points = 4096\ncoupling = linear_exp\ndispersion = 1\n"
               "cutoffs = 1e-2, 1e-3, 1e-4\nprobe_time = 10\n"
               "\n[initial]\nrho0 = plus\n\n[time]\nt_max = 100\nn_steps = 2001\n";
    }
    if (name == "vanhove_ir_divergent") {
        return "[scenario]\nmodel = vanhove\nname = vanhove_ir_divergent\n\n" + two_sectors +
               "\n[environment]\nk_min = 1e-4\nk_max = 1\nk_points = 4096\ncoupling = power\ncoupling_exponent = -0.25\n"
               "dispersion = 1\ncutoffs = 1e-2, 1e-3, 1e-4\nprobe_time = 10\nir_override = true\n"
               "\n[initial]\nrho0 = plus\n\n[time]\nt_max = 20\nn_steps = 401\n";
    }
    if (name == "single_mode") {
        return "[scenario]\nmodel = single_mode\nname = single_mode\n\n" + two_sectors +
               "\n[environment]\nenergy = 1\nf0 = 1\n"
               "\n[initial]\nrho0 = plus\n\n[time]\nt_max = 12.566370614359172\nn_steps = 801\n"
               "\n[oracle]\nenabled = true\ntolerance = 1e-8\nfock_levels = 40\n";
    }
    if (name == "free_particle_pfeifer") {
        return "[scenario]\nmodel = free_particle\nname = free_particle_pfeifer\n\n" + two_sectors +
               "\n[environment]\nf0 = 1\n"
               "\n[initial]\nrho0 = plus\n\n[time]\nt_max = 5\nn_steps = 501\n"
               "\n[oracle]\nenabled = true\ntolerance = 1e-8\nfock_levels = 60\n";
    }
    if (name == "scattering_weak") {
        return "[scenario]\nmodel = scattering\nname = scattering_weak\nseed = 5\n\n" + two_sectors +
               "\n[environment]\nsigma = 1\nenv_dim = 64\npotential_norm = 0.05\nenergy_gap = 1\n"
               "\n[initial]\nrho0 = plus\n\n[time]\nt_max = 4\nn_steps = 81\n"
               "\n[oracle]\nenabled = true\n"
               "\n[analysis]\nmoller_horizon = 20\nmoller_doublings = 3\nmoller_samples = 1024\n";
    }
    throw Error(ErrorKind::precondition, "unknown preset '" + name + "'");
}

inline ScenarioConfig preset(const std::string& name) { return parse_scenario(preset_text(name)); }

} // namespace decoseed::harness
