// spectral_density.hpp - Spectral measures of the environment coupling on a grid
//
// A measure is a grid of spectral values with quadrature weights and a density;
// the probability attached to node k is density[k] * weights[k]. Discrete
// (point-spectrum) measures use unit weights and carry the atom masses in
// density.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "decoseed/error.hpp"

namespace decoseed {

inline std::vector<double> trapezoid_weights(const std::vector<double>& grid) {
    const std::size_t n = grid.size();
    std::vector<double> w(n, 0.0);
    if (n == 1) {
        w[0] = 1.0;
        return w;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = grid[i + 1] - grid[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> x(n);
    if (n == 1) {
        x[0] = a;
        return x;
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    x.back() = b;
    return x;
}

class SpectralDensity {
public:
    // Smoothness class recorded for analytic densities.
    static constexpr int analytic = 1000;

    SpectralDensity() = default;

    // Structural checks only; normalization is reported by normalization_defect()
    // and enforced where the measure is consumed.
    SpectralDensity(std::vector<double> grid, std::vector<double> density, std::vector<double> weights,
                    int smoothness = 0, bool discrete = false)
        : grid_(std::move(grid)), density_(std::move(density)), weights_(std::move(weights)),
          smoothness_(smoothness), discrete_(discrete) {
        if (grid_.empty() || grid_.size() != density_.size() || grid_.size() != weights_.size()) {
            throw Error(ErrorKind::grid_mismatch, "SpectralDensity: grid, density and weights must have equal nonzero size");
        }
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            if (i > 0 && !(grid_[i] > grid_[i - 1])) {
                throw Error(ErrorKind::precondition, "SpectralDensity: grid must be strictly increasing");
            }
            if (!(density_[i] >= 0.0)) throw Error(ErrorKind::precondition, "SpectralDensity: density must be >= 0");
            if (!(weights_[i] > 0.0)) throw Error(ErrorKind::precondition, "SpectralDensity: weights must be > 0");
        }
        if (smoothness_ < 0) throw Error(ErrorKind::precondition, "SpectralDensity: smoothness class must be >= 0");
    }

    // Normal density, grid padded until the density falls below 1e-16 unless
    // half_width_sigmas > 0 is given.
    static SpectralDensity gaussian(double mean, double sigma, std::size_t points = 2048, double half_width_sigmas = 0.0) {
        if (!(sigma > 0.0)) throw Error(ErrorKind::precondition, "gaussian: sigma must be > 0");
        if (points < 3) throw Error(ErrorKind::precondition, "gaussian: need at least 3 grid points");
        double hw = half_width_sigmas;
        if (!(hw > 0.0)) {
            const double peak = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
            hw = std::sqrt(2.0 * std::log(std::max(peak, 1.0) / 1e-16));
        }
        auto grid = linspace(mean - hw * sigma, mean + hw * sigma, points);
        std::vector<double> d(points);
        for (std::size_t i = 0; i < points; ++i) {
            const double z = (grid[i] - mean) / sigma;
            d[i] = std::exp(-0.5 * z * z);
        }
        return normalized(std::move(grid), std::move(d), analytic);
    }

    // (1 - x^2)^order on [center - half_width, center + half_width]; the first
    // order-1 derivatives vanish at the support boundary.
    static SpectralDensity bump(int order, double center = 0.0, double half_width = 1.0, std::size_t points = 2048) {
        if (order < 0) throw Error(ErrorKind::precondition, "bump: order must be >= 0");
        if (!(half_width > 0.0)) throw Error(ErrorKind::precondition, "bump: half_width must be > 0");
        if (points < 3) throw Error(ErrorKind::precondition, "bump: need at least 3 grid points");
        auto grid = linspace(center - half_width, center + half_width, points);
        std::vector<double> d(points);
        for (std::size_t i = 0; i < points; ++i) {
            const double x = (grid[i] - center) / half_width;
            d[i] = std::pow(std::max(0.0, 1.0 - x * x), order);
        }
        return normalized(std::move(grid), std::move(d), order);
    }

    static SpectralDensity discrete(std::vector<double> atoms, std::vector<double> masses) {
        if (atoms.size() != masses.size() || atoms.empty()) {
            throw Error(ErrorKind::grid_mismatch, "discrete: atoms and masses must have equal nonzero size");
        }
        std::vector<std::size_t> order(atoms.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return atoms[a] < atoms[b]; });
        std::vector<double> a(atoms.size()), m(atoms.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            a[i] = atoms[order[i]];
            m[i] = masses[order[i]];
        }
        const double total = std::accumulate(m.begin(), m.end(), 0.0);
        if (!(total > 0.0)) throw Error(ErrorKind::unnormalized_measure, "discrete: total mass must be > 0");
        for (auto& x : m) x /= total;
        std::vector<double> w(a.size(), 1.0);
        return SpectralDensity(std::move(a), std::move(m), std::move(w), 0, true);
    }

    // Trapezoid weights on an arbitrary grid, density rescaled to unit mass.
    static SpectralDensity normalized(std::vector<double> grid, std::vector<double> density, int smoothness = 0) {
        auto w = trapezoid_weights(grid);
        double mass = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) mass += density[i] * w[i];
        if (!(mass > 0.0)) throw Error(ErrorKind::unnormalized_measure, "normalized: density has zero mass");
        for (auto& d : density) d /= mass;
        return SpectralDensity(std::move(grid), std::move(density), std::move(w), smoothness, false);
    }

    const std::vector<double>& grid() const noexcept { return grid_; }
    const std::vector<double>& density() const noexcept { return density_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    int smoothness() const noexcept { return smoothness_; }
    bool is_discrete() const noexcept { return discrete_; }
    std::size_t size() const noexcept { return grid_.size(); }

    double probability(std::size_t k) const { return density_[k] * weights_[k]; }

    double mass() const {
        double s = 0.0;
        for (std::size_t k = 0; k < size(); ++k) s += probability(k);
        return s;
    }

    double normalization_defect() const { return std::abs(mass() - 1.0); }

    double max_spacing() const {
        double h = 0.0;
        for (std::size_t k = 1; k < size(); ++k) h = std::max(h, grid_[k] - grid_[k - 1]);
        return h;
    }

    double mean() const {
        double s = 0.0;
        for (std::size_t k = 0; k < size(); ++k) s += grid_[k] * probability(k);
        return s / mass();
    }

    // Inverse CDF. Continuous measures use the piecewise-linear density between
    // nodes; discrete ones return the first atom whose cumulative mass reaches u.
    double quantile(double u) const {
        if (!(u >= 0.0 && u <= 1.0)) throw Error(ErrorKind::precondition, "quantile: u must lie in [0, 1]");
        if (discrete_) {
            double c = 0.0;
            const double total = mass();
            for (std::size_t k = 0; k < size(); ++k) {
                c += probability(k) / total;
                if (c >= u) return grid_[k];
            }
            return grid_.back();
        }
        std::vector<double> cdf(size(), 0.0);
        for (std::size_t k = 1; k < size(); ++k) {
            cdf[k] = cdf[k - 1] + 0.5 * (density_[k - 1] + density_[k]) * (grid_[k] - grid_[k - 1]);
        }
        const double total = cdf.back();
        const double target = u * total;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
        if (it == cdf.begin()) return grid_.front();
        if (it == cdf.end()) return grid_.back();
        const std::size_t k = static_cast<std::size_t>(it - cdf.begin());
        const double span = cdf[k] - cdf[k - 1];
        const double frac = span > 0.0 ? (target - cdf[k - 1]) / span : 0.0;
        return grid_[k - 1] + frac * (grid_[k] - grid_[k - 1]);
    }

private:
    std::vector<double> grid_;
    std::vector<double> density_;
    std::vector<double> weights_;
    int smoothness_{0};
    bool discrete_{false};
};

} // namespace decoseed
