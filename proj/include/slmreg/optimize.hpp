#pragma once

#include "slmreg/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace slmreg::optimize {

struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    static Bounds unbounded(std::size_t dim) {
        return {std::vector<double>(dim, -std::numeric_limits<double>::infinity()),
                std::vector<double>(dim, std::numeric_limits<double>::infinity())};
    }

    void clamp(std::vector<double>& p) const {
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = std::clamp(p[i], lower[i], upper[i]);
        }
    }

    /// True if any coordinate of p sits within `tol` (relative to the box) of a bound.
    bool on_boundary(const std::vector<double>& p, double tol) const {
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double width = std::isfinite(upper[i] - lower[i]) ? upper[i] - lower[i] : 1.0;
            if (std::isfinite(lower[i]) && p[i] - lower[i] <= tol * width) return true;
            if (std::isfinite(upper[i]) && upper[i] - p[i] <= tol * width) return true;
        }
        return false;
    }
};

struct Options {
    double f_tol = 1e-10;        // spread of simplex values
    double x_tol = 1e-8;         // simplex diameter
    std::size_t max_evals = 20000;
    double initial_step = 0.1;   // relative; absolute when the coordinate is 0
};

struct Result {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Nelder-Mead simplex search; trial points are clamped into `bounds`.
/// The returned value never exceeds the objective at `start`.
inline Result nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                          std::vector<double> start, const Bounds& bounds, const Options& options = {}) {
    const std::size_t n = start.size();
    detail::require(n >= 1, "optimizer needs at least one parameter");
    detail::require(bounds.lower.size() == n && bounds.upper.size() == n, "bounds dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        detail::require(bounds.lower[i] <= bounds.upper[i], "bounds must be well ordered");
    }
    bounds.clamp(start);

    Result result;
    auto eval = [&](const std::vector<double>& p) {
        ++result.evaluations;
        const double v = objective(p);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> values(n + 1);
    values[0] = eval(start);
    for (std::size_t i = 0; i < n; ++i) {
        auto& p = simplex[i + 1];
        const double step = start[i] != 0.0 ? options.initial_step * std::abs(start[i]) : options.initial_step;
        p[i] = start[i] + step;
        if (p[i] > bounds.upper[i]) {
            p[i] = start[i] - step;
        }
        bounds.clamp(p);
        values[i + 1] = eval(p);
    }

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n);
    std::vector<double> trial(n);
    auto along = [&](double coef, std::size_t worst) {
        for (std::size_t i = 0; i < n; ++i) {
            trial[i] = centroid[i] + coef * (simplex[worst][i] - centroid[i]);
        }
        bounds.clamp(trial);
        return eval(trial);
    };

    while (result.evaluations < options.max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        double diameter = 0.0;
        for (std::size_t v = 0; v <= n; ++v) {
            for (std::size_t i = 0; i < n; ++i) {
                diameter = std::max(diameter, std::abs(simplex[v][i] - simplex[best][i]));
            }
        }
        const double spread = values[worst] - values[best];
        if (std::isfinite(spread) && spread <= options.f_tol * (1.0 + std::abs(values[best])) &&
            diameter <= options.x_tol) {
            result.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t v = 0; v <= n; ++v) {
            if (v == worst) continue;
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v][i];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        const double fr = along(-1.0, worst);
        if (fr < values[best]) {
            const auto reflected = trial;
            const double fe = along(-2.0, worst);
            if (fe < fr) {
                simplex[worst] = trial;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = trial;
            values[worst] = fr;
            continue;
        }
        const bool outside = fr < values[worst];
        const auto reflected = trial;
        const double fc = along(outside ? -0.5 : 0.5, worst);
        if (fc < std::min(fr, values[worst])) {
            simplex[worst] = trial;
            values[worst] = fc;
            continue;
        }
        if (outside && fr < values[worst]) {
            simplex[worst] = reflected;
            values[worst] = fr;
        }
        // Shrink towards the best vertex.
        for (std::size_t v = 0; v <= n; ++v) {
            if (v == best) continue;
            for (std::size_t i = 0; i < n; ++i) {
                simplex[v][i] = simplex[best][i] + 0.5 * (simplex[v][i] - simplex[best][i]);
            }
            bounds.clamp(simplex[v]);
            values[v] = eval(simplex[v]);
        }
    }

    const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    result.x = simplex[best];
    result.value = values[best];
    return result;
}

}  // namespace slmreg::optimize
