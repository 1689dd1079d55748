#pragma once

#include "slmreg/error.hpp"
#include "slmreg/kernel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace slmreg {

/// Nadaraya-Watson fit on a grid. Entries of fhat/sigma2hat/ci are empty
/// where no observation carries kernel weight (local_mass == 0).
struct KernelEstimate {
    std::vector<double> grid;
    std::vector<std::optional<double>> fhat;
    std::vector<std::optional<double>> sigma2hat;
    std::vector<double> local_mass;
    std::vector<std::optional<std::pair<double, double>>> ci;
    double bandwidth = 0.0;
    double alpha = 0.05;

    bool defined(std::size_t i) const { return local_mass[i] > 0.0; }
};

namespace detail {

struct LocalSums {
    double mass = 0.0;      // sum_k K((x_k - x)/h)
    double weighted = 0.0;  // sum_k K((x_k - x)/h) y_k
};

inline LocalSums local_sums(std::span<const double> x, std::span<const double> y, double at, double h,
                            const Kernel& kernel) {
    LocalSums s;
    const double inv_h = 1.0 / h;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double w = kernel((x[k] - at) * inv_h);
        if (w != 0.0) {
            s.mass += w;
            s.weighted += w * y[k];
        }
    }
    return s;
}

inline void check_inputs(std::span<const double> x, std::span<const double> y, double h) {
    detail::require(x.size() == y.size(), "x and y must have equal length");
    detail::require(!x.empty(), "data must be non-empty");
    detail::require(std::isfinite(h) && h > 0.0, "bandwidth must be positive");
}

}  // namespace detail

/// f_hat(at) with leave-in weights; empty if no observation is in the window.
inline std::optional<double> nw_value(std::span<const double> x, std::span<const double> y, double at, double h,
                                      const Kernel& kernel) {
    const auto s = detail::local_sums(x, y, at, h, kernel);
    if (s.mass <= 0.0) {
        return std::nullopt;
    }
    return s.weighted / s.mass;
}

/// sigma2_hat(at) = sum (y_k - fitted_k)^2 K_h(x_k - at) / sum K_h(x_k - at).
/// `fitted` holds f_hat(x_k); only observations with non-zero weight are read.
inline std::optional<double> residual_variance(std::span<const double> x, std::span<const double> y,
                                               std::span<const double> fitted, double h, const Kernel& kernel,
                                               double at) {
    detail::check_inputs(x, y, h);
    detail::require(fitted.size() == x.size(), "fitted values must match the data length");
    const double inv_h = 1.0 / h;
    double mass = 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double w = kernel((x[k] - at) * inv_h);
        if (w != 0.0) {
            const double r = y[k] - fitted[k];
            mass += w;
            acc += w * r * r;
        }
    }
    if (mass <= 0.0) {
        return std::nullopt;
    }
    return acc / mass;
}

namespace detail {

// sigma2_hat(at), computing f_hat(x_k) only for observations inside the window.
inline std::optional<double> local_residual_variance(std::span<const double> x, std::span<const double> y,
                                                     double at, double h, const Kernel& kernel) {
    const double inv_h = 1.0 / h;
    double mass = 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double w = kernel((x[k] - at) * inv_h);
        if (w == 0.0) {
            continue;
        }
        // Observation k has positive self-weight, so f_hat(x_k) is defined.
        const auto fk = nw_value(x, y, x[k], h, kernel);
        const double r = y[k] - *fk;
        mass += w;
        acc += w * r * r;
    }
    if (mass <= 0.0) {
        return std::nullopt;
    }
    return acc / mass;
}

}  // namespace detail

inline double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

/// Two-sided standard normal critical value z_{alpha/2}; alpha = 1 gives 0.
inline double z_critical(double alpha) {
    detail::require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
    return alpha == 1.0 ? 0.0 : normal_quantile(1.0 - 0.5 * alpha);
}

/// Self-normalised interval f_hat +- z * sqrt(sigma2 * int K^2 / (mass * int K)).
inline std::pair<double, double> interval_from(double fhat, double sigma2, double mass, const Kernel& kernel,
                                               double alpha) {
    const auto m = kernel.moments();
    const double half = z_critical(alpha) * std::sqrt(sigma2 * m.k2 / (mass * m.d1));
    return {fhat - half, fhat + half};
}

/// Nadaraya-Watson estimate on `grid` with per-point variance and CI.
inline KernelEstimate nw_estimate(std::span<const double> x, std::span<const double> y,
                                  std::span<const double> grid, double h, const Kernel& kernel,
                                  double alpha = 0.05, bool with_variance = true) {
    detail::check_inputs(x, y, h);
    detail::require(!grid.empty(), "evaluation grid must be non-empty");
    KernelEstimate est;
    est.grid.assign(grid.begin(), grid.end());
    est.bandwidth = h;
    est.alpha = alpha;
    const std::size_t m = grid.size();
    est.fhat.resize(m);
    est.sigma2hat.resize(m);
    est.local_mass.resize(m);
    est.ci.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto s = detail::local_sums(x, y, grid[i], h, kernel);
        est.local_mass[i] = s.mass;
        if (s.mass <= 0.0) {
            continue;
        }
        est.fhat[i] = s.weighted / s.mass;
        if (with_variance) {
            est.sigma2hat[i] = detail::local_residual_variance(x, y, grid[i], h, kernel);
            est.ci[i] = interval_from(*est.fhat[i], *est.sigma2hat[i], s.mass, kernel, alpha);
        }
    }
    return est;
}

/// Pointwise interval at `at`; empty where the kernel mass is zero.
inline std::optional<std::pair<double, double>> confidence_interval(double at, std::span<const double> x,
                                                                   std::span<const double> y, double h,
                                                                   const Kernel& kernel, double alpha) {
    detail::check_inputs(x, y, h);
    const auto s = detail::local_sums(x, y, at, h, kernel);
    if (s.mass <= 0.0) {
        return std::nullopt;
    }
    const auto sigma2 = detail::local_residual_variance(x, y, at, h, kernel);
    return interval_from(s.weighted / s.mass, *sigma2, s.mass, kernel, alpha);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t points) {
    detail::require(points >= 1, "grid needs at least one point");
    std::vector<double> g(points);
    if (points == 1) {
        g[0] = lo;
        return g;
    }
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        g[i] = lo + step * static_cast<double>(i);
    }
    g.back() = hi;
    return g;
}

}  // namespace slmreg
