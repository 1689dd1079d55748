#pragma once

#include "slmreg/error.hpp"
#include "slmreg/kernel.hpp"
#include "slmreg/optimize.hpp"
#include "slmreg/parallel.hpp"
#include "slmreg/process.hpp"
#include "slmreg/rules.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace slmreg {

enum class FamilyKind { Linear, Quadratic, Custom };

/// Parametric null model g(x, theta).
struct ParametricFamily {
    FamilyKind kind = FamilyKind::Linear;
    std::size_t dim = 2;
    std::string name = "linear";
    std::function<double(double, std::span<const double>)> eval;

    double operator()(double x, std::span<const double> theta) const { return eval(x, theta); }

    bool closed_form() const { return kind != FamilyKind::Custom; }

    static ParametricFamily linear() {
        return {FamilyKind::Linear, 2, "linear",
                [](double x, std::span<const double> t) { return t[0] + t[1] * x; }};
    }

    static ParametricFamily quadratic() {
        return {FamilyKind::Quadratic, 3, "quadratic",
                [](double x, std::span<const double> t) { return t[0] + x * (t[1] + t[2] * x); }};
    }

    static ParametricFamily custom(std::string name, std::size_t dim,
                                   std::function<double(double, std::span<const double>)> eval) {
        return {FamilyKind::Custom, dim, std::move(name), std::move(eval)};
    }

    static ParametricFamily from_name(std::string_view text) {
        if (text == "linear") return linear();
        if (text == "quadratic") return quadratic();
        throw ValidationError("unknown family '" + std::string(text) + "' (expected linear|quadratic)");
    }
};

/// Non-negative weight pi(x) with compact support [lo, hi].
struct WeightFunction {
    double lo = -100.0;
    double hi = 100.0;
    std::function<double(double)> eval;  // empty means the indicator of [lo, hi]

    double operator()(double x) const {
        if (x < lo || x > hi) return 0.0;
        return eval ? eval(x) : 1.0;
    }

    static WeightFunction indicator(double lo, double hi) {
        detail::require(std::isfinite(lo) && std::isfinite(hi) && lo < hi,
                        "weight support must be a finite interval with lo < hi");
        return {lo, hi, {}};
    }

    static WeightFunction zero() { return {-1.0, 1.0, [](double) { return 0.0; }}; }
};

/// Failure of the derivative-free search; carries the best iterate found.
class NlsFailure : public NumericalError {
public:
    NlsFailure(const std::string& what, std::vector<double> best)
        : NumericalError(what), best_(std::move(best)) {}
    const std::vector<double>& best_iterate() const noexcept { return best_; }

private:
    std::vector<double> best_;
};

struct NlsOptions {
    std::size_t restarts = 5;
    optimize::Options search{};
};

namespace detail {

inline std::vector<double> least_squares_polynomial(std::span<const double> x, std::span<const double> y,
                                                    std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd design(n, static_cast<Eigen::Index>(dim));
    Eigen::VectorXd rhs(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        double p = 1.0;
        for (std::size_t j = 0; j < dim; ++j) {
            design(k, static_cast<Eigen::Index>(j)) = p;
            p *= x[static_cast<std::size_t>(k)];
        }
        rhs(k) = y[static_cast<std::size_t>(k)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-12);
    if (qr.rank() < static_cast<Eigen::Index>(dim)) {
        throw NumericalError("rank-deficient design in least-squares fit");
    }
    const Eigen::VectorXd theta = qr.solve(rhs);
    return {theta.data(), theta.data() + theta.size()};
}

}  // namespace detail

/// theta_hat = argmin sum (y_k - g(x_k, theta))^2.
///
/// Linear and quadratic families use the least-squares solution directly;
/// custom families use a bounded Nelder-Mead search from `theta_init`,
/// restarted from the incumbent while it sits on the box boundary or has
/// not converged.
inline std::vector<double> nls_fit(const ParametricFamily& family, std::span<const double> x,
                                   std::span<const double> y, std::vector<double> theta_init = {},
                                   std::optional<optimize::Bounds> bounds = std::nullopt,
                                   const NlsOptions& options = {}) {
    detail::require(x.size() == y.size(), "x and y must have equal length");
    detail::require(x.size() >= family.dim, "need at least as many observations as parameters");
    if (family.closed_form()) {
        return detail::least_squares_polynomial(x, y, family.dim);
    }
    if (theta_init.empty()) theta_init.assign(family.dim, 0.0);
    detail::require(theta_init.size() == family.dim, "initial parameter has wrong dimension");
    const auto box = bounds.value_or(optimize::Bounds::unbounded(family.dim));
    auto q = [&](const std::vector<double>& theta) {
        double acc = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double r = y[k] - family(x[k], theta);
            acc += r * r;
        }
        return acc;
    };
    auto result = optimize::nelder_mead(q, theta_init, box, options.search);
    for (std::size_t attempt = 0; attempt < options.restarts; ++attempt) {
        if (result.converged && !box.on_boundary(result.x, 1e-9)) break;
        auto again = optimize::nelder_mead(q, result.x, box, options.search);
        const bool stalled = again.value >= result.value;
        if (again.value <= result.value) result = std::move(again);
        if (stalled && result.converged) break;
    }
    if (!result.converged) {
        throw NlsFailure("nonlinear least squares did not converge within the restart budget", result.x);
    }
    return result.x;
}

/// Residuals y_k - g(x_k, theta). Values within rounding of the fitted value
/// (relative 1e-10) are set to exactly zero so exact fits give T_N = 0.
inline std::vector<double> residuals(const ParametricFamily& family, std::span<const double> x,
                                     std::span<const double> y, std::span<const double> theta) {
    std::vector<double> r(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double g = family(x[k], theta);
        const double diff = y[k] - g;
        r[k] = std::abs(diff) <= 1e-10 * (std::abs(y[k]) + std::abs(g)) ? 0.0 : diff;
    }
    return r;
}

struct QuadratureOptions {
    std::size_t cells = 2048;
    /// Restrict integration to [min x - R h, max x + R h] intersected with the
    /// weight support, R being the kernel radius.
    bool clip_to_data = true;
};

/// Integration interval for T_N; empty when the data window misses the weight support.
inline std::optional<std::pair<double, double>> quadrature_support(std::span<const double> x, double h,
                                                                   const Kernel& kernel,
                                                                   const WeightFunction& weight, bool clip) {
    double lo = weight.lo;
    double hi = weight.hi;
    if (clip && !x.empty()) {
        const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
        const double reach = kernel.radius() * h;
        lo = std::max(lo, *mn - reach);
        hi = std::min(hi, *mx + reach);
    }
    if (!(lo < hi)) return std::nullopt;
    return std::pair{lo, hi};
}

/// T = integral { sum_k K((x_k - s)/h) r_k }^2 pi(s) ds by the composite
/// midpoint rule. Each observation only touches cells within R h of x_k.
inline double t_statistic_from_residuals(std::span<const double> x, std::span<const double> r, double h,
                                         const Kernel& kernel, const WeightFunction& weight,
                                         const QuadratureOptions& quad = {}) {
    detail::require(x.size() == r.size(), "x and residuals must have equal length");
    detail::require(std::isfinite(h) && h > 0.0, "bandwidth must be positive");
    detail::require(weight.lo < weight.hi, "weight support is empty");
    detail::require(quad.cells >= 2, "quadrature needs at least 2 cells");
    const auto support = quadrature_support(x, h, kernel, weight, quad.clip_to_data);
    if (!support) return 0.0;
    const auto [lo, hi] = *support;
    const std::size_t cells = quad.cells;
    const double width = (hi - lo) / static_cast<double>(cells);
    const double reach = kernel.radius() * h;
    const double inv_h = 1.0 / h;

    std::vector<double> smooth(cells, 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (r[k] == 0.0) continue;
        // Cells with centres lo + (i + 1/2) width inside [x_k - reach, x_k + reach].
        const double first = std::ceil((x[k] - reach - lo) / width - 0.5);
        const double last = std::floor((x[k] + reach - lo) / width - 0.5);
        if (last < 0.0 || first > static_cast<double>(cells - 1)) continue;
        const auto i0 = static_cast<std::size_t>(std::max(first, 0.0));
        const auto i1 = static_cast<std::size_t>(std::min(last, static_cast<double>(cells - 1)));
        if (kernel.kind == KernelKind::Gaussian) {
            // exp(-u^2/2) along u_{i+1} = u_i + delta via two running ratios.
            const double delta = width * inv_h;
            double u = (lo + (static_cast<double>(i0) + 0.5) * width - x[k]) * inv_h;
            double g = std::exp(-0.5 * u * u) * kernel(0.0) * r[k];
            double ratio = std::exp(-u * delta - 0.5 * delta * delta);
            const double step = std::exp(-delta * delta);
            for (std::size_t i = i0; i <= i1; ++i) {
                smooth[i] += g;
                g *= ratio;
                ratio *= step;
            }
        } else {
            for (std::size_t i = i0; i <= i1; ++i) {
                const double centre = lo + (static_cast<double>(i) + 0.5) * width;
                smooth[i] += kernel((x[k] - centre) * inv_h) * r[k];
            }
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        if (smooth[i] == 0.0) continue;
        const double centre = lo + (static_cast<double>(i) + 0.5) * width;
        total += smooth[i] * smooth[i] * weight(centre);
    }
    return total * width;
}

/// T_N for the fitted parametric model.
inline double t_statistic(std::span<const double> x, std::span<const double> y, const ParametricFamily& family,
                          std::span<const double> theta, double h, const Kernel& kernel,
                          const WeightFunction& weight, const QuadratureOptions& quad = {}) {
    detail::require(x.size() == y.size(), "x and y must have equal length");
    const auto r = residuals(family, x, y, theta);
    return t_statistic_from_residuals(x, r, h, kernel, weight, quad);
}

/// Divisor applied to T_N: sqrt(n) lambda^d h (semi-long), n^{1/2-d} h (long),
/// sqrt(n) h (short memory, unit long-run scale).
inline double statistic_normalizer(std::size_t n, double lambda, double d, double h, MemoryKind memory) {
    detail::require(n >= 1, "n must be at least 1");
    detail::require(std::isfinite(h) && h > 0.0, "bandwidth must be positive");
    const auto nd = static_cast<double>(n);
    switch (memory) {
        case MemoryKind::SemiLongMemory:
            detail::require(std::isfinite(lambda) && lambda > 0.0, "semi-long memory normalisation requires lambda > 0");
            return std::sqrt(nd) * std::pow(lambda, d) * h;
        case MemoryKind::LongMemory:
            detail::require(d > 0.0 && d < 0.5, "long memory normalisation requires 0 < d < 1/2");
            return std::pow(nd, 0.5 - d) * h;
        case MemoryKind::ShortMemory:
            return std::sqrt(nd) * h;
    }
    return std::sqrt(nd) * h;
}

inline double normalized_statistic(double t_raw, std::size_t n, double lambda, double d, double h,
                                   MemoryKind memory) {
    return t_raw / statistic_normalizer(n, lambda, d, h, memory);
}

/// Model and smoothing choices shared by the full-sample and block statistics.
struct StatisticSetup {
    ParametricFamily family = ParametricFamily::linear();
    Kernel kernel{KernelKind::Gaussian};
    WeightFunction weight = WeightFunction::indicator(-100.0, 100.0);
    QuadratureOptions quad{};
    MemoryKind memory = MemoryKind::SemiLongMemory;
    double d = 0.0;
    std::vector<double> theta_init{};
    std::optional<optimize::Bounds> bounds{};
};

struct SubsampleDistribution {
    std::vector<double> sorted;    // ascending normalised block statistics
    std::vector<double> by_block;  // block order t = 1..N-b+1; NaN where skipped
    std::size_t skipped = 0;
};

/// Normalised statistic on every block of b consecutive observations,
/// each with its own parametric refit.
inline SubsampleDistribution subsample_statistics(std::span<const double> x, std::span<const double> y,
                                                  const StatisticSetup& setup, std::size_t b, double h_b,
                                                  double lambda_b, unsigned threads = 1) {
    detail::require(x.size() == y.size(), "x and y must have equal length");
    const std::size_t n = x.size();
    detail::require(b >= 2 && b <= n, "block size must satisfy 2 <= b <= N");
    detail::require(b >= setup.family.dim, "block size smaller than the parameter count");
    const std::size_t blocks = n - b + 1;
    const double normalizer = statistic_normalizer(b, lambda_b, setup.d, h_b, setup.memory);

    SubsampleDistribution out;
    out.by_block.assign(blocks, std::numeric_limits<double>::quiet_NaN());
    parallel_for(blocks, threads, [&](std::size_t t) {
        const auto xb = x.subspan(t, b);
        const auto yb = y.subspan(t, b);
        try {
            const auto theta = nls_fit(setup.family, xb, yb, setup.theta_init, setup.bounds);
            out.by_block[t] = t_statistic(xb, yb, setup.family, theta, h_b, setup.kernel, setup.weight, setup.quad) /
                              normalizer;
        } catch (const NumericalError&) {
            // counted below
        }
    });
    out.sorted.reserve(blocks);
    for (double v : out.by_block) {
        if (std::isnan(v)) {
            ++out.skipped;
        } else {
            out.sorted.push_back(v);
        }
    }
    if (static_cast<double>(out.skipped) > 0.05 * static_cast<double>(blocks)) {
        throw NumericalError("subsampling aborted: " + std::to_string(out.skipped) + " of " +
                             std::to_string(blocks) + " block fits failed");
    }
    std::sort(out.sorted.begin(), out.sorted.end());
    return out;
}

/// (1 + #{v >= t}) / (1 + #values); `sorted` must be ascending.
inline double subsample_p_value(std::span<const double> sorted, double t) {
    const auto first_ge = std::lower_bound(sorted.begin(), sorted.end(), t);
    const auto at_least = static_cast<double>(sorted.end() - first_ge);
    return (1.0 + at_least) / (1.0 + static_cast<double>(sorted.size()));
}

/// Empirical (1 - alpha) quantile: the smallest v with F_hat(v) >= 1 - alpha.
inline double subsample_quantile(std::span<const double> sorted, double alpha) {
    detail::require(!sorted.empty(), "empty subsample distribution");
    detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    const double m = static_cast<double>(sorted.size());
    auto rank = static_cast<std::ptrdiff_t>(std::ceil((1.0 - alpha) * m - 1e-9));
    rank = std::clamp<std::ptrdiff_t>(rank, 1, static_cast<std::ptrdiff_t>(sorted.size()));
    return sorted[static_cast<std::size_t>(rank - 1)];
}

struct SpecTestResult {
    double t_raw = 0.0;
    double t_normalized = 0.0;
    double normalizer = 1.0;
    std::vector<double> theta_hat;
    std::vector<double> subsample_values;
    double p_value = 1.0;
    std::size_t block_size = 0;
    std::size_t skipped_blocks = 0;
    double bandwidth = 0.0;
    double lambda = 0.0;
    double block_bandwidth = 0.0;
    double block_lambda = 0.0;

    double critical_value(double alpha) const { return subsample_quantile(subsample_values, alpha); }

    /// Reject when the statistic exceeds the (1 - alpha) subsample quantile.
    bool rejects(double alpha) const { return t_normalized > critical_value(alpha); }
};

/// Explicit smoothing/tempering values for the full sample and the blocks.
struct SpecTestScales {
    double h = 0.0;
    double lambda = 0.0;
    std::size_t b = 0;
    double h_b = 0.0;
    double lambda_b = 0.0;
};

inline SpecTestResult run_spec_test(std::span<const double> x, std::span<const double> y,
                                    const StatisticSetup& setup, const SpecTestScales& scales,
                                    unsigned threads = 1) {
    detail::require(x.size() == y.size(), "x and y must have equal length");
    SpecTestResult res;
    res.theta_hat = nls_fit(setup.family, x, y, setup.theta_init, setup.bounds);
    res.t_raw = t_statistic(x, y, setup.family, res.theta_hat, scales.h, setup.kernel, setup.weight, setup.quad);
    res.normalizer = statistic_normalizer(x.size(), scales.lambda, setup.d, scales.h, setup.memory);
    res.t_normalized = res.t_raw / res.normalizer;
    auto dist = subsample_statistics(x, y, setup, scales.b, scales.h_b, scales.lambda_b, threads);
    res.subsample_values = std::move(dist.sorted);
    res.skipped_blocks = dist.skipped;
    res.p_value = subsample_p_value(res.subsample_values, res.t_normalized);
    res.block_size = scales.b;
    res.bandwidth = scales.h;
    res.lambda = scales.lambda;
    res.block_bandwidth = scales.h_b;
    res.block_lambda = scales.lambda_b;
    return res;
}

/// Sample-size rules for h, lambda and b; block values apply the same rule with N -> b.
struct SpecTestRules {
    PowerRule bandwidth{1.0, -1.0 / 3.0};
    PowerRule block{1.0, 0.5};
    std::optional<PowerRule> tempering{};  // required for semi-long memory

    SpecTestScales resolve(std::size_t n, MemoryKind memory) const {
        SpecTestScales s;
        s.h = bandwidth(static_cast<double>(n));
        s.b = std::clamp<std::size_t>(block.floor_at(n), 2, n);
        s.h_b = bandwidth(static_cast<double>(s.b));
        if (memory == MemoryKind::SemiLongMemory) {
            detail::require(tempering.has_value(), "semi-long memory needs a tempering rule");
            s.lambda = (*tempering)(static_cast<double>(n));
            s.lambda_b = (*tempering)(static_cast<double>(s.b));
        }
        return s;
    }
};

inline SpecTestResult run_spec_test(std::span<const double> x, std::span<const double> y,
                                    const StatisticSetup& setup, const SpecTestRules& rules,
                                    unsigned threads = 1) {
    return run_spec_test(x, y, setup, rules.resolve(x.size(), setup.memory), threads);
}

}  // namespace slmreg
