#pragma once

#include "slmreg/error.hpp"
#include "slmreg/fft.hpp"
#include "slmreg/optimize.hpp"
#include "slmreg/process.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

namespace slmreg {

/// ARTFIMA(0, d, lambda, 0) spectral density (sigma2 / 2 pi) |1 - exp(-(lambda + i omega))|^{-2d}.
inline double artfima_spectral_density(double d, double lambda, double sigma2, double omega) {
    detail::require(omega > 0.0 && omega <= std::numbers::pi, "frequency must lie in (0, pi]");
    detail::require(sigma2 > 0.0, "innovation variance must be positive");
    detail::require(lambda >= 0.0, "lambda must be >= 0");
    const double r = std::exp(-lambda);
    const double mod2 = 1.0 - 2.0 * r * std::cos(omega) + r * r;
    return sigma2 / (2.0 * std::numbers::pi) * std::pow(mod2, -d);
}

struct Periodogram {
    std::vector<double> frequencies;  // omega_j = 2 pi j / n, j = 1..floor((n-1)/2)
    std::vector<double> values;       // I(omega_j)
    std::size_t n = 0;
    bool degenerate = false;          // constant input: all ordinates zero
};

/// I(omega_j) = |sum_k z_k exp(-i omega_j k)|^2 / (2 pi n) of the mean-removed series.
inline Periodogram periodogram(std::span<const double> series) {
    const std::size_t n = series.size();
    detail::require(n >= 4, "periodogram needs at least 4 observations");
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    std::vector<double> z(series.begin(), series.end());
    for (double& v : z) v -= mean;

    Periodogram pg;
    pg.n = n;
    const std::size_t m = (n - 1) / 2;
    pg.frequencies.resize(m);
    pg.values.resize(m);
    const auto spectrum = fft::rdft(z);
    const double scale = 1.0 / (2.0 * std::numbers::pi * static_cast<double>(n));
    double total = 0.0;
    for (std::size_t j = 1; j <= m; ++j) {
        pg.frequencies[j - 1] = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
        pg.values[j - 1] = std::norm(spectrum[j]) * scale;
        total += pg.values[j - 1];
    }
    const double energy = std::inner_product(z.begin(), z.end(), z.begin(), 0.0);
    pg.degenerate = energy == 0.0 || total <= 1e-28 * energy;
    if (pg.degenerate) std::fill(pg.values.begin(), pg.values.end(), 0.0);
    return pg;
}

struct WhittleValue {
    double objective = 0.0;
    double sigma2 = 0.0;
    /// lambda = 0 with d >= 1/2: finite at Fourier frequencies but outside
    /// the stationary long-memory range.
    bool outside_stationarity = false;
};

namespace detail {

// ln |1 - exp(-(lambda + i omega_j))|^2 for every Fourier frequency.
inline std::vector<double> log_transfer(double lambda, std::span<const double> freqs) {
    const double r = std::exp(-lambda);
    std::vector<double> out(freqs.size());
    for (std::size_t j = 0; j < freqs.size(); ++j) {
        out[j] = std::log(1.0 - 2.0 * r * std::cos(freqs[j]) + r * r);
    }
    return out;
}

inline WhittleValue whittle_from_log_transfer(double d, std::span<const double> log_mod2,
                                              std::span<const double> values) {
    // g_j = mod2_j^{-d}; W = ln mean(I/g) + mean ln g.
    const auto m = static_cast<double>(values.size());
    double ratio = 0.0;
    double log_g = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        const double lg = -d * log_mod2[j];
        ratio += values[j] * std::exp(-lg);
        log_g += lg;
    }
    ratio /= m;
    WhittleValue w;
    w.objective = std::log(ratio) + log_g / m;
    w.sigma2 = 2.0 * std::numbers::pi * ratio;
    return w;
}

}  // namespace detail

/// Profile Whittle objective W(d, lambda) with sigma2 concentrated out.
inline WhittleValue whittle_objective(double d, double lambda, const Periodogram& pg) {
    detail::require(!pg.degenerate, "periodogram of a constant series");
    detail::require(!pg.values.empty(), "empty periodogram");
    detail::require(std::isfinite(d) && lambda >= 0.0, "invalid (d, lambda)");
    const auto log_mod2 = detail::log_transfer(lambda, pg.frequencies);
    auto w = detail::whittle_from_log_transfer(d, log_mod2, pg.values);
    w.outside_stationarity = lambda == 0.0 && d >= 0.5;
    return w;
}

struct ProbePoint {
    double d;
    double lambda;
    double objective;
};

struct ArtfimaFit {
    double d_hat = 0.0;
    double lambda_hat = 0.0;
    double sigma2_hat = 0.0;
    double objective = 0.0;
    double mse = 0.0;
    bool tempered = true;
    bool boundary = false;            // optimum on the search box edge
    std::vector<ProbePoint> probes;   // coarse grid, for the local-search certificate
};

struct ArtfimaSearch {
    double d_lo = -1.0;
    double d_hi = 3.0;
    double d_step = 0.05;
    double lambda_lo = 1e-6;
    double lambda_hi = 2.0;
    std::size_t lambda_points = 20;
    double tolerance = 1e-6;
};

/// Mean squared one-step residual of the truncated AR(inf) inversion
/// e_t = sum_{j<=min(t, lags)} pi_j z_{t-j}, pi_j = exp(-lambda j) b_{-d}(j),
/// on the mean-removed series.
inline double one_step_mse(std::span<const double> series, double d, double lambda, std::size_t lags = 50) {
    const std::size_t n = series.size();
    detail::require(n >= 1, "empty series");
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    // b_{-d} via the recursion directly; -d may be a negative integer here.
    std::vector<double> pi(lags + 1);
    pi[0] = 1.0;
    const double decay = std::exp(-lambda);
    for (std::size_t j = 1; j <= lags; ++j) {
        const auto jd = static_cast<double>(j);
        pi[j] = pi[j - 1] * (jd - 1.0 - d) / jd * decay;
    }
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double e = 0.0;
        const std::size_t top = std::min(t, lags);
        for (std::size_t j = 0; j <= top; ++j) {
            e += pi[j] * (series[t - j] - mean);
        }
        acc += e * e;
    }
    return acc / static_cast<double>(n);
}

namespace detail {

inline void check_fit_input(std::span<const double> series) {
    require(series.size() >= 32, "Whittle fitting needs at least 32 observations");
    for (double v : series) {
        require(std::isfinite(v), "series contains non-finite values");
    }
}

}  // namespace detail

/// Whittle fit of ARTFIMA(0, d, lambda, 0): coarse (d, log lambda) grid,
/// then Nelder-Mead refinement from the best grid point.
inline ArtfimaFit fit_artfima00(std::span<const double> series, const ArtfimaSearch& search = {}) {
    detail::check_fit_input(series);
    const auto pg = periodogram(series);
    if (pg.degenerate) throw ValidationError("degenerate (constant) series");

    ArtfimaFit fit;
    fit.tempered = true;
    const double log_lo = std::log(search.lambda_lo);
    const double log_hi = std::log(search.lambda_hi);
    const auto d_count = static_cast<std::size_t>(std::llround((search.d_hi - search.d_lo) / search.d_step)) + 1;
    ProbePoint best{0.0, 0.0, std::numeric_limits<double>::infinity()};
    for (std::size_t li = 0; li < search.lambda_points; ++li) {
        const double t = search.lambda_points == 1 ? 0.0
                                                   : static_cast<double>(li) / static_cast<double>(search.lambda_points - 1);
        const double lambda = std::exp(log_lo + t * (log_hi - log_lo));
        const auto log_mod2 = detail::log_transfer(lambda, pg.frequencies);
        for (std::size_t di = 0; di < d_count; ++di) {
            const double d = search.d_lo + search.d_step * static_cast<double>(di);
            const double w = detail::whittle_from_log_transfer(d, log_mod2, pg.values).objective;
            fit.probes.push_back({d, lambda, w});
            if (w < best.objective) best = {d, lambda, w};
        }
    }

    optimize::Bounds box{{search.d_lo, log_lo}, {search.d_hi, log_hi}};
    optimize::Options opts;
    opts.f_tol = search.tolerance * 1e-3;
    opts.x_tol = 1e-7;
    opts.initial_step = 0.05;
    auto objective = [&](const std::vector<double>& p) {
        const auto log_mod2 = detail::log_transfer(std::exp(p[1]), pg.frequencies);
        return detail::whittle_from_log_transfer(p[0], log_mod2, pg.values).objective;
    };
    std::vector<double> start{best.d, std::log(best.lambda)};
    auto refined = optimize::nelder_mead(objective, start, box, opts);
    if (refined.value > best.objective) {
        refined.x = start;
        refined.value = best.objective;
    }
    fit.d_hat = refined.x[0];
    fit.lambda_hat = std::exp(refined.x[1]);
    const auto w = whittle_objective(fit.d_hat, fit.lambda_hat, pg);
    fit.objective = std::min(w.objective, refined.value);
    fit.sigma2_hat = w.sigma2;
    fit.boundary = box.on_boundary(refined.x, 1e-6);
    fit.mse = one_step_mse(series, fit.d_hat, fit.lambda_hat);
    return fit;
}

/// Whittle fit of ARFIMA(0, d, 0): lambda = 0, d in (-1/2, 1/2).
inline ArtfimaFit fit_arfima00(std::span<const double> series, double step = 0.05) {
    detail::check_fit_input(series);
    const auto pg = periodogram(series);
    if (pg.degenerate) throw ValidationError("degenerate (constant) series");

    constexpr double kEdge = 0.4999;
    ArtfimaFit fit;
    fit.tempered = false;
    const auto log_mod2 = detail::log_transfer(0.0, pg.frequencies);
    ProbePoint best{0.0, 0.0, std::numeric_limits<double>::infinity()};
    for (double d = -kEdge; d <= kEdge + 1e-12; d += step) {
        const double w = detail::whittle_from_log_transfer(d, log_mod2, pg.values).objective;
        fit.probes.push_back({d, 0.0, w});
        if (w < best.objective) best = {d, 0.0, w};
    }
    optimize::Bounds box{{-kEdge}, {kEdge}};
    optimize::Options opts;
    opts.f_tol = 1e-9;
    opts.x_tol = 1e-7;
    opts.initial_step = 0.02;
    auto objective = [&](const std::vector<double>& p) {
        return detail::whittle_from_log_transfer(p[0], log_mod2, pg.values).objective;
    };
    auto refined = optimize::nelder_mead(objective, {best.d}, box, opts);
    if (refined.value > best.objective) {
        refined.x = {best.d};
        refined.value = best.objective;
    }
    fit.d_hat = refined.x[0];
    fit.lambda_hat = 0.0;
    const auto w = detail::whittle_from_log_transfer(fit.d_hat, log_mod2, pg.values);
    fit.objective = std::min(w.objective, refined.value);
    fit.sigma2_hat = w.sigma2;
    fit.boundary = box.on_boundary(refined.x, 1e-4);
    fit.mse = one_step_mse(series, fit.d_hat, 0.0);
    return fit;
}

/// ARTFIMA(0, d, lambda, 0) sample path of length n driven by unit normals.
inline std::vector<double> simulate_artfima00(double d, double lambda, std::size_t n, std::uint64_t seed) {
    detail::require(lambda > 0.0, "ARTFIMA simulation needs lambda > 0");
    const std::size_t lags = default_truncation(MemoryKind::SemiLongMemory, lambda, 1U << 30, 0);
    const auto coeffs = tempered_coeffs(d, lambda, lags);
    NoiseConfig noise;
    noise.seed = seed;
    const auto innov = simulate_innovations(n + lags, noise);
    return tempered_shocks(coeffs, innov.xi, n);
}

}  // namespace slmreg
