#pragma once

#include "slmreg/error.hpp"
#include "slmreg/fft.hpp"
#include "slmreg/rng.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace slmreg {

enum class MemoryKind { LongMemory, SemiLongMemory, ShortMemory };

inline std::string_view to_string(MemoryKind kind) {
    switch (kind) {
        case MemoryKind::LongMemory: return "lm";
        case MemoryKind::SemiLongMemory: return "slm";
        case MemoryKind::ShortMemory: return "short";
    }
    return "?";
}

inline MemoryKind parse_memory_kind(std::string_view text) {
    if (text == "lm" || text == "long") return MemoryKind::LongMemory;
    if (text == "slm" || text == "semi-long") return MemoryKind::SemiLongMemory;
    if (text == "short" || text == "sm") return MemoryKind::ShortMemory;
    throw ValidationError("unknown memory kind '" + std::string(text) + "' (expected lm|slm|short)");
}

/// Lag count beyond which tempered coefficients fall below `tol` relative to b_d(j).
inline constexpr double kTruncationTolerance = 1e-12;
inline constexpr std::size_t kDefaultBurnIn = 1000;

/// Default MA(inf) truncation J.
///
/// Long memory keeps a history as long as the sample plus burn-in. Tempered
/// coefficients decay like exp(-lambda j), so the semi-long sum is cut once
/// exp(-lambda J) < 1e-12 (plus a 50-lag floor). Short memory needs no history.
inline std::size_t default_truncation(MemoryKind kind, double lambda, std::size_t n,
                                      std::size_t burn_in) {
    switch (kind) {
        case MemoryKind::ShortMemory: return 0;
        case MemoryKind::LongMemory: return n + burn_in;
        case MemoryKind::SemiLongMemory: {
            detail::require(lambda > 0.0, "semi-long memory truncation needs lambda > 0");
            const double lags = std::ceil(-std::log(kTruncationTolerance) / lambda) + 50.0;
            const double cap = static_cast<double>(n + burn_in);
            return static_cast<std::size_t>(std::min(lags, cap));
        }
    }
    return n + burn_in;
}

/// Parameters of a shock/regressor process.
struct TemperedProcessSpec {
    double d = 0.0;
    double lambda = 0.0;
    std::size_t n = 0;
    MemoryKind memory = MemoryKind::ShortMemory;
    std::size_t truncation = 0;
    std::size_t burn_in = kDefaultBurnIn;

    /// Builds a spec with the default truncation for its memory kind.
    static TemperedProcessSpec make(MemoryKind memory, double d, double lambda, std::size_t n,
                                    std::size_t burn_in = kDefaultBurnIn) {
        TemperedProcessSpec spec{d, lambda, n, memory, 0, burn_in};
        spec.validate_parameters();
        spec.truncation = default_truncation(memory, lambda, n, burn_in);
        return spec;
    }

    void validate() const {
        validate_parameters();
    }

private:
    void validate_parameters() const {
        detail::require(std::isfinite(d) && std::isfinite(lambda), "d and lambda must be finite");
        detail::require(n >= 1, "sample size n must be at least 1");
        switch (memory) {
            case MemoryKind::LongMemory:
                detail::require(d > 0.0 && d < 0.5, "long memory requires 0 < d < 1/2");
                detail::require(lambda == 0.0, "long memory requires lambda = 0");
                break;
            case MemoryKind::SemiLongMemory:
                detail::require(d > 0.0, "semi-long memory requires d > 0");
                detail::require(lambda > 0.0, "semi-long memory requires lambda > 0");
                break;
            case MemoryKind::ShortMemory:
                detail::require(d == 0.0, "short memory requires d = 0");
                break;
        }
    }
};

/// Error-process parameters. Innovations (xi, eps) have unit variances and
/// correlation rho; the error follows u_k = psi u_{k-1} + eps_k scaled by sigma.
struct NoiseConfig {
    double rho = 0.0;
    double psi = 0.0;
    double sigma = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        detail::require(std::isfinite(rho) && std::abs(rho) <= 1.0, "rho must lie in [-1, 1]");
        detail::require(std::isfinite(psi) && std::abs(psi) < 1.0, "AR(1) coefficient psi must satisfy |psi| < 1");
        detail::require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be non-negative");
    }
};

/// Fractional coefficients b_d(j) = Gamma(j+d) / (Gamma(d) Gamma(j+1)), j = 0..lags.
inline std::vector<double> frac_coeffs(double d, std::size_t lags) {
    detail::require(std::isfinite(d), "d must be finite");
    detail::require(!(d < 0.0 && d == std::floor(d)),
                    "d must not be a negative integer (pole of Gamma(d))");
    std::vector<double> b(lags + 1);
    b[0] = 1.0;
    for (std::size_t j = 1; j <= lags; ++j) {
        const auto jd = static_cast<double>(j);
        b[j] = b[j - 1] * (jd - 1.0 + d) / jd;
    }
    return b;
}

/// Tempered coefficients exp(-lambda j) b_d(j), j = 0..lags.
inline std::vector<double> tempered_coeffs(double d, double lambda, std::size_t lags) {
    detail::require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be >= 0");
    auto phi = frac_coeffs(d, lags);
    if (lambda > 0.0) {
        const double decay = std::exp(-lambda);
        double damp = 1.0;
        for (std::size_t j = 1; j <= lags; ++j) {
            damp *= decay;
            phi[j] *= damp;
        }
    }
    return phi;
}

struct Innovations {
    std::vector<double> xi;
    std::vector<double> eps;
};

/// Draws n_total pairs (xi_k, eps_k) of standard normals with corr(xi, eps) = rho.
///
/// Pairs are drawn newest-first: the last entry of each series is the first
/// draw. Two calls with the same seed and different lengths therefore agree on
/// their common trailing window, which keeps the sample period identical across
/// truncation choices.
inline Innovations simulate_innovations(std::size_t n_total, const NoiseConfig& noise) {
    detail::require(n_total >= 1, "innovation length must be at least 1");
    detail::require(std::isfinite(noise.rho) && std::abs(noise.rho) <= 1.0,
                    "rho must lie in [-1, 1]");
    Engine engine(noise.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double tail = std::sqrt(1.0 - noise.rho * noise.rho);
    Innovations out{std::vector<double>(n_total), std::vector<double>(n_total)};
    for (std::size_t i = n_total; i-- > 0;) {
        const double z1 = normal(engine);
        const double z2 = normal(engine);
        out.xi[i] = z1;
        out.eps[i] = noise.rho * z1 + tail * z2;
    }
    return out;
}

/// Shocks X(s) = sum_{j=0..J} phi(j) xi(s-j) for the final n times of `xi`.
/// `xi` is chronological; its last n entries are times 1..n.
inline std::vector<double> tempered_shocks(std::span<const double> coeffs, std::span<const double> xi,
                                           std::size_t n) {
    detail::require(!coeffs.empty(), "coefficient sequence must be non-empty");
    const std::size_t lags = coeffs.size() - 1;
    detail::require(xi.size() >= n + lags, "innovation series too short for the requested truncation");
    const auto window = xi.subspan(xi.size() - n - lags);
    const auto full = fft::convolve(coeffs, window);
    return {full.begin() + static_cast<std::ptrdiff_t>(lags),
            full.begin() + static_cast<std::ptrdiff_t>(lags + n)};
}

/// Regressor x_k = sum_{s<=k} X(s), k = 1..n.
inline std::vector<double> simulate_regressor(const TemperedProcessSpec& spec, std::span<const double> xi) {
    spec.validate();
    detail::require(xi.size() >= spec.n + spec.burn_in + spec.truncation,
                    "innovation series shorter than n + burn_in + truncation");
    const double lambda = spec.memory == MemoryKind::SemiLongMemory ? spec.lambda : 0.0;
    const auto phi = tempered_coeffs(spec.d, lambda, spec.truncation);
    auto x = tempered_shocks(phi, xi, spec.n);
    double acc = 0.0;
    for (double& v : x) {
        acc += v;
        v = acc;
    }
    return x;
}

/// AR(1) recursion u_k = psi u_{k-1} + eps_k from u = 0 over all of `eps`;
/// returns the last n_out values (the leading part acts as burn-in).
inline std::vector<double> simulate_error_ar1(std::span<const double> eps, double psi, std::size_t n_out) {
    detail::require(std::isfinite(psi) && std::abs(psi) < 1.0, "AR(1) coefficient must satisfy |psi| < 1");
    detail::require(eps.size() >= n_out, "error innovations shorter than the requested output");
    std::vector<double> u(n_out);
    const std::size_t skip = eps.size() - n_out;
    double state = 0.0;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        state = psi * state + eps[k];
        if (k >= skip) {
            u[k - skip] = state;
        }
    }
    return u;
}

/// Partial sum of sum_{j>=1} (-1)^{j+1} sin(j pi x) / j^2.
///
/// Uses the Chebyshev recurrence for sin(j theta), resynchronised from
/// std::sin/std::cos every 64 terms to bound round-off growth.
inline double regression_function_sine(double x, std::size_t terms) {
    detail::require(terms >= 1, "terms must be at least 1");
    // Every term has period 2 in x.
    double r = std::fmod(x, 2.0);
    if (r >= 1.0) r -= 2.0;
    if (r < -1.0) r += 2.0;
    const double theta = std::numbers::pi * r;
    const double two_cos = 2.0 * std::cos(theta);
    constexpr std::size_t kResync = 64;

    double sum = 0.0;
    double s_prev = 0.0;  // sin((j-1) theta)
    double s_cur = 0.0;   // sin(j theta)
    for (std::size_t j = 1; j <= terms; ++j) {
        if ((j - 1) % kResync == 0) {
            const auto jd = static_cast<double>(j);
            s_cur = std::sin(jd * theta);
            s_prev = std::sin((jd - 1.0) * theta);
        } else {
            const double next = two_cos * s_cur - s_prev;
            s_prev = s_cur;
            s_cur = next;
        }
        const auto jd = static_cast<double>(j);
        const double term = s_cur / (jd * jd);
        sum += (j % 2 == 1) ? term : -term;
    }
    return sum;
}

/// A named scalar regression function f(x).
struct RegressionFunction {
    std::string name;
    std::function<double(double)> eval;

    double operator()(double x) const { return eval(x); }
};

inline constexpr std::size_t kDefaultSineTerms = 1000;

inline RegressionFunction sine_series_function(std::size_t terms = kDefaultSineTerms) {
    return {"sine:" + std::to_string(terms), [terms](double x) { return regression_function_sine(x, terms); }};
}

inline RegressionFunction zero_function() {
    return {"zero", [](double) { return 0.0; }};
}

inline RegressionFunction polynomial_function(std::vector<double> coeffs) {
    std::string name = "poly";
    for (double c : coeffs) {
        name += ":" + std::to_string(c);
    }
    return {name, [c = std::move(coeffs)](double x) {
                double acc = 0.0;
                for (std::size_t i = c.size(); i-- > 0;) {
                    acc = acc * x + c[i];
                }
                return acc;
            }};
}

/// One draw (x, u, y) of y_k = f(x_k) + sigma u_k.
struct SimulatedPath {
    std::vector<double> x;
    std::vector<double> u;
    std::vector<double> y;
    TemperedProcessSpec spec;
    NoiseConfig noise;
    std::string function_name;
};

inline SimulatedPath simulate_model(const TemperedProcessSpec& spec, const NoiseConfig& noise,
                                    const RegressionFunction& f) {
    spec.validate();
    noise.validate();
    const std::size_t n_total = spec.n + spec.burn_in + spec.truncation;
    const auto innovations = simulate_innovations(n_total, noise);

    SimulatedPath path;
    path.spec = spec;
    path.noise = noise;
    path.function_name = f.name;
    path.x = simulate_regressor(spec, innovations.xi);
    // Error innovations cover times -burn_in+1..n, aligned with xi.
    const auto eps = std::span<const double>(innovations.eps).last(spec.n + spec.burn_in);
    path.u = simulate_error_ar1(eps, noise.psi, spec.n);
    path.y.resize(spec.n);
    for (std::size_t k = 0; k < spec.n; ++k) {
        path.y[k] = f(path.x[k]) + noise.sigma * path.u[k];
    }
    return path;
}

/// Normalisation d_N of the partial sum x_N.
inline double scale_dN(std::size_t n, double lambda, double d, MemoryKind kind) {
    detail::require(n >= 1, "n must be at least 1");
    const auto nd = static_cast<double>(n);
    switch (kind) {
        case MemoryKind::SemiLongMemory:
            detail::require(lambda > 0.0, "semi-long memory normalisation requires lambda > 0");
            return std::sqrt(nd) / std::pow(lambda, d);
        case MemoryKind::LongMemory:
            detail::require(d > 0.0 && d < 0.5, "long memory normalisation requires 0 < d < 1/2");
            return std::pow(nd, d + 0.5);
        case MemoryKind::ShortMemory:
            return std::sqrt(nd);
    }
    return std::sqrt(nd);
}

}  // namespace slmreg
