#pragma once

#include "slmreg/error.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

namespace slmreg {

enum class KernelKind { Epanechnikov, Gaussian };

inline std::string_view to_string(KernelKind kind) {
    return kind == KernelKind::Epanechnikov ? "epanechnikov" : "gaussian";
}

inline KernelKind parse_kernel_kind(std::string_view text) {
    if (text == "epanechnikov" || text == "epa") return KernelKind::Epanechnikov;
    if (text == "gaussian" || text == "normal") return KernelKind::Gaussian;
    throw ValidationError("unknown kernel '" + std::string(text) + "' (expected epanechnikov|gaussian)");
}

struct KernelMoments {
    double d1;  // integral of K
    double k2;  // integral of K^2
};

/// Symmetric second-order smoothing kernel.
struct Kernel {
    KernelKind kind = KernelKind::Epanechnikov;

    double operator()(double u) const noexcept {
        if (kind == KernelKind::Epanechnikov) {
            return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
        }
        return std::numbers::inv_sqrtpi / std::numbers::sqrt2 * std::exp(-0.5 * u * u);
    }

    /// Half-width (in units of h) outside which K is zero, or negligible
    /// (Gaussian: exp(-24.5) ~ 2e-11 of the peak).
    double radius() const noexcept { return kind == KernelKind::Epanechnikov ? 1.0 : 7.0; }

    bool compact() const noexcept { return kind == KernelKind::Epanechnikov; }

    KernelMoments moments() const noexcept {
        if (kind == KernelKind::Epanechnikov) {
            // 0.5625 * integral_{-1}^{1} (1-u^2)^2 du = 0.5625 * 16/15
            return {1.0, 0.6};
        }
        return {1.0, 0.5 * std::numbers::inv_sqrtpi};
    }
};

inline double kernel_eval(const Kernel& kernel, double u) noexcept {
    return kernel(u);
}

inline KernelMoments kernel_moments(const Kernel& kernel) noexcept {
    return kernel.moments();
}

}  // namespace slmreg
