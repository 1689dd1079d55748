#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace slmreg::fft {

namespace detail {

// FFTW planning is not thread-safe; execution of distinct plans is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const noexcept {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct FreeDeleter {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
template <class T>
using Buffer = std::unique_ptr<T[], FreeDeleter>;

template <class T>
Buffer<T> allocate(std::size_t n) {
    return Buffer<T>(static_cast<T*>(fftw_malloc(sizeof(T) * (n == 0 ? 1 : n))));
}

inline std::size_t next_fast_size(std::size_t n) {
    std::size_t best = 1;
    while (best < n) {
        best <<= 1;
    }
    // 2^a * 3^b * 5^c sizes are all fast in FFTW; search for a tighter one.
    for (std::size_t a = 1; a <= best; a *= 2) {
        for (std::size_t b = a; b <= best; b *= 3) {
            for (std::size_t c = b; c <= best; c *= 5) {
                if (c >= n && c < best) {
                    best = c;
                }
            }
        }
    }
    return best;
}

}  // namespace detail

/// Forward real-to-complex DFT: out[j] = sum_k in[k] exp(-2 pi i j k / n), j = 0..n/2.
inline std::vector<std::complex<double>> rdft(std::span<const double> input) {
    const std::size_t n = input.size();
    auto in = detail::allocate<double>(n);
    auto out = detail::allocate<fftw_complex>(n / 2 + 1);
    detail::Plan plan;
    {
        std::lock_guard lock(detail::planner_mutex());
        plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
    }
    std::copy(input.begin(), input.end(), in.get());
    fftw_execute(plan.get());
    std::vector<std::complex<double>> result(n / 2 + 1);
    for (std::size_t j = 0; j < result.size(); ++j) {
        result[j] = {out[j][0], out[j][1]};
    }
    return result;
}

/// Below this many multiply-adds the direct sum beats the transform.
inline constexpr std::size_t direct_convolution_limit = 1U << 15;

/// Full linear convolution of a and b (length a.size() + b.size() - 1).
inline std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        return {};
    }
    const std::size_t out_len = a.size() + b.size() - 1;
    if (a.size() * b.size() <= direct_convolution_limit) {
        std::vector<double> result(out_len, 0.0);
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t j = 0; j < b.size(); ++j) {
                result[i + j] += a[i] * b[j];
            }
        }
        return result;
    }
    const std::size_t n = detail::next_fast_size(out_len);
    const std::size_t nc = n / 2 + 1;

    auto ra = detail::allocate<double>(n);
    auto rb = detail::allocate<double>(n);
    auto ca = detail::allocate<fftw_complex>(nc);
    auto cb = detail::allocate<fftw_complex>(nc);
    detail::Plan fa;
    detail::Plan fb;
    detail::Plan inv;
    {
        std::lock_guard lock(detail::planner_mutex());
        fa.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), ra.get(), ca.get(), FFTW_ESTIMATE));
        fb.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), rb.get(), cb.get(), FFTW_ESTIMATE));
        inv.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n), ca.get(), ra.get(), FFTW_ESTIMATE));
    }
    std::fill_n(ra.get(), n, 0.0);
    std::fill_n(rb.get(), n, 0.0);
    std::copy(a.begin(), a.end(), ra.get());
    std::copy(b.begin(), b.end(), rb.get());
    fftw_execute(fa.get());
    fftw_execute(fb.get());
    for (std::size_t j = 0; j < nc; ++j) {
        const double re = ca[j][0] * cb[j][0] - ca[j][1] * cb[j][1];
        const double im = ca[j][0] * cb[j][1] + ca[j][1] * cb[j][0];
        ca[j][0] = re;
        ca[j][1] = im;
    }
    fftw_execute(inv.get());
    std::vector<double> result(out_len);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < out_len; ++i) {
        result[i] = ra[i] * scale;
    }
    return result;
}

}  // namespace slmreg::fft
