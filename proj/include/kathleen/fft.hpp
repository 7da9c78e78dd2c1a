#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <mutex>
#include <vector>

#include "kathleen/common.hpp"

namespace kathleen::fftcore {

using cd = std::complex<double>;

inline bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Twiddle tables per length, shared across calls.
inline const std::vector<cd>& twiddles(size_t n, bool inverse) {
    static std::map<std::pair<size_t, bool>, std::vector<cd>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(n, inverse);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<cd> tw(n / 2);
    const double sgn = inverse ? 1.0 : -1.0;
    for (size_t k = 0; k < n / 2; ++k) {
        double ang = sgn * 2.0 * 3.14159265358979323846 * static_cast<double>(k) / static_cast<double>(n);
        tw[k] = cd(std::cos(ang), std::sin(ang));
    }
    return cache.emplace(key, std::move(tw)).first->second;
}

// In-place iterative radix-2 Cooley-Tukey. Unnormalized in both directions:
// forward uses e^{-i2pi kt/n}, inverse e^{+i2pi kt/n}.
inline void cfft_pow2(std::vector<cd>& a, bool inverse) {
    const size_t n = a.size();
    if (n <= 1) return;
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const auto& tw = twiddles(n, inverse);
    for (size_t len = 2; len <= n; len <<= 1) {
        size_t step = n / len;
        for (size_t i = 0; i < n; i += len) {
            for (size_t k = 0; k < len / 2; ++k) {
                cd u = a[i + k];
                cd v = a[i + k + len / 2] * tw[k * step];
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

// Bluestein chirp-z transform for arbitrary n, built on the pow2 kernel.
// Chirp phases are reduced mod 2n before the trig call to keep accuracy.
inline void cfft_bluestein(std::vector<cd>& a, bool inverse) {
    const size_t n = a.size();
    if (n <= 1) return;
    size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;

    const double sgn = inverse ? 1.0 : -1.0;
    std::vector<cd> chirp(n);
    for (size_t k = 0; k < n; ++k) {
        // k^2 mod 2n avoids catastrophic argument growth
        uint64_t k2 = (static_cast<uint64_t>(k) * k) % (2 * n);
        double ang = sgn * 3.14159265358979323846 * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = cd(std::cos(ang), std::sin(ang));
    }

    std::vector<cd> x(m, cd(0, 0)), y(m, cd(0, 0));
    for (size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
    y[0] = std::conj(chirp[0]);
    for (size_t k = 1; k < n; ++k) y[k] = y[m - k] = std::conj(chirp[k]);

    cfft_pow2(x, false);
    cfft_pow2(y, false);
    for (size_t k = 0; k < m; ++k) x[k] *= y[k];
    cfft_pow2(x, true);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (size_t k = 0; k < n; ++k) a[k] = x[k] * inv_m * chirp[k];
}

inline void cfft(std::vector<cd>& a, bool inverse) {
    if (is_pow2(a.size())) {
        cfft_pow2(a, inverse);
    } else {
        cfft_bluestein(a, inverse);
    }
}

inline int64_t rfft_bins(int64_t n) { return n / 2 + 1; }

// One-sided real FFT of a single line: out_re/out_im get n/2+1 bins of
// sum_t x_t e^{-i2pi kt/n} (unnormalized, DC bin = sum).
template <class S>
void rfft_line(const S* x, int64_t n, int64_t stride, double* out_re, double* out_im) {
    std::vector<cd> buf(static_cast<size_t>(n));
    for (int64_t t = 0; t < n; ++t) buf[static_cast<size_t>(t)] = cd(static_cast<double>(x[t * stride]), 0.0);
    cfft(buf, false);
    const int64_t nb = rfft_bins(n);
    for (int64_t k = 0; k < nb; ++k) {
        out_re[k] = buf[static_cast<size_t>(k)].real();
        out_im[k] = buf[static_cast<size_t>(k)].imag();
    }
}

// Inverse of rfft_line: Hermitian-extends the one-sided spectrum, applies the
// unnormalized inverse transform, divides by n, keeps the real part.
// scale lets adjoints reuse the kernel; unnorm skips the 1/n.
inline void irfft_line_core(const double* re, const double* im, int64_t n, double* out,
                            bool unnorm = false) {
    std::vector<cd> buf(static_cast<size_t>(n));
    const int64_t nb = rfft_bins(n);
    for (int64_t k = 0; k < nb; ++k) buf[static_cast<size_t>(k)] = cd(re[k], im[k]);
    for (int64_t k = nb; k < n; ++k) buf[static_cast<size_t>(k)] = std::conj(buf[static_cast<size_t>(n - k)]);
    cfft(buf, true);
    const double norm = unnorm ? 1.0 : 1.0 / static_cast<double>(n);
    for (int64_t t = 0; t < n; ++t) out[t] = buf[static_cast<size_t>(t)].real() * norm;
}

// Adjoint of rfft_line as a map R^n -> R^{2nb}: given spectrum cotangents,
// produce grad_x_t = sum_k gre_k cos(2pi kt/n) - gim_k sin(2pi kt/n).
inline void rfft_adjoint_line(const double* gre, const double* gim, int64_t n, double* out) {
    std::vector<cd> buf(static_cast<size_t>(n), cd(0, 0));
    const int64_t nb = rfft_bins(n);
    for (int64_t k = 0; k < nb; ++k) buf[static_cast<size_t>(k)] = cd(gre[k], gim[k]);
    cfft(buf, true);  // unnormalized e^{+i...}
    for (int64_t t = 0; t < n; ++t) out[t] = buf[static_cast<size_t>(t)].real();
}

// ---------------------------------------------------------------------------
// plane transforms: one FFT over axis length n applied to `inner` contiguous
// lanes at once (structure-of-arrays re/im, row t at offset t*inner). All
// butterfly arithmetic is elementwise over the lane axis, so access stays
// contiguous and vectorizes; this is what makes the [B,L,d] sequence-axis
// FFT cache-friendly. Power of two only.
// ---------------------------------------------------------------------------

inline void plane_cfft_pow2(double* re, double* im, int64_t n, int64_t inner, bool inverse) {
    if (n <= 1) return;
    // bit-reversal row swaps
    for (int64_t i = 1, j = 0; i < n; ++i) {
        int64_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap_ranges(re + i * inner, re + (i + 1) * inner, re + j * inner);
            std::swap_ranges(im + i * inner, im + (i + 1) * inner, im + j * inner);
        }
    }
    const auto& tw = twiddles(static_cast<size_t>(n), inverse);
    for (int64_t len = 2; len <= n; len <<= 1) {
        const int64_t step = n / len;
        for (int64_t i = 0; i < n; i += len) {
            for (int64_t k = 0; k < len / 2; ++k) {
                const double wr = tw[static_cast<size_t>(k * step)].real();
                const double wi = tw[static_cast<size_t>(k * step)].imag();
                double* ur = re + (i + k) * inner;
                double* ui = im + (i + k) * inner;
                double* vr = re + (i + k + len / 2) * inner;
                double* vi = im + (i + k + len / 2) * inner;
                for (int64_t c = 0; c < inner; ++c) {
                    const double tr = vr[c] * wr - vi[c] * wi;
                    const double ti = vr[c] * wi + vi[c] * wr;
                    vr[c] = ur[c] - tr;
                    vi[c] = ui[c] - ti;
                    ur[c] += tr;
                    ui[c] += ti;
                }
            }
        }
    }
}

}  // namespace kathleen::fftcore
