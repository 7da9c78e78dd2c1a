#pragma once

#include <vector>

#include "kathleen/ops.hpp"

namespace kathleen {

/// Depthwise 1-d convolution over [B,L,d] with per-channel kernels [d,K],
/// K odd, same-length output via symmetric zero padding. Channel c of the
/// output depends only on channel c of the input.
template <std::floating_point S>
TensorT<S> depthwise_conv1d(const TensorT<S>& x, const TensorT<S>& kernels) {
    if (x.rank() != 3 || kernels.rank() != 2 || kernels.dim(0) != x.dim(2)) {
        shape_fail("depthwise_conv1d", x.shape(), kernels.shape());
    }
    const int64_t bsz = x.dim(0), len = x.dim(1), d = x.dim(2), ksz = kernels.dim(1);
    if (ksz % 2 == 0) throw ConfigError("depthwise_conv1d: kernel size must be odd, got " + std::to_string(ksz));
    const int64_t pad = ksz / 2;
    auto y = TensorT<S>::zeros(x.shape());
    const auto& xv = x.data();
    const auto& kv = kernels.data();
    auto& yv = y.data();
    parallel_for(bsz, 1, [&](int64_t blo, int64_t bhi) {
        for (int64_t b = blo; b < bhi; ++b) {
            for (int64_t l = 0; l < len; ++l) {
                S* out = yv.data() + (b * len + l) * d;
                for (int64_t j = 0; j < ksz; ++j) {
                    int64_t src = l + j - pad;
                    if (src < 0 || src >= len) continue;
                    const S* in = xv.data() + (b * len + src) * d;
                    const S* kj = kv.data();  // kernels[c, j]
                    for (int64_t c = 0; c < d; ++c) out[c] += kj[c * ksz + j] * in[c];
                }
            }
        }
    });
    check_finite(yv, "depthwise_conv1d");

    if (grad_needed<S>({&x, &kernels})) {
        y.set_requires_grad(true);
        auto xi = x.impl(), ki = kernels.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, ki, yi, bsz, len, d, ksz, pad] {
            if (yi->grad.empty()) return;
            const auto& g = yi->grad;
            if (xi->requires_grad) {
                xi->ensure_grad();
                parallel_for(bsz, 1, [&](int64_t blo, int64_t bhi) {
                    for (int64_t b = blo; b < bhi; ++b) {
                        for (int64_t l = 0; l < len; ++l) {
                            const S* gr = g.data() + (b * len + l) * d;
                            for (int64_t j = 0; j < ksz; ++j) {
                                int64_t src = l + j - pad;
                                if (src < 0 || src >= len) continue;
                                S* gx = xi->grad.data() + (b * len + src) * d;
                                const S* kj = ki->value.data();
                                for (int64_t c = 0; c < d; ++c) gx[c] += kj[c * ksz + j] * gr[c];
                            }
                        }
                    }
                });
            }
            if (ki->requires_grad) {
                ki->ensure_grad();
                for (int64_t b = 0; b < bsz; ++b) {
                    for (int64_t l = 0; l < len; ++l) {
                        const S* gr = g.data() + (b * len + l) * d;
                        for (int64_t j = 0; j < ksz; ++j) {
                            int64_t src = l + j - pad;
                            if (src < 0 || src >= len) continue;
                            const S* in = xi->value.data() + (b * len + src) * d;
                            S* gk = ki->grad.data();
                            for (int64_t c = 0; c < d; ++c) gk[c * ksz + j] += gr[c] * in[c];
                        }
                    }
                }
            }
        });
    }
    return y;
}

/// Causal filter-bank convolution with per-(channel,filter) mixing:
///   y[b,l,c] = sum_f mix[c,f] * sum_t kernels[f,t] * x[b,l-t,c]
/// Every filter slides over every channel; the mix projects the bank back
/// to width d.
template <std::floating_point S>
TensorT<S> causal_bank_conv(const TensorT<S>& x, const TensorT<S>& kernels, const TensorT<S>& mix) {
    if (x.rank() != 3 || kernels.rank() != 2 || mix.rank() != 2 || mix.dim(0) != x.dim(2) ||
        mix.dim(1) != kernels.dim(0)) {
        shape_fail("causal_bank_conv", x.shape(), mix.shape());
    }
    const int64_t bsz = x.dim(0), len = x.dim(1), d = x.dim(2);
    const int64_t nf = kernels.dim(0), taps = kernels.dim(1);
    auto y = TensorT<S>::zeros(x.shape());
    const auto& xv = x.data();
    const auto& kv = kernels.data();
    const auto& mv = mix.data();
    auto& yv = y.data();
    parallel_for(bsz, 1, [&](int64_t blo, int64_t bhi) {
        std::vector<S> conv(static_cast<size_t>(d));
        for (int64_t b = blo; b < bhi; ++b) {
            for (int64_t l = 0; l < len; ++l) {
                S* out = yv.data() + (b * len + l) * d;
                for (int64_t f = 0; f < nf; ++f) {
                    std::fill(conv.begin(), conv.end(), S(0));
                    const int64_t tmax = std::min(taps - 1, l);
                    for (int64_t t = 0; t <= tmax; ++t) {
                        const S kft = kv[static_cast<size_t>(f * taps + t)];
                        const S* in = xv.data() + (b * len + (l - t)) * d;
                        for (int64_t c = 0; c < d; ++c) conv[static_cast<size_t>(c)] += kft * in[c];
                    }
                    for (int64_t c = 0; c < d; ++c) out[c] += mv[static_cast<size_t>(c * nf + f)] * conv[static_cast<size_t>(c)];
                }
            }
        }
    });
    check_finite(yv, "causal_bank_conv");

    if (grad_needed<S>({&x, &kernels, &mix})) {
        y.set_requires_grad(true);
        auto xi = x.impl(), ki = kernels.impl(), mi = mix.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, ki, mi, yi, bsz, len, d, nf, taps] {
            if (yi->grad.empty()) return;
            const auto& g = yi->grad;
            const bool nx = xi->requires_grad, nk = ki->requires_grad, nm = mi->requires_grad;
            if (!nx && !nk && !nm) return;
            if (nx) xi->ensure_grad();
            if (nk) ki->ensure_grad();
            if (nm) mi->ensure_grad();

            // per-block partials for the small accumulators, merged in block
            // order so results do not depend on scheduling
            const int64_t nblocks = std::min<int64_t>(bsz, std::max(1u, std::thread::hardware_concurrency()));
            const int64_t bl = (bsz + nblocks - 1) / nblocks;
            std::vector<std::vector<S>> gk_part(static_cast<size_t>(nblocks)), gm_part(static_cast<size_t>(nblocks));
            parallel_for(nblocks, 1, [&](int64_t wlo, int64_t whi) {
                std::vector<S> gyf(static_cast<size_t>(d)), conv(static_cast<size_t>(d));
                for (int64_t w = wlo; w < whi; ++w) {
                    auto& gk = gk_part[static_cast<size_t>(w)];
                    auto& gm = gm_part[static_cast<size_t>(w)];
                    if (nk) gk.assign(static_cast<size_t>(nf * taps), S(0));
                    if (nm) gm.assign(static_cast<size_t>(d * nf), S(0));
                    for (int64_t b = w * bl; b < std::min(bsz, (w + 1) * bl); ++b) {
                        for (int64_t f = 0; f < nf; ++f) {
                            for (int64_t l = 0; l < len; ++l) {
                                const S* gr = g.data() + (b * len + l) * d;
                                const int64_t tmax = std::min(taps - 1, l);
                                if (nm) {
                                    // conv_f recomputed for grad of mix
                                    std::fill(conv.begin(), conv.end(), S(0));
                                    for (int64_t t = 0; t <= tmax; ++t) {
                                        const S kft = ki->value[static_cast<size_t>(f * taps + t)];
                                        const S* in = xi->value.data() + (b * len + (l - t)) * d;
                                        for (int64_t c = 0; c < d; ++c) conv[static_cast<size_t>(c)] += kft * in[c];
                                    }
                                    for (int64_t c = 0; c < d; ++c)
                                        gm[static_cast<size_t>(c * nf + f)] += gr[c] * conv[static_cast<size_t>(c)];
                                }
                                if (nx || nk) {
                                    for (int64_t c = 0; c < d; ++c)
                                        gyf[static_cast<size_t>(c)] = gr[c] * mi->value[static_cast<size_t>(c * nf + f)];
                                    for (int64_t t = 0; t <= tmax; ++t) {
                                        const S kft = ki->value[static_cast<size_t>(f * taps + t)];
                                        const S* in = xi->value.data() + (b * len + (l - t)) * d;
                                        S* gx = xi->grad.data() + (b * len + (l - t)) * d;
                                        S acc = 0;
                                        for (int64_t c = 0; c < d; ++c) {
                                            if (nx) gx[c] += kft * gyf[static_cast<size_t>(c)];
                                            acc += gyf[static_cast<size_t>(c)] * in[c];
                                        }
                                        if (nk) gk[static_cast<size_t>(f * taps + t)] += acc;
                                    }
                                }
                            }
                        }
                    }
                }
            });
            for (int64_t w = 0; w < nblocks; ++w) {
                if (nk)
                    for (size_t i = 0; i < gk_part[static_cast<size_t>(w)].size(); ++i)
                        ki->grad[i] += gk_part[static_cast<size_t>(w)][i];
                if (nm)
                    for (size_t i = 0; i < gm_part[static_cast<size_t>(w)].size(); ++i)
                        mi->grad[i] += gm_part[static_cast<size_t>(w)][i];
            }
        });
    }
    return y;
}

/// Depthwise separable convolution: depthwise k-tap stage then a pointwise
/// channel mix.
template <std::floating_point S>
TensorT<S> conv1d_depthwise_separable(const TensorT<S>& x, const TensorT<S>& kernels,
                                      const TensorT<S>& pointwise) {
    return matmul(depthwise_conv1d(x, kernels), pointwise);
}

}  // namespace kathleen
