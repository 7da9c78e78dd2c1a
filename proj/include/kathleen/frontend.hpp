#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "kathleen/channels.hpp"
#include "kathleen/data.hpp"
#include "kathleen/forward_ctx.hpp"
#include "kathleen/model_config.hpp"
#include "kathleen/ops.hpp"
#include "kathleen/ops_conv.hpp"

namespace kathleen {

// ---------------------------------------------------------------------------
// frame ops
// ---------------------------------------------------------------------------

/// Overlapping frames of width W, hop H over the sequence axis:
/// [B,L,d] -> [B,L',W,d] with L' = floor((max(L,W)-W)/H)+1. Inputs shorter
/// than W are zero-padded up to W.
template <std::floating_point S>
TensorT<S> sliding_frames(const TensorT<S>& x, int64_t W, int64_t H) {
    if (x.rank() != 3) throw ShapeError("sliding_frames: want [B,L,d], got " + shape_str(x.shape()));
    const int64_t bsz = x.dim(0), len = x.dim(1), d = x.dim(2);
    const int64_t eff = std::max(len, W);
    const int64_t nframes = (eff - W) / H + 1;
    auto y = TensorT<S>::zeros({bsz, nframes, W, d});
    const auto& xv = x.data();
    auto& yv = y.data();
    for (int64_t b = 0; b < bsz; ++b) {
        for (int64_t t = 0; t < nframes; ++t) {
            for (int64_t w = 0; w < W; ++w) {
                const int64_t src = t * H + w;
                if (src >= len) continue;
                std::memcpy(yv.data() + ((b * nframes + t) * W + w) * d, xv.data() + (b * len + src) * d,
                            static_cast<size_t>(d) * sizeof(S));
            }
        }
    }
    if (grad_needed<S>({&x})) {
        y.set_requires_grad(true);
        auto xi = x.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, yi, bsz, nframes, W, H, len, d] {
            if (yi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            for (int64_t b = 0; b < bsz; ++b) {
                for (int64_t t = 0; t < nframes; ++t) {
                    for (int64_t w = 0; w < W; ++w) {
                        const int64_t src = t * H + w;
                        if (src >= len) continue;
                        const S* g = yi->grad.data() + ((b * nframes + t) * W + w) * d;
                        S* gx = xi->grad.data() + (b * len + src) * d;
                        for (int64_t c = 0; c < d; ++c) gx[c] += g[c];
                    }
                }
            }
        });
    }
    return y;
}

/// Contracts the window axis against a fixed basis matrix:
/// [B,T,W,d] x dmat[M,W] -> [B,T,M,d]. The basis carries no gradient.
template <std::floating_point S>
TensorT<S> window_contract(const TensorT<S>& xf, const std::vector<S>& dmat, int64_t M) {
    if (xf.rank() != 4) throw ShapeError("window_contract: want [B,T,W,d], got " + shape_str(xf.shape()));
    const int64_t bsz = xf.dim(0), nt = xf.dim(1), W = xf.dim(2), d = xf.dim(3);
    if (static_cast<int64_t>(dmat.size()) != M * W) {
        throw ShapeError("window_contract: basis has " + std::to_string(dmat.size()) + " values, want " +
                         std::to_string(M * W));
    }
    auto y = TensorT<S>::zeros({bsz, nt, M, d});
    const auto& xv = xf.data();
    auto& yv = y.data();
    for (int64_t n = 0; n < bsz * nt; ++n) {
        for (int64_t m = 0; m < M; ++m) {
            S* out = yv.data() + (n * M + m) * d;
            for (int64_t w = 0; w < W; ++w) {
                const S c = dmat[static_cast<size_t>(m * W + w)];
                const S* in = xv.data() + (n * W + w) * d;
                for (int64_t i = 0; i < d; ++i) out[i] += c * in[i];
            }
        }
    }
    check_finite(yv, "window_contract");
    if (grad_needed<S>({&xf})) {
        y.set_requires_grad(true);
        auto xi = xf.impl(), yi = y.impl();
        TapeT<S>::active()->record([xi, yi, dmat, bsz, nt, M, W, d] {
            if (yi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            for (int64_t n = 0; n < bsz * nt; ++n) {
                for (int64_t m = 0; m < M; ++m) {
                    const S* g = yi->grad.data() + (n * M + m) * d;
                    for (int64_t w = 0; w < W; ++w) {
                        const S c = dmat[static_cast<size_t>(m * W + w)];
                        S* gx = xi->grad.data() + (n * W + w) * d;
                        for (int64_t i = 0; i < d; ++i) gx[i] += c * g[i];
                    }
                }
            }
        });
    }
    return y;
}

/// Multiplies a one-sided spectrum [B,nb,d] by the linear phase ramp
/// e^{-i k delta} (k = bin index): the Fourier-domain form of a fractional
/// circular shift by delta * n / 2pi samples. delta is a learnable scalar.
template <std::floating_point S>
ComplexPairT<S> phase_ramp_mul(const TensorT<S>& re, const TensorT<S>& im, const TensorT<S>& delta) {
    if (re.rank() != 3 || re.shape() != im.shape()) shape_fail("phase_ramp_mul", re.shape(), im.shape());
    if (delta.numel() != 1) throw ShapeError("phase_ramp_mul: delta must be scalar");
    const int64_t bsz = re.dim(0), nb = re.dim(1), d = re.dim(2);
    const double dv = static_cast<double>(delta.data()[0]);
    std::vector<S> cosr(static_cast<size_t>(nb)), sinr(static_cast<size_t>(nb));
    for (int64_t k = 0; k < nb; ++k) {
        cosr[static_cast<size_t>(k)] = static_cast<S>(std::cos(static_cast<double>(k) * dv));
        sinr[static_cast<size_t>(k)] = static_cast<S>(std::sin(static_cast<double>(k) * dv));
    }
    auto yre = TensorT<S>::zeros(re.shape());
    auto yim = TensorT<S>::zeros(re.shape());
    const auto& rv = re.data();
    const auto& iv = im.data();
    auto& orv = yre.data();
    auto& oiv = yim.data();
    for (int64_t o = 0; o < bsz * nb; ++o) {
        const S c = cosr[static_cast<size_t>(o % nb)], s = sinr[static_cast<size_t>(o % nb)];
        const S* r = rv.data() + o * d;
        const S* i = iv.data() + o * d;
        S* yr = orv.data() + o * d;
        S* yi = oiv.data() + o * d;
        for (int64_t c2 = 0; c2 < d; ++c2) {
            yr[c2] = r[c2] * c + i[c2] * s;
            yi[c2] = i[c2] * c - r[c2] * s;
        }
    }
    check_finite(orv, "phase_ramp_mul");

    if (grad_needed<S>({&re, &im, &delta})) {
        yre.set_requires_grad(true);
        yim.set_requires_grad(true);
        auto ri = re.impl(), ii = im.impl(), di = delta.impl(), yri = yre.impl(), yii = yim.impl();
        TapeT<S>::active()->record([ri, ii, di, yri, yii, bsz, nb, d, cosr, sinr] {
            const bool gr = !yri->grad.empty(), gi = !yii->grad.empty();
            if (!gr && !gi) return;
            const bool nr = ri->requires_grad, ni = ii->requires_grad, nd = di->requires_grad;
            if (nr) ri->ensure_grad();
            if (ni) ii->ensure_grad();
            if (nd) di->ensure_grad();
            double ddelta = 0;
            for (int64_t o = 0; o < bsz * nb; ++o) {
                const int64_t k = o % nb;
                const S c = cosr[static_cast<size_t>(k)], s = sinr[static_cast<size_t>(k)];
                const S* r = ri->value.data() + o * d;
                const S* i = ii->value.data() + o * d;
                const S* gre = gr ? yri->grad.data() + o * d : nullptr;
                const S* gim = gi ? yii->grad.data() + o * d : nullptr;
                S* dr = nr ? ri->grad.data() + o * d : nullptr;
                S* dim2 = ni ? ii->grad.data() + o * d : nullptr;
                double dphi = 0;
                for (int64_t c2 = 0; c2 < d; ++c2) {
                    const S ge = gre ? gre[c2] : S(0);
                    const S gm = gim ? gim[c2] : S(0);
                    if (dr) dr[c2] += ge * c - gm * s;
                    if (dim2) dim2[c2] += ge * s + gm * c;
                    if (nd) {
                        dphi += static_cast<double>(ge) * (-r[c2] * s + i[c2] * c) +
                                static_cast<double>(gm) * (-i[c2] * s - r[c2] * c);
                    }
                }
                ddelta += dphi * static_cast<double>(k);
            }
            if (nd) di->grad[0] += static_cast<S>(ddelta);
        });
    }
    return {yre, yim};
}

/// Orthonormal DCT-II rows: D[m,w] = c_m cos(pi (w + 1/2) m / W),
/// c_0 = sqrt(1/W), c_m = sqrt(2/W). A constant input excites only row 0.
template <std::floating_point S>
std::vector<S> dct2_basis(int64_t M, int64_t W) {
    std::vector<S> d(static_cast<size_t>(M * W));
    for (int64_t m = 0; m < M; ++m) {
        const double cm = std::sqrt((m == 0 ? 1.0 : 2.0) / static_cast<double>(W));
        for (int64_t w = 0; w < W; ++w) {
            d[static_cast<size_t>(m * W + w)] =
                static_cast<S>(cm * std::cos(3.14159265358979323846 * (static_cast<double>(w) + 0.5) *
                                             static_cast<double>(m) / static_cast<double>(W)));
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// frontend module
// ---------------------------------------------------------------------------

template <std::floating_point S>
struct FrontendOutT {
    TensorT<S> h;                     // [B, L', d]
    TensorT<S> mask3, inv3;           // [B, L', 1] frame validity and complement
    std::vector<uint8_t> frame_mask;  // B * L'
};

/// bytes -> H': wavetable encoding, power-law compression, damped-sinusoid
/// filter bank, spectral shifts fused by EPM, sliding-window cosine-basis
/// expansion, phase harmonics, output projection.
template <std::floating_point S>
struct FrontendT {
    ModelConfig cfg;
    TensorT<S> wavetable;      // [d]: the d learnable floats behind all 256 byte codes
    TensorT<S> plg_gamma_raw;  // [1]; effective exponent = softplus, starts at 1
    TensorT<S> freq_lambda, freq_omega, freq_psi;  // [F] kernel family parameters
    TensorT<S> freq_mix;                           // [d,F]
    TensorT<S> delta;                              // [Sshifts]
    TensorT<S> frames_w, frames_b;                 // [M*d, d], [d]
    TensorT<S> phases;                             // [K]
    TensorT<S> ph_w, ph_b;                         // [(K+1)*d, d], [d]
    TensorT<S> out_w, out_b;                       // [d, d], [d]
    std::vector<S> dct;                            // [M, W] fixed basis
    std::vector<S> ramp_cos, ramp_sin;             // [256, nb] fixed byte-rotation ramps

    void init(const ModelConfig& c, Prng& rng) {
        cfg = c;
        const int64_t d = cfg.d;
        const double wb = 1.0 / std::sqrt(static_cast<double>(d));
        wavetable = TensorT<S>::uniform({d}, -wb, wb, rng).set_requires_grad(true);
        plg_gamma_raw = TensorT<S>::full({1}, static_cast<S>(kSoftplusInvOne)).set_requires_grad(true);

        const int64_t nf = cfg.freq_filters;
        freq_lambda = TensorT<S>::full({nf}, S(-1)).set_requires_grad(true);
        std::vector<S> om(static_cast<size_t>(nf));
        for (int64_t f = 0; f < nf; ++f) {
            om[static_cast<size_t>(f)] = static_cast<S>(3.14159265358979323846 * (static_cast<double>(f) + 0.5) /
                                                        static_cast<double>(nf));
        }
        freq_omega = TensorT<S>::from_data({nf}, std::move(om)).set_requires_grad(true);
        freq_psi = TensorT<S>::zeros({nf}).set_requires_grad(true);
        const double mb = 1.0 / std::sqrt(static_cast<double>(nf));
        freq_mix = TensorT<S>::uniform({d, nf}, -mb, mb, rng).set_requires_grad(true);

        std::vector<S> dl(static_cast<size_t>(cfg.shifts));
        for (int64_t s = 0; s < cfg.shifts; ++s) {
            dl[static_cast<size_t>(s)] =
                static_cast<S>(2.0 * 3.14159265358979323846 * static_cast<double>(s) / static_cast<double>(cfg.shifts));
        }
        delta = TensorT<S>::from_data({cfg.shifts}, std::move(dl)).set_requires_grad(true);

        const int64_t fin = cfg.basis * d;
        const double fb = 1.0 / std::sqrt(static_cast<double>(fin));
        frames_w = TensorT<S>::uniform({fin, d}, -fb, fb, rng).set_requires_grad(true);
        frames_b = TensorT<S>::zeros({d}).set_requires_grad(true);

        phases = TensorT<S>::zeros({cfg.harmonics}).set_requires_grad(true);
        const int64_t pin = (cfg.harmonics + 1) * d;
        const double pb = 1.0 / std::sqrt(static_cast<double>(pin));
        ph_w = TensorT<S>::uniform({pin, d}, -pb, pb, rng).set_requires_grad(true);
        ph_b = TensorT<S>::zeros({d}).set_requires_grad(true);

        out_w = TensorT<S>::uniform({d, d}, -wb, wb, rng).set_requires_grad(true);
        out_b = TensorT<S>::zeros({d}).set_requires_grad(true);

        dct = dct2_basis<S>(cfg.basis, cfg.window);

        const int64_t nb = fftcore::rfft_bins(d);
        ramp_cos.resize(static_cast<size_t>(256 * nb));
        ramp_sin.resize(static_cast<size_t>(256 * nb));
        for (int64_t b = 0; b < 256; ++b) {
            for (int64_t k = 0; k < nb; ++k) {
                // denominator 256 keeps all byte rotations distinct
                const double phi = 2.0 * 3.14159265358979323846 * static_cast<double>(k) * static_cast<double>(b) / 256.0;
                ramp_cos[static_cast<size_t>(b * nb + k)] = static_cast<S>(std::cos(phi));
                ramp_sin[static_cast<size_t>(b * nb + k)] = static_cast<S>(std::sin(phi));
            }
        }
    }

    /// All 256 byte codes as rows: irfft(rfft(w) * e^{-i 2pi k b / 256}),
    /// i.e. fractional circular shifts of the wavetable. Energy-preserving
    /// and injective over the byte range.
    TensorT<S> encoder_table() const {
        const int64_t nb = fftcore::rfft_bins(cfg.d);
        auto spec = rfft(wavetable, 0);  // re/im [nb]
        auto rc = TensorT<S>::from_data({256, nb}, ramp_cos);
        auto rs = TensorT<S>::from_data({256, nb}, ramp_sin);
        auto re = add(mul(spec.re, rc), mul(spec.im, rs));
        auto im = sub(mul(spec.im, rc), mul(spec.re, rs));
        return irfft(re, im, 1, cfg.d);  // [256, d]
    }

    TensorT<S> encode_bytes(const ByteBatch& batch, const TensorT<S>& mask3) const {
        std::vector<int64_t> idx(batch.bytes.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = batch.bytes[i];
        auto e = embedding_lookup(encoder_table(), idx, {batch.bsz, batch.len});
        return mul(e, mask3);
    }

    /// sign(x) |x|^gamma with gamma = softplus(raw) > 0.
    TensorT<S> power_law_gate(const TensorT<S>& x) const {
        auto g = softplus(plg_gamma_raw);
        return mul(sign(x), pow(abs(x), g));
    }

    double plg_exponent() const {
        double v = static_cast<double>(plg_gamma_raw.data()[0]);
        return v > 20 ? v : std::log1p(std::exp(v));
    }

    /// Causal convolution with damped-sinusoid kernels
    /// k_f(t) = e^{-softplus(lambda_f) t} sin(omega_f t + psi_f), mixed back
    /// to width d.
    TensorT<S> learned_freq_pattern(const TensorT<S>& x) const {
        const int64_t nf = cfg.freq_filters, taps = cfg.freq_kernel;
        std::vector<S> tv(static_cast<size_t>(taps));
        for (int64_t t = 0; t < taps; ++t) tv[static_cast<size_t>(t)] = static_cast<S>(t);
        auto trow = TensorT<S>::from_data({1, taps}, std::move(tv));
        auto lam = reshape(softplus(freq_lambda), {nf, 1});
        auto om = reshape(freq_omega, {nf, 1});
        auto ps = reshape(freq_psi, {nf, 1});
        auto kernels = mul(exp(neg(mul(lam, trow))), sin(add(mul(om, trow), ps)));
        return causal_bank_conv(x, kernels, freq_mix);
    }

    /// S spectral shifts e^{-i k delta_s} along the sequence axis, fused by
    /// energy-proportional mixing.
    TensorT<S> continuous_phase_shift(const TensorT<S>& f, EpmFreezeT<S>* freeze) const {
        const int64_t len = f.dim(1);
        auto spec = rfft(f, 1);  // [B, nb, d]
        std::vector<TensorT<S>> variants;
        variants.reserve(static_cast<size_t>(cfg.shifts));
        for (int64_t s = 0; s < cfg.shifts; ++s) {
            auto shifted = phase_ramp_mul(spec.re, spec.im, slice(delta, 0, s, 1));
            variants.push_back(irfft(shifted.re, shifted.im, 1, len));
        }
        return epm(variants, freeze);
    }

    /// Frames -> fixed cosine basis per feature -> learned map to width d.
    TensorT<S> freq_basis_expansion(const TensorT<S>& x) const {
        auto xf = sliding_frames(x, cfg.window, cfg.hop);
        auto coef = window_contract(xf, dct, cfg.basis);
        const int64_t bsz = coef.dim(0), nt = coef.dim(1);
        auto flat = reshape(coef, {bsz, nt, cfg.basis * cfg.d});
        return linear(flat, frames_w, frames_b);
    }

    /// [x, sin(x 2^k + phi_k) ...] then projection back to d.
    TensorT<S> phase_harmonics(const TensorT<S>& x) const {
        std::vector<TensorT<S>> parts{x};
        for (int64_t k = 0; k < cfg.harmonics; ++k) {
            auto phi = slice(phases, 0, k, 1);
            parts.push_back(sin(add(scale(x, static_cast<double>(int64_t{1} << k)), phi)));
        }
        auto h = concat(parts, x.rank() - 1);
        return linear(h, ph_w, ph_b);
    }

    std::vector<uint8_t> frame_mask_of(const ByteBatch& batch) const {
        const int64_t nframes = cfg.frame_count(batch.len);
        std::vector<uint8_t> fm(static_cast<size_t>(batch.bsz * nframes), 0);
        for (int64_t b = 0; b < batch.bsz; ++b) {
            for (int64_t t = 0; t < nframes; ++t) {
                uint8_t any = 0;
                for (int64_t w = 0; w < cfg.window; ++w) {
                    const int64_t src = t * cfg.hop + w;
                    if (src < batch.len && batch.mask[static_cast<size_t>(b * batch.len + src)]) any = 1;
                }
                fm[static_cast<size_t>(b * nframes + t)] = any;
            }
        }
        return fm;
    }

    FrontendOutT<S> forward(const ByteBatch& batch, ForwardCtxT<S>& ctx) const {
        std::vector<S> m(static_cast<size_t>(batch.bsz * batch.len));
        std::vector<S> mi(m.size());
        for (size_t i = 0; i < m.size(); ++i) {
            m[i] = batch.mask[i] ? S(1) : S(0);
            mi[i] = batch.mask[i] ? S(0) : S(1);
        }
        auto mask3 = TensorT<S>::from_data({batch.bsz, batch.len, 1}, std::move(m));

        auto e = encode_bytes(batch, mask3);
        auto p = power_law_gate(e);
        auto f = mul(learned_freq_pattern(p), mask3);
        auto fp = mul(continuous_phase_shift(f, ctx.freeze), mask3);
        auto x = freq_basis_expansion(fp);
        auto h = phase_harmonics(x);
        auto hp = linear(h, out_w, out_b);

        FrontendOutT<S> out;
        out.frame_mask = frame_mask_of(batch);
        const int64_t nframes = cfg.frame_count(batch.len);
        std::vector<S> fm(out.frame_mask.size()), fi(out.frame_mask.size());
        for (size_t i = 0; i < fm.size(); ++i) {
            fm[i] = out.frame_mask[i] ? S(1) : S(0);
            fi[i] = out.frame_mask[i] ? S(0) : S(1);
        }
        out.mask3 = TensorT<S>::from_data({batch.bsz, nframes, 1}, std::move(fm));
        out.inv3 = TensorT<S>::from_data({batch.bsz, nframes, 1}, std::move(fi));

        hp = mul(hp, out.mask3);
        if (ctx.training && ctx.dropout > 0) hp = dropout(hp, ctx.dropout, *ctx.rng, true);
        out.h = hp;
        return out;
    }

    void collect(std::vector<NamedParam<S>>& out, const std::string& p) const {
        out.push_back({p + ".wavetable", wavetable});
        out.push_back({p + ".plg.gamma", plg_gamma_raw});
        out.push_back({p + ".freq.lambda", freq_lambda});
        out.push_back({p + ".freq.omega", freq_omega});
        out.push_back({p + ".freq.psi", freq_psi});
        out.push_back({p + ".freq.mix", freq_mix});
        out.push_back({p + ".shift.delta", delta});
        out.push_back({p + ".frames.w", frames_w});
        out.push_back({p + ".frames.b", frames_b});
        out.push_back({p + ".ph.phases", phases});
        out.push_back({p + ".ph.w", ph_w});
        out.push_back({p + ".ph.b", ph_b});
        out.push_back({p + ".out.w", out_w});
        out.push_back({p + ".out.b", out_b});
    }
};

}  // namespace kathleen
