#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "kathleen/forward_ctx.hpp"
#include "kathleen/model_config.hpp"
#include "kathleen/ops.hpp"
#include "kathleen/ops_conv.hpp"

namespace kathleen {

inline constexpr double kGammaMin = 0.50;
inline constexpr double kGammaMax = 0.999;
inline constexpr double kEpmDen = 1e-6;

// softplus(x) = 1  =>  x = log(e - 1)
inline constexpr double kSoftplusInvOne = 0.5413248546129181;

// ---------------------------------------------------------------------------
// chunked parallel scan
// ---------------------------------------------------------------------------

/// s_t = gamma_t * s_{t-1} + (1 - gamma_t) * v_t with s_{-1} = 0, evaluated
/// as a chunked scan: within each chunk, prefix products P_t come from
/// cumulative log-space sums and s_t = P_t * (carry + sum_{j<=t} (1-g_j)v_j/P_j);
/// the carry propagates serially across chunks. Chunk-local products keep
/// P_t >= gamma_min^C, so nothing underflows even in 32-bit.
///
/// gamma must lie in (0, 1]; 1 is allowed so masked positions can carry
/// state through unchanged (log 1 == 0 exactly).
template <std::floating_point S>
TensorT<S> reverb_scan(const TensorT<S>& gamma, const TensorT<S>& v, int64_t chunk) {
    if (gamma.rank() != 3 || gamma.shape() != v.shape()) shape_fail("reverb_scan", gamma.shape(), v.shape());
    if (chunk < 1) throw ConfigError("reverb_scan: chunk must be >= 1");
    const int64_t bsz = gamma.dim(0), len = gamma.dim(1), d = gamma.dim(2);
    for (S g : gamma.data()) {
        if (!(g > S(0)) || g > S(1)) throw NumericError("reverb_scan: gamma outside (0,1]");
    }
    auto s = TensorT<S>::zeros(gamma.shape());
    const auto& gv = gamma.data();
    const auto& vv = v.data();
    auto& sv = s.data();
    parallel_for(bsz, 1, [&](int64_t blo, int64_t bhi) {
        std::vector<S> carry(static_cast<size_t>(d), S(0));
        std::vector<S> logp(static_cast<size_t>(d)), usum(static_cast<size_t>(d));
        for (int64_t b = blo; b < bhi; ++b) {
            std::fill(carry.begin(), carry.end(), S(0));
            for (int64_t c0 = 0; c0 < len; c0 += chunk) {
                const int64_t c1 = std::min(len, c0 + chunk);
                std::fill(logp.begin(), logp.end(), S(0));
                std::fill(usum.begin(), usum.end(), S(0));
                for (int64_t t = c0; t < c1; ++t) {
                    const S* g = gv.data() + (b * len + t) * d;
                    const S* vt = vv.data() + (b * len + t) * d;
                    S* st = sv.data() + (b * len + t) * d;
                    for (int64_t i = 0; i < d; ++i) {
                        logp[static_cast<size_t>(i)] += std::log(g[i]);
                        const S p = std::exp(logp[static_cast<size_t>(i)]);
                        usum[static_cast<size_t>(i)] += (S(1) - g[i]) * vt[i] / p;
                        st[i] = p * (carry[static_cast<size_t>(i)] + usum[static_cast<size_t>(i)]);
                    }
                }
                const S* last = sv.data() + (b * len + (c1 - 1)) * d;
                std::copy(last, last + d, carry.begin());
            }
        }
    });
    check_finite(sv, "reverb_scan");

    if (grad_needed<S>({&gamma, &v})) {
        s.set_requires_grad(true);
        auto gi = gamma.impl(), vi = v.impl(), si = s.impl();
        TapeT<S>::active()->record([gi, vi, si, bsz, len, d] {
            if (si->grad.empty()) return;
            const bool ng = gi->requires_grad, nv = vi->requires_grad;
            if (!ng && !nv) return;
            if (ng) gi->ensure_grad();
            if (nv) vi->ensure_grad();
            const auto& gs = si->grad;
            parallel_for(bsz, 1, [&](int64_t blo, int64_t bhi) {
                // dL/ds_t accumulated through the recurrence, lane per feature
                std::vector<S> acc(static_cast<size_t>(d));
                for (int64_t b = blo; b < bhi; ++b) {
                    std::fill(acc.begin(), acc.end(), S(0));
                    for (int64_t t = len - 1; t >= 0; --t) {
                        const int64_t row = (b * len + t) * d;
                        const S* g = gi->value.data() + row;
                        const S* vt = vi->value.data() + row;
                        const S* sprev = (t > 0) ? si->value.data() + row - d : nullptr;
                        for (int64_t i = 0; i < d; ++i) {
                            // incoming grad at t plus carry from t+1 (already in acc)
                            acc[static_cast<size_t>(i)] += gs[static_cast<size_t>(row + i)];
                            const S a = acc[static_cast<size_t>(i)];
                            if (ng) {
                                const S sp = sprev ? sprev[i] : S(0);
                                gi->grad[static_cast<size_t>(row + i)] += a * (sp - vt[i]);
                            }
                            if (nv) vi->grad[static_cast<size_t>(row + i)] += a * (S(1) - g[i]);
                            acc[static_cast<size_t>(i)] = a * g[i];  // becomes carry into t-1
                        }
                    }
                }
            });
        });
    }
    return s;
}

/// Sequential reference recurrence; the oracle the chunked scan is tested
/// against. Kept independent of reverb_scan on purpose.
template <std::floating_point S>
std::vector<S> sequential_scan_oracle(const std::vector<S>& gamma, const std::vector<S>& v,
                                      int64_t bsz, int64_t len, int64_t d) {
    std::vector<S> s(gamma.size());
    for (int64_t b = 0; b < bsz; ++b) {
        std::vector<S> st(static_cast<size_t>(d), S(0));
        for (int64_t t = 0; t < len; ++t) {
            const int64_t row = (b * len + t) * d;
            for (int64_t i = 0; i < d; ++i) {
                const S g = gamma[static_cast<size_t>(row + i)];
                st[static_cast<size_t>(i)] = g * st[static_cast<size_t>(i)] + (S(1) - g) * v[static_cast<size_t>(row + i)];
                s[static_cast<size_t>(row + i)] = st[static_cast<size_t>(i)];
            }
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// energy-proportional mixing
// ---------------------------------------------------------------------------

/// Fuses K same-shape signals with weights proportional to each signal's
/// mean absolute value over the feature axis, computed per (batch, position)
/// on detached values. The weights carry no gradient.
template <std::floating_point S>
TensorT<S> epm(const std::vector<TensorT<S>>& signals, EpmFreezeT<S>* freeze = nullptr) {
    if (signals.empty()) throw ShapeError("epm: no signals");
    for (const auto& z : signals) {
        if (z.shape() != signals[0].shape()) shape_fail("epm", signals[0].shape(), z.shape());
    }
    const int last = signals[0].rank() - 1;
    Shape wshape(signals[0].shape().begin(), signals[0].shape().end() - 1);
    if (wshape.empty()) wshape.push_back(1);

    std::vector<TensorT<S>> weights;
    if (freeze && freeze->mode == EpmFreezeT<S>::Mode::Replay) {
        if (freeze->cursor >= freeze->captured.size()) {
            throw ConfigError("epm: freeze replay exhausted (forward structure changed)");
        }
        const auto& planes = freeze->captured[freeze->cursor++];
        for (const auto& p : planes) weights.push_back(TensorT<S>::from_data(wshape, p));
    } else {
        std::vector<TensorT<S>> energies;
        energies.reserve(signals.size());
        for (const auto& z : signals) energies.push_back(mean_axis(abs(detach(z)), last));
        TensorT<S> denom = energies[0];
        for (size_t k = 1; k < energies.size(); ++k) denom = add(denom, energies[k]);
        denom = add_const(denom, kEpmDen);
        for (const auto& e : energies) weights.push_back(div(e, denom));
        if (freeze && freeze->mode == EpmFreezeT<S>::Mode::Capture) {
            std::vector<std::vector<S>> planes;
            for (const auto& w : weights) planes.push_back(w.data());
            freeze->captured.push_back(std::move(planes));
            freeze->cursor = freeze->captured.size();
        }
    }

    Shape bshape = wshape;
    bshape.push_back(1);
    TensorT<S> out;
    for (size_t k = 0; k < signals.size(); ++k) {
        auto term = mul(reshape(weights[k], bshape), signals[k]);
        out = out.defined() ? add(out, term) : term;
    }
    return out;
}

// ---------------------------------------------------------------------------
// channel modules
// ---------------------------------------------------------------------------

/// Gated linear recurrence whose decay is conditioned on content
/// (W_gate h_t) and position (alpha_t, broadcast over features).
template <std::floating_point S>
struct ReverbT {
    TensorT<S> w_in, w_gate, w_out;
    TensorT<S> alpha_pos;  // [lmax], zero-initialized
    int64_t lmax = 0;
    int64_t chunk = 16;

    void init(const ModelConfig& cfg, Prng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.d));
        w_in = TensorT<S>::uniform({cfg.d, cfg.d}, -bound, bound, rng).set_requires_grad(true);
        w_gate = TensorT<S>::uniform({cfg.d, cfg.d}, -bound, bound, rng).set_requires_grad(true);
        // zero so the channel is silent at init
        w_out = TensorT<S>::zeros({cfg.d, cfg.d}).set_requires_grad(true);
        alpha_pos = TensorT<S>::zeros({cfg.lmax}).set_requires_grad(true);
        lmax = cfg.lmax;
        chunk = cfg.chunk;
    }

    /// Decay gate before the padding override; strictly inside
    /// (gamma_min, gamma_max).
    TensorT<S> gate(const TensorT<S>& h) const {
        const int64_t len = h.dim(1);
        if (len > lmax) {
            throw ConfigError("reverb: sequence length " + std::to_string(len) + " exceeds lmax " +
                              std::to_string(lmax) + " (raise model.lmax for this run)");
        }
        auto alpha_l = reshape(slice(alpha_pos, 0, 0, len), {len, 1});
        auto logit = add(matmul(h, w_gate), alpha_l);
        return add_const(scale(sigmoid(logit), kGammaMax - kGammaMin), kGammaMin);
    }

    /// mask3 is [B,L,1] with 1 on valid positions, inv3 its complement.
    /// Padding forces gamma := 1 and v := 0, so the carry survives padding.
    TensorT<S> forward(const TensorT<S>& h, const TensorT<S>& mask3, const TensorT<S>& inv3) const {
        auto v = mul(matmul(h, w_in), mask3);
        auto gam = add(mul(gate(h), mask3), inv3);
        auto s = reverb_scan(gam, v, chunk);
        return matmul(s, w_out);
    }

    void collect(std::vector<NamedParam<S>>& out, const std::string& p) const {
        out.push_back({p + ".w_in", w_in});
        out.push_back({p + ".w_gate", w_gate});
        out.push_back({p + ".w_out", w_out});
        out.push_back({p + ".alpha_pos", alpha_pos});
    }
};

/// Depthwise separable conv channel, identity kernels behind a scalar gate.
template <std::floating_point S>
struct ConvLiteT {
    TensorT<S> depthwise;  // [d,5], center tap 1
    TensorT<S> pointwise;  // [d,d], identity
    TensorT<S> eps;        // [1], zero: channel silent at init

    void init(const ModelConfig& cfg, Prng&) {
        std::vector<S> dw(static_cast<size_t>(cfg.d * 5), S(0));
        for (int64_t c = 0; c < cfg.d; ++c) dw[static_cast<size_t>(c * 5 + 2)] = S(1);
        depthwise = TensorT<S>::from_data({cfg.d, 5}, std::move(dw)).set_requires_grad(true);
        std::vector<S> pw(static_cast<size_t>(cfg.d * cfg.d), S(0));
        for (int64_t c = 0; c < cfg.d; ++c) pw[static_cast<size_t>(c * cfg.d + c)] = S(1);
        pointwise = TensorT<S>::from_data({cfg.d, cfg.d}, std::move(pw)).set_requires_grad(true);
        eps = TensorT<S>::zeros({1}).set_requires_grad(true);
    }

    TensorT<S> forward(const TensorT<S>& h) const {
        return mul(eps, conv1d_depthwise_separable(h, depthwise, pointwise));
    }

    void collect(std::vector<NamedParam<S>>& out, const std::string& p) const {
        out.push_back({p + ".depthwise", depthwise});
        out.push_back({p + ".pointwise", pointwise});
        out.push_back({p + ".eps", eps});
    }
};

/// Fixed-point interference amplifying agreement between a token and its
/// adapted projection: psi <- tanh((a + alpha psi)(b + alpha psi)/s),
/// K iterations from psi = 0, output eps * psi.
template <std::floating_point S>
struct PsiConsT {
    static constexpr int kIterations = 4;
    TensorT<S> adapter;    // [d,d]
    TensorT<S> alpha;      // [1], coupling
    TensorT<S> scale_raw;  // [1], softplus keeps the scale positive
    TensorT<S> eps;        // [1], zero at init

    void init(const ModelConfig& cfg, Prng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.d));
        adapter = TensorT<S>::uniform({cfg.d, cfg.d}, -bound, bound, rng).set_requires_grad(true);
        alpha = TensorT<S>::full({1}, S(0.3)).set_requires_grad(true);
        scale_raw = TensorT<S>::full({1}, static_cast<S>(kSoftplusInvOne)).set_requires_grad(true);
        eps = TensorT<S>::zeros({1}).set_requires_grad(true);
    }

    TensorT<S> forward(const TensorT<S>& x) const {
        auto b = matmul(x, adapter);
        auto s = softplus(scale_raw);
        auto psi = TensorT<S>::zeros(x.shape());
        for (int k = 0; k < kIterations; ++k) {
            auto ap = add(x, mul(alpha, psi));
            auto bp = add(b, mul(alpha, psi));
            psi = tanh(div(mul(ap, bp), s));
        }
        return mul(eps, psi);
    }

    void collect(std::vector<NamedParam<S>>& out, const std::string& p) const {
        out.push_back({p + ".adapter", adapter});
        out.push_back({p + ".alpha", alpha});
        out.push_back({p + ".scale", scale_raw});
        out.push_back({p + ".eps", eps});
    }
};

/// Interference channel amplifying disagreement:
/// Diss(x) = Adapter(x) + eps * tanh(|x - Adapter(x)| / s).
/// The adapter starts at zero so the channel is silent at init.
template <std::floating_point S>
struct PsiDissT {
    TensorT<S> adapter;
    TensorT<S> scale_raw;
    TensorT<S> eps;

    void init(const ModelConfig& cfg, Prng&) {
        adapter = TensorT<S>::zeros({cfg.d, cfg.d}).set_requires_grad(true);
        scale_raw = TensorT<S>::full({1}, static_cast<S>(kSoftplusInvOne)).set_requires_grad(true);
        eps = TensorT<S>::zeros({1}).set_requires_grad(true);
    }

    TensorT<S> forward(const TensorT<S>& x) const {
        auto ax = matmul(x, adapter);
        auto s = softplus(scale_raw);
        return add(ax, mul(eps, tanh(div(abs(sub(x, ax)), s))));
    }

    void collect(std::vector<NamedParam<S>>& out, const std::string& p) const {
        out.push_back({p + ".adapter", adapter});
        out.push_back({p + ".scale", scale_raw});
        out.push_back({p + ".eps", eps});
    }
};

/// Four parallel channels over the same hidden states, fused by EPM, added
/// residually, then gated per-dimension by the diagnostic adapter.
template <std::floating_point S>
struct SequencerT {
    ReverbT<S> reverb;
    ConvLiteT<S> conv;
    PsiConsT<S> cons;
    PsiDissT<S> diss;
    TensorT<S> diag_eps;  // [d], zero at init
    bool use_reverb = true, use_conv = true, use_cons = true, use_diss = true;

    void init(const ModelConfig& cfg, Prng& rng) {
        use_reverb = cfg.ch_reverb;
        use_conv = cfg.ch_conv;
        use_cons = cfg.ch_cons;
        use_diss = cfg.ch_diss;
        reverb.init(cfg, rng);
        conv.init(cfg, rng);
        cons.init(cfg, rng);
        diss.init(cfg, rng);
        diag_eps = TensorT<S>::zeros({cfg.d}).set_requires_grad(true);
    }

    TensorT<S> forward(const TensorT<S>& h, const TensorT<S>& mask3, const TensorT<S>& inv3,
                       ForwardCtxT<S>& ctx) const {
        std::vector<TensorT<S>> ch;
        if (use_reverb) ch.push_back(reverb.forward(h, mask3, inv3));
        if (use_conv) ch.push_back(conv.forward(h));
        if (use_cons) ch.push_back(cons.forward(h));
        if (use_diss) ch.push_back(diss.forward(h));
        auto z = ch.empty() ? h : add(h, epm(ch, ctx.freeze));
        return mul(z, add_const(diag_eps, 1.0));
    }

    void collect(std::vector<NamedParam<S>>& out, const std::string& p) const {
        if (use_reverb) reverb.collect(out, p + ".reverb");
        if (use_conv) conv.collect(out, p + ".conv");
        if (use_cons) cons.collect(out, p + ".psi_cons");
        if (use_diss) diss.collect(out, p + ".psi_diss");
        out.push_back({p + ".diag.eps", diag_eps});
    }
};

}  // namespace kathleen
