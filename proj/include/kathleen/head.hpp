#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "kathleen/model_config.hpp"
#include "kathleen/ops.hpp"

namespace kathleen {

inline constexpr double kMaskNegInf = 1e9;

/// Sequence-to-vector reduction and classification. DualPool concatenates
/// attention-weighted pooling (single learned query) with masked max
/// pooling, giving a 2d vector; mean pooling is kept as an ablation only.
template <std::floating_point S>
struct HeadT {
    ModelConfig cfg;
    TensorT<S> query;         // [d]
    TensorT<S> cls_w, cls_b;  // [pooled, C], [C]

    int64_t pooled_width() const { return cfg.pool == "dual" ? 2 * cfg.d : cfg.d; }

    void init(const ModelConfig& c, Prng& rng) {
        cfg = c;
        const double qb = 1.0 / std::sqrt(static_cast<double>(cfg.d));
        query = TensorT<S>::uniform({cfg.d}, -qb, qb, rng).set_requires_grad(true);
        const int64_t pw = pooled_width();
        const double cb = 1.0 / std::sqrt(static_cast<double>(pw));
        cls_w = TensorT<S>::uniform({pw, cfg.num_classes}, -cb, cb, rng).set_requires_grad(true);
        cls_b = TensorT<S>::zeros({cfg.num_classes}).set_requires_grad(true);
    }

    /// mask holds 1 for valid frames; every row must have at least one.
    TensorT<S> pool(const TensorT<S>& z, const std::vector<uint8_t>& mask) const {
        const int64_t bsz = z.dim(0), len = z.dim(1);
        std::vector<S> neg(static_cast<size_t>(bsz * len));
        for (size_t i = 0; i < neg.size(); ++i) neg[i] = mask[i] ? S(0) : static_cast<S>(-kMaskNegInf);
        auto negmask = TensorT<S>::from_data({bsz, len}, std::move(neg));

        if (cfg.pool == "mean") {
            std::vector<S> m3(static_cast<size_t>(bsz * len));
            std::vector<S> counts(static_cast<size_t>(bsz), S(0));
            for (int64_t b = 0; b < bsz; ++b) {
                for (int64_t l = 0; l < len; ++l) {
                    const S v = mask[static_cast<size_t>(b * len + l)] ? S(1) : S(0);
                    m3[static_cast<size_t>(b * len + l)] = v;
                    counts[static_cast<size_t>(b)] += v;
                }
            }
            auto mask3 = TensorT<S>::from_data({bsz, len, 1}, std::move(m3));
            auto cnt = TensorT<S>::from_data({bsz, 1}, std::move(counts));
            return div(sum_axis(mul(z, mask3), 1), cnt);
        }

        // attention half: masked softmax over a single-query dot product
        auto scores = reshape(matmul(z, reshape(query, {cfg.d, 1})), {bsz, len});
        auto weights = softmax(add(scores, negmask), 1);
        auto attn = sum_axis(mul(reshape(weights, {bsz, len, 1}), z), 1);

        // max half: masked positions pushed below any real activation
        auto zmask = add(z, reshape(negmask, {bsz, len, 1}));
        auto mx = max_over_axis(zmask, 1);

        return concat<S>({attn, mx}, 1);
    }

    TensorT<S> classify(const TensorT<S>& pooled) const { return linear(pooled, cls_w, cls_b); }

    void collect(std::vector<NamedParam<S>>& out, const std::string& p) const {
        out.push_back({p + ".query", query});
        out.push_back({p + ".cls.w", cls_w});
        out.push_back({p + ".cls.b", cls_b});
    }
};

}  // namespace kathleen
