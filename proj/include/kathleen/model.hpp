#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kathleen/channels.hpp"
#include "kathleen/data.hpp"
#include "kathleen/frontend.hpp"
#include "kathleen/head.hpp"
#include "kathleen/model_config.hpp"

namespace kathleen {

/// The full classifier: frontend -> four-channel sequencer -> dual pooling
/// and classification. All learnable tensors are reachable through params()
/// in a fixed registration order.
template <std::floating_point S>
class ModelT {
public:
    ModelT(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
        cfg_.validate();
        Prng rng(seed);
        frontend_.init(cfg_, rng);
        sequencer_.init(cfg_, rng);
        head_.init(cfg_, rng);
        frontend_.collect(registry_, "frontend");
        sequencer_.collect(registry_, "channels");
        head_.collect(registry_, "head");
    }

    TensorT<S> logits(const ByteBatch& batch, ForwardCtxT<S>& ctx) const {
        if (ctx.freeze) ctx.freeze->begin_forward();
        auto fe = frontend_.forward(batch, ctx);
        auto z = sequencer_.forward(fe.h, fe.mask3, fe.inv3, ctx);
        if (ctx.trace) {
            ctx.trace->h_prime = fe.h;
            ctx.trace->z = z;
        }
        if (ctx.training && ctx.dropout > 0) z = dropout(z, ctx.dropout, *ctx.rng, true);
        auto pooled = head_.pool(z, fe.frame_mask);
        return head_.classify(pooled);
    }

    TensorT<S> loss(const ByteBatch& batch, ForwardCtxT<S>& ctx, TensorT<S>* logits_out = nullptr) const {
        auto lg = logits(batch, ctx);
        if (logits_out) *logits_out = lg;
        return cross_entropy(lg, batch.labels);
    }

    const ModelConfig& config() const { return cfg_; }
    const std::vector<NamedParam<S>>& params() const { return registry_; }
    std::vector<NamedParam<S>>& params() { return registry_; }

    int64_t param_count() const {
        int64_t n = 0;
        for (const auto& p : registry_) n += p.tensor.numel();
        return n;
    }

    /// Counts grouped by the name prefix before the second dot.
    std::map<std::string, int64_t> param_count_by_module() const {
        std::map<std::string, int64_t> out;
        for (const auto& p : registry_) {
            auto dot = p.name.find('.');
            out[p.name.substr(0, dot)] += p.tensor.numel();
        }
        return out;
    }

    FrontendT<S>& frontend() { return frontend_; }
    const FrontendT<S>& frontend() const { return frontend_; }
    SequencerT<S>& sequencer() { return sequencer_; }
    const SequencerT<S>& sequencer() const { return sequencer_; }
    HeadT<S>& head() { return head_; }

private:
    ModelConfig cfg_;
    FrontendT<S> frontend_;
    SequencerT<S> sequencer_;
    HeadT<S> head_;
    std::vector<NamedParam<S>> registry_;
};

using Model32 = ModelT<float>;
using Model64 = ModelT<double>;

}  // namespace kathleen
