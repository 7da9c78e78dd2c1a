#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kathleen/data.hpp"
#include "kathleen/model.hpp"
#include "kathleen/model_io.hpp"
#include "kathleen/train_config.hpp"

namespace kathleen {

/// 0.5 (1 + cos(pi step/total)): 1 at step 0, 0 at step == total.
inline double cosine_lr_factor(int64_t step, int64_t total_steps) {
    if (total_steps <= 0) return 1.0;
    double r = static_cast<double>(step) / static_cast<double>(total_steps);
    r = std::min(1.0, std::max(0.0, r));
    return 0.5 * (1.0 + std::cos(3.14159265358979323846 * r));
}

/// AdamW with decoupled weight decay and bias-corrected moments; the decay
/// never touches the moment estimates. A non-finite gradient skips the whole
/// step and bumps a warning counter.
template <std::floating_point S>
class AdamWT {
public:
    AdamWT(std::vector<NamedParam<S>>& params, const TrainConfig& tc, int64_t total_steps)
        : params_(params), tc_(tc), total_steps_(total_steps) {
        for (auto& p : params_) {
            m_.emplace_back(static_cast<size_t>(p.tensor.numel()), S(0));
            v_.emplace_back(static_cast<size_t>(p.tensor.numel()), S(0));
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.tensor.zero_grad();
    }

    double current_lr() const { return tc_.lr * cosine_lr_factor(attempted_, total_steps_); }

    bool step() {
        const double lr_t = current_lr();
        attempted_++;
        for (auto& p : params_) {
            const auto* g = p.tensor.grad_if();
            if (!g) continue;
            for (S x : *g) {
                if (!std::isfinite(static_cast<double>(x))) {
                    skipped_++;
                    return false;
                }
            }
        }
        double gscale = 1.0;
        if (tc_.clip_norm > 0) {
            double sq = 0;
            for (auto& p : params_) {
                const auto* g = p.tensor.grad_if();
                if (!g) continue;
                for (S x : *g) sq += static_cast<double>(x) * static_cast<double>(x);
            }
            const double norm = std::sqrt(sq);
            if (norm > tc_.clip_norm) gscale = tc_.clip_norm / norm;
        }
        applied_++;
        const double bc1 = 1.0 - std::pow(tc_.beta1, static_cast<double>(applied_));
        const double bc2 = 1.0 - std::pow(tc_.beta2, static_cast<double>(applied_));
        for (size_t i = 0; i < params_.size(); ++i) {
            auto& tensor = params_[i].tensor;
            const auto* g = tensor.grad_if();
            if (!g) continue;
            auto& w = tensor.data();
            auto& m = m_[i];
            auto& v = v_[i];
            for (size_t j = 0; j < w.size(); ++j) {
                const double gj = static_cast<double>((*g)[j]) * gscale;
                m[j] = static_cast<S>(tc_.beta1 * m[j] + (1.0 - tc_.beta1) * gj);
                v[j] = static_cast<S>(tc_.beta2 * v[j] + (1.0 - tc_.beta2) * gj * gj);
                const double mhat = static_cast<double>(m[j]) / bc1;
                const double vhat = static_cast<double>(v[j]) / bc2;
                w[j] -= static_cast<S>(lr_t * (mhat / (std::sqrt(vhat) + tc_.adam_eps) +
                                               tc_.weight_decay * static_cast<double>(w[j])));
            }
        }
        return true;
    }

    int64_t skipped() const { return skipped_; }
    int64_t applied() const { return applied_; }

private:
    std::vector<NamedParam<S>>& params_;
    TrainConfig tc_;
    int64_t total_steps_;
    int64_t attempted_ = 0, applied_ = 0, skipped_ = 0;
    std::vector<std::vector<S>> m_, v_;
};

struct EpochStats {
    int64_t epoch = 0;
    double train_loss = 0;
    double train_acc = 0;
    double test_acc = 0;
    double wall_s = 0;
    double lr = 0;
    double plg_gamma = 0;
};

struct RunReport {
    uint64_t seed = 0;
    std::vector<EpochStats> epochs;
    int64_t best_epoch = -1;
    double best_test_acc = 0;
    double final_test_acc = 0;
    int64_t params_total = 0;
    std::map<std::string, int64_t> params_by_module;
    int64_t skipped_steps = 0;
    double wall_total_s = 0;
};

inline std::string epoch_json_line(uint64_t seed, const EpochStats& e) {
    nlohmann::json j{{"seed", seed},         {"epoch", e.epoch},   {"train_loss", e.train_loss},
                     {"train_acc", e.train_acc}, {"test_acc", e.test_acc}, {"wall_s", e.wall_s},
                     {"lr", e.lr},           {"plg_gamma", e.plg_gamma}};
    return j.dump();
}

template <std::floating_point S>
struct EvalResultT {
    double accuracy = 0;
    int num_classes = 0;
    int64_t count = 0;
    std::vector<int64_t> confusion;  // [true * C + pred]
};

template <std::floating_point S>
EvalResultT<S> evaluate_model(const ModelT<S>& model, const TextDataset& ds, int64_t max_bytes,
                              int64_t batch_size) {
    EvalResultT<S> r;
    r.num_classes = static_cast<int>(model.config().num_classes);
    r.confusion.assign(static_cast<size_t>(r.num_classes) * static_cast<size_t>(r.num_classes), 0);
    auto batches = make_batches(ds, max_bytes, batch_size, nullptr);
    int64_t correct = 0;
    for (const auto& batch : batches) {
        ForwardCtxT<S> ctx;
        auto lg = model.logits(batch, ctx);
        auto pred = argmax_rows(lg);
        for (int64_t i = 0; i < batch.bsz; ++i) {
            const int t = batch.labels[static_cast<size_t>(i)];
            const int p = pred[static_cast<size_t>(i)];
            if (t < 0 || t >= r.num_classes) {
                throw ConfigError("evaluate: label " + std::to_string(t) + " outside model classes");
            }
            r.confusion[static_cast<size_t>(t * r.num_classes + p)]++;
            if (t == p) correct++;
            r.count++;
        }
    }
    r.accuracy = r.count ? static_cast<double>(correct) / static_cast<double>(r.count) : 0.0;
    return r;
}

struct TrainHooks {
    std::function<void(const EpochStats&)> on_epoch;
};

/// Single-phase supervised training: per-epoch shuffling from the run PRNG,
/// cosine-annealed AdamW, dropout, per-epoch test evaluation, best-accuracy
/// checkpointing. A non-finite loss aborts with a per-tensor gradient-norm
/// dump.
template <std::floating_point S>
RunReport train_model(ModelT<S>& model, const TrainConfig& tc, const TextDataset& train_ds,
                      const TextDataset& test_ds, const std::string& checkpoint_path = "",
                      const TrainHooks& hooks = {}) {
    tc.validate();
    Prng root(tc.seed);
    Prng shuffle_rng = root.fork(1);
    Prng dropout_rng = root.fork(2);

    const int64_t batches_per_epoch =
        (static_cast<int64_t>(train_ds.texts.size()) + tc.batch_size - 1) / tc.batch_size;
    const int64_t total_steps = batches_per_epoch * tc.epochs;
    AdamWT<S> opt(model.params(), tc, total_steps);

    RunReport report;
    report.seed = tc.seed;
    report.params_total = model.param_count();
    report.params_by_module = model.param_count_by_module();

    const auto t_start = std::chrono::steady_clock::now();
    for (int64_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        const auto e_start = std::chrono::steady_clock::now();
        auto batches = make_batches(train_ds, tc.max_bytes, tc.batch_size, &shuffle_rng);
        double loss_sum = 0;
        int64_t seen = 0, correct = 0;
        double lr_first = opt.current_lr();
        for (const auto& batch : batches) {
            opt.zero_grad();
            TapeT<S> tape;
            TensorT<S> lg;
            TensorT<S> loss;
            {
                TapeScope<S> scope(tape);
                ForwardCtxT<S> ctx;
                ctx.training = true;
                ctx.dropout = tc.dropout;
                ctx.rng = &dropout_rng;
                loss = model.loss(batch, ctx, &lg);
            }
            const double lv = static_cast<double>(loss.item());
            if (!std::isfinite(lv)) {
                std::ostringstream os;
                os << "training diverged (non-finite loss) at epoch " << epoch << "\n";
                os << "per-tensor gradient norms before this batch:\n";
                for (const auto& p : model.params()) {
                    double sq = 0;
                    if (const auto* g = p.tensor.grad_if()) {
                        for (S x : *g) sq += static_cast<double>(x) * static_cast<double>(x);
                    }
                    os << "  " << p.name << " |g| = " << std::sqrt(sq) << "\n";
                }
                throw DivergenceError(os.str());
            }
            tape.backward(loss);
            opt.step();
            loss_sum += lv * static_cast<double>(batch.bsz);
            auto pred = argmax_rows(lg);
            for (int64_t i = 0; i < batch.bsz; ++i) {
                if (pred[static_cast<size_t>(i)] == batch.labels[static_cast<size_t>(i)]) correct++;
            }
            seen += batch.bsz;
        }

        EpochStats es;
        es.epoch = epoch;
        es.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0;
        es.train_acc = seen ? static_cast<double>(correct) / static_cast<double>(seen) : 0;
        es.test_acc = evaluate_model(model, test_ds, tc.max_bytes, tc.batch_size).accuracy;
        es.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - e_start).count();
        es.lr = lr_first;
        es.plg_gamma = model.frontend().plg_exponent();
        report.epochs.push_back(es);
        if (hooks.on_epoch) hooks.on_epoch(es);

        if (es.test_acc > report.best_test_acc || report.best_epoch < 0) {
            report.best_test_acc = es.test_acc;
            report.best_epoch = epoch;
            if (!checkpoint_path.empty()) save_model(checkpoint_path, model);
        }
        report.final_test_acc = es.test_acc;
    }
    report.skipped_steps = opt.skipped();
    report.wall_total_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

}  // namespace kathleen
