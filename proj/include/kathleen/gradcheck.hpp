#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "kathleen/channels.hpp"
#include "kathleen/model.hpp"

namespace kathleen {

struct GradCheckOptions {
    double h = 1e-4;     // central-difference step (64-bit mode)
    double tol = 1e-3;   // max relative error
    uint64_t seed = 42;
    int64_t batch = 2;
    int64_t len = 16;
    bool randomize = true;  // perturb params so no gradient is structurally zero
    std::string corrupt_tensor;  // fault-injection hook for tests
};

struct GradCheckRow {
    std::string name;
    double max_rel = 0;
    std::string status;  // PASS | FAIL | SKIPPED-FD PASS-adjoint | SKIPPED-FD FAIL-adjoint
};

struct GradCheckReport {
    std::vector<GradCheckRow> rows;
    bool ok = true;
};

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

/// Verifies that EPM gradients treat the mixing weights as constants:
/// for out = sum_k w_k z_k with detached w, dL/dz_k must be exactly w_k.
template <std::floating_point S>
bool epm_hand_adjoint_check() {
    Prng rng(7);
    auto z1 = TensorT<S>::uniform({2, 3, 4}, -1, 1, rng).set_requires_grad(true);
    auto z2 = TensorT<S>::uniform({2, 3, 4}, -1, 1, rng).set_requires_grad(true);
    TapeT<S> tape;
    TensorT<S> out;
    {
        TapeScope<S> scope(tape);
        out = epm<S>({z1, z2});
        auto loss = sum_all(out);
        tape.backward(loss);
    }
    // recompute the weights exactly as the forward defines them
    const int64_t n = 2 * 3, d = 4;
    for (int k = 0; k < 2; ++k) {
        const auto& z = (k == 0) ? z1 : z2;
        const auto& g = (k == 0) ? z1.grad() : z2.grad();
        for (int64_t p = 0; p < n; ++p) {
            double e1 = 0, e2 = 0;
            for (int64_t c = 0; c < d; ++c) {
                e1 += std::abs(static_cast<double>(z1.data()[static_cast<size_t>(p * d + c)]));
                e2 += std::abs(static_cast<double>(z2.data()[static_cast<size_t>(p * d + c)]));
            }
            e1 /= d;
            e2 /= d;
            const double w = ((k == 0) ? e1 : e2) / (e1 + e2 + kEpmDen);
            for (int64_t c = 0; c < d; ++c) {
                if (rel_err(static_cast<double>(g[static_cast<size_t>(p * d + c)]), w) > 1e-4) return false;
            }
        }
        (void)z;
    }
    return true;
}

/// End-to-end finite-difference check of the tiny model in 64-bit mode.
/// The stop-gradient EPM weights are captured on the base forward and
/// replayed during the +/-h evaluations, so FD measures the same function
/// the tape differentiates; the detach semantics themselves are covered by
/// the hand-adjoint row.
inline GradCheckReport gradcheck_model(const ModelConfig& cfg, const GradCheckOptions& opt = {}) {
    GradCheckReport report;
    ModelT<double> model(cfg, opt.seed);
    Prng rng(opt.seed ^ 0x9E3779B9u);
    if (opt.randomize) {
        for (auto& p : model.params()) {
            for (auto& v : p.tensor.data()) v += rng.uniform(-0.05, 0.05);
        }
    }

    ByteBatch batch;
    batch.bsz = opt.batch;
    batch.len = opt.len;
    batch.bytes.resize(static_cast<size_t>(opt.batch * opt.len));
    batch.mask.assign(batch.bytes.size(), 1);
    for (auto& b : batch.bytes) b = static_cast<uint8_t>(rng.next_below(256));
    // second row shorter, so padding paths are exercised
    if (opt.batch > 1) {
        for (int64_t t = opt.len / 2; t < opt.len; ++t) {
            batch.bytes[static_cast<size_t>(opt.len + t)] = 0;
            batch.mask[static_cast<size_t>(opt.len + t)] = 0;
        }
    }
    batch.labels.resize(static_cast<size_t>(opt.batch));
    for (auto& l : batch.labels) l = static_cast<int>(rng.next_below(static_cast<uint64_t>(cfg.num_classes)));

    EpmFreezeT<double> freeze;
    freeze.mode = EpmFreezeT<double>::Mode::Capture;

    // analytic gradients at the base point
    std::vector<std::vector<double>> analytic;
    {
        TapeT<double> tape;
        TapeScope<double> scope(tape);
        ForwardCtxT<double> ctx;
        ctx.freeze = &freeze;
        auto loss = model.loss(batch, ctx);
        tape.backward(loss);
        for (auto& p : model.params()) {
            analytic.push_back(p.tensor.grad_if() ? *p.tensor.grad_if() : std::vector<double>(static_cast<size_t>(p.tensor.numel()), 0.0));
            p.tensor.zero_grad();
        }
    }
    if (!opt.corrupt_tensor.empty()) {
        for (size_t i = 0; i < model.params().size(); ++i) {
            if (model.params()[i].name == opt.corrupt_tensor) {
                for (auto& g : analytic[i]) g += 1.0;
            }
        }
    }

    freeze.mode = EpmFreezeT<double>::Mode::Replay;
    auto eval_loss = [&]() {
        ForwardCtxT<double> ctx;
        ctx.freeze = &freeze;
        return static_cast<double>(model.loss(batch, ctx).item());
    };

    auto fd_at = [&](std::vector<double>& w, size_t j, double h) {
        const double orig = w[j];
        w[j] = orig + h;
        const double lp = eval_loss();
        w[j] = orig - h;
        const double lm = eval_loss();
        w[j] = orig;
        return (lp - lm) / (2 * h);
    };

    for (size_t pi = 0; pi < model.params().size(); ++pi) {
        auto& p = model.params()[pi];
        double max_rel = 0;
        auto& w = p.tensor.data();
        for (size_t j = 0; j < w.size(); ++j) {
            double rel = rel_err(fd_at(w, j, opt.h), analytic[pi][j]);
            // An FD step crossing a kink (|.| in the dissonance channel, max
            // pooling ties) inflates the error even though the adjoint is
            // right; shrinking h makes such artifacts vanish while a real
            // adjoint bug stays. Retry failing elements at smaller steps.
            for (double shrink : {1e-2, 1e-3}) {
                if (rel < opt.tol) break;
                rel = std::min(rel, rel_err(fd_at(w, j, opt.h * shrink), analytic[pi][j]));
            }
            max_rel = std::max(max_rel, rel);
        }
        GradCheckRow row;
        row.name = p.name;
        row.max_rel = max_rel;
        row.status = (max_rel < opt.tol) ? "PASS" : "FAIL";
        if (row.status == "FAIL") report.ok = false;
        report.rows.push_back(row);
    }

    // stop-gradient path: not FD-checkable end to end, verified by hand adjoint
    GradCheckRow epm_row;
    epm_row.name = "epm.mixing-weights (stop-gradient)";
    epm_row.max_rel = 0;
    const bool adj_ok = epm_hand_adjoint_check<double>();
    epm_row.status = adj_ok ? "SKIPPED-FD PASS-adjoint" : "SKIPPED-FD FAIL-adjoint";
    if (!adj_ok) report.ok = false;
    report.rows.push_back(epm_row);
    return report;
}

}  // namespace kathleen
