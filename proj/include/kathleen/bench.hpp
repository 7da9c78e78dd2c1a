#pragma once

#include <chrono>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "kathleen/memstats.hpp"
#include "kathleen/model.hpp"

namespace kathleen {

struct BenchRow {
    int64_t length = 0;
    double mean_ms = 0;
    double std_ms = 0;
    int64_t peak_bytes = 0;
};

struct BenchOptions {
    std::vector<int64_t> lengths{1024, 2048, 4096};
    int repeat = 3;
    int64_t batch = 4;
    bool backward = false;
    uint64_t seed = 42;
    std::string checkpoint;  // optional: bench trained weights
};

inline ByteBatch random_byte_batch(int64_t bsz, int64_t len, Prng& rng, int num_classes) {
    ByteBatch b;
    b.bsz = bsz;
    b.len = len;
    b.bytes.resize(static_cast<size_t>(bsz * len));
    b.mask.assign(b.bytes.size(), 1);
    for (auto& x : b.bytes) x = static_cast<uint8_t>(rng.next_below(256));
    b.labels.resize(static_cast<size_t>(bsz));
    for (auto& l : b.labels) l = static_cast<int>(rng.next_below(static_cast<uint64_t>(num_classes)));
    return b;
}

/// Times forward (optionally forward+backward) per sequence length. Peak
/// bytes is the tensor-storage high-water mark, reset per length, so the
/// O(L) memory claim is measured per configuration rather than cumulatively.
template <std::floating_point S>
std::vector<BenchRow> run_bench(ModelConfig cfg, const BenchOptions& opt) {
    std::vector<BenchRow> rows;
    for (int64_t len : opt.lengths) {
        if (len < cfg.window) {
            throw ConfigError("bench: length " + std::to_string(len) + " below window " +
                              std::to_string(cfg.window));
        }
        ModelConfig c = cfg;
        c.lmax = std::max(cfg.lmax, cfg.frame_count(len));
        ModelT<S> model(c, opt.seed);
        Prng rng(opt.seed + static_cast<uint64_t>(len));
        auto batch = random_byte_batch(opt.batch, len, rng, static_cast<int>(c.num_classes));

        auto run_once = [&]() {
            if (opt.backward) {
                TapeT<S> tape;
                TapeScope<S> scope(tape);
                ForwardCtxT<S> ctx;
                auto loss = model.loss(batch, ctx);
                tape.backward(loss);
            } else {
                ForwardCtxT<S> ctx;
                (void)model.logits(batch, ctx);
            }
        };
        run_once();  // warmup
        MemStats::reset_peak();
        std::vector<double> times;
        for (int r = 0; r < opt.repeat; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            run_once();
            times.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
        }
        double mean = 0;
        for (double t : times) mean += t;
        mean /= static_cast<double>(times.size());
        double var = 0;
        for (double t : times) var += (t - mean) * (t - mean);
        var /= static_cast<double>(times.size());
        rows.push_back({len, mean, std::sqrt(var), MemStats::peak_bytes()});
    }
    return rows;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "length,mean_ms,std_ms,peak_bytes\n";
    for (const auto& r : rows) {
        os << r.length << "," << r.mean_ms << "," << r.std_ms << "," << r.peak_bytes << "\n";
    }
    return os.str();
}

}  // namespace kathleen
