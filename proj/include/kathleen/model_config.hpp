#pragma once

#include <cstdint>
#include <string>

#include "kathleen/common.hpp"

namespace kathleen {

/// Architecture hyperparameters. Field defaults are the shipped
/// configuration; tiny() is the reduced setup used by gradient checks.
struct ModelConfig {
    int64_t d = 256;            // hidden width (also wavetable length)
    int64_t freq_filters = 16;  // damped-sinusoid bank size
    int64_t freq_kernel = 32;   // taps per bank filter
    int64_t window = 8;         // sliding window W
    int64_t hop = 4;            // sliding window hop H
    int64_t basis = 8;          // cosine-basis coefficients M per feature
    int64_t harmonics = 6;      // K sinusoid harmonics
    int64_t shifts = 8;         // S learned spectral shifts
    int64_t lmax = 256;         // positional decay table length
    int64_t chunk = 16;         // scan chunk size C
    int64_t num_classes = 2;
    bool ch_reverb = true;
    bool ch_conv = true;
    bool ch_cons = true;
    bool ch_diss = true;
    std::string pool = "dual";  // dual | mean (ablation)

    static ModelConfig tiny() {
        ModelConfig c;
        c.d = 8;
        c.freq_filters = 2;
        c.freq_kernel = 4;
        c.window = 4;
        c.hop = 2;
        c.basis = 4;
        c.shifts = 4;
        c.lmax = 16;
        c.chunk = 4;
        return c;
    }

    int64_t frame_count(int64_t byte_len) const {
        int64_t eff = std::max(byte_len, window);
        return (eff - window) / hop + 1;
    }

    void validate() const {
        if (d < 2 || d % 2 != 0) throw ConfigError("model.d must be even and >= 2");
        if (window < 1) throw ConfigError("model.window must be >= 1");
        if (hop < 1 || hop > window) throw ConfigError("model.hop must be in [1, window]");
        if (basis < 1 || basis > window) throw ConfigError("model.basis must be in [1, window]");
        if (freq_filters < 1 || freq_kernel < 1) throw ConfigError("model.freq_filters/freq_kernel must be >= 1");
        if (harmonics < 1) throw ConfigError("model.harmonics must be >= 1");
        if (shifts < 1) throw ConfigError("model.shifts must be >= 1");
        if (lmax < 1) throw ConfigError("model.lmax must be >= 1");
        if (chunk < 1) throw ConfigError("model.chunk must be >= 1");
        if (num_classes < 2) throw ConfigError("model.num_classes must be >= 2");
        if (pool != "dual" && pool != "mean") throw ConfigError("model.pool must be dual or mean");
    }
};

}  // namespace kathleen
