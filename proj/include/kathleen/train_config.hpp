#pragma once

#include <cstdint>

#include "kathleen/common.hpp"

namespace kathleen {

struct TrainConfig {
    double lr = 3e-4;
    double weight_decay = 0.01;
    int64_t epochs = 20;
    double dropout = 0.10;
    int64_t batch_size = 32;
    uint64_t seed = 42;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 0.0;  // global-norm clip; 0 disables (default off)
    int64_t max_bytes = 256;

    void validate() const {
        if (lr <= 0) throw ConfigError("train.lr must be positive");
        if (weight_decay < 0) throw ConfigError("train.weight_decay must be >= 0");
        if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
        if (dropout < 0 || dropout >= 1) throw ConfigError("train.dropout must be in [0,1)");
        if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
        if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1) throw ConfigError("train.betas must be in (0,1)");
        if (adam_eps <= 0) throw ConfigError("train.adam_eps must be positive");
        if (max_bytes < 1) throw ConfigError("train.max_bytes must be >= 1");
    }
};

}  // namespace kathleen
