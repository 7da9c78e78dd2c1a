#pragma once

#include <string>
#include <vector>

#include "kathleen/data.hpp"
#include "kathleen/model_config.hpp"
#include "kathleen/train_config.hpp"

namespace kathleen {

/// One run's worth of configuration, parsed from the key = value grammar
/// documented in the README. Unknown keys are hard errors.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    DatasetSpec data;       // data.path holds the train split
    std::string test_path;
    int64_t limit_train = 0;  // 0 = use everything
    int64_t limit_test = 0;

    DatasetSpec train_spec() const { return data; }
    DatasetSpec test_spec() const {
        DatasetSpec s = data;
        s.path = test_path;
        return s;
    }

    /// Applies one key; throws ConfigError on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);

    static RunConfig parse_text(const std::string& text);
    static RunConfig parse_file(const std::string& path);

    /// Every key with its default, the output of `inspect --defaults`.
    static std::string defaults_text();
};

/// Model block serialization for checkpoints (same grammar, model.* keys
/// plus model.num_classes).
std::string model_config_to_text(const ModelConfig& cfg);
ModelConfig model_config_from_text(const std::string& text);

}  // namespace kathleen
