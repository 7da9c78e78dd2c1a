#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kathleen/common.hpp"

namespace kathleen {

/// On-disk tensor entry: 32-bit little-endian floats regardless of the
/// build's compute precision.
struct NamedTensorF32 {
    std::string name;
    std::vector<uint32_t> dims;
    std::vector<float> data;
};

inline constexpr char kCheckpointMagic[4] = {'K', 'A', 'T', 'H'};
inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointData {
    uint32_t version = kCheckpointVersion;
    std::string config_text;
    std::vector<NamedTensorF32> tensors;
};

/// Layout: magic "KATH", version u32 LE, config block (u32 LE length +
/// key-value text), then per tensor: name length u32, name bytes, rank u32,
/// dims u32 each, raw f32 LE values. The table runs to end of file.
void save_checkpoint(const std::string& path, const CheckpointData& data);

/// Rejects unknown magic or version; malformed files raise IoError.
CheckpointData load_checkpoint(const std::string& path);

}  // namespace kathleen
