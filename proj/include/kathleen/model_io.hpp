#pragma once

#include <map>
#include <string>
#include <vector>

#include "kathleen/checkpoint.hpp"
#include "kathleen/config.hpp"
#include "kathleen/model.hpp"

namespace kathleen {

template <std::floating_point S>
std::vector<NamedTensorF32> export_tensors(const ModelT<S>& model) {
    std::vector<NamedTensorF32> out;
    for (const auto& p : model.params()) {
        NamedTensorF32 t;
        t.name = p.name;
        for (int64_t d : p.tensor.shape()) t.dims.push_back(static_cast<uint32_t>(d));
        t.data.reserve(static_cast<size_t>(p.tensor.numel()));
        for (S v : p.tensor.data()) t.data.push_back(static_cast<float>(v));
        out.push_back(std::move(t));
    }
    return out;
}

/// Fills the model's parameters from a checkpoint. Any missing, extra, or
/// shape-mismatched tensor is a hard error, all offenders listed.
template <std::floating_point S>
void import_tensors(ModelT<S>& model, const CheckpointData& ckpt) {
    std::map<std::string, const NamedTensorF32*> by_name;
    for (const auto& t : ckpt.tensors) by_name[t.name] = &t;
    std::string errors;
    for (auto& p : model.params()) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) {
            errors += "  missing tensor: " + p.name + "\n";
            continue;
        }
        const auto* t = it->second;
        Shape got;
        for (uint32_t d : t->dims) got.push_back(static_cast<int64_t>(d));
        if (got != p.tensor.shape()) {
            errors += "  shape mismatch: " + p.name + " checkpoint " + shape_str(got) + " vs model " +
                      shape_str(p.tensor.shape()) + "\n";
            continue;
        }
        auto& dst = p.tensor.data();
        for (size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<S>(t->data[i]);
        by_name.erase(it);
    }
    for (const auto& [name, t] : by_name) errors += "  unexpected tensor: " + name + "\n";
    if (!errors.empty()) throw IoError("checkpoint does not match model:\n" + errors);
}

template <std::floating_point S>
void save_model(const std::string& path, const ModelT<S>& model) {
    CheckpointData data;
    data.config_text = model_config_to_text(model.config());
    data.tensors = export_tensors(model);
    save_checkpoint(path, data);
}

/// Rebuilds the model from the checkpoint's own config block. lmax_override
/// (when larger) resizes the positional decay table, zero-extending it, so
/// longer benchmark sequences can reuse trained weights.
inline ModelT<float> load_model(const std::string& path, int64_t lmax_override = 0) {
    CheckpointData data = load_checkpoint(path);
    ModelConfig cfg = model_config_from_text(data.config_text);
    if (lmax_override > cfg.lmax) {
        const int64_t old_lmax = cfg.lmax;
        cfg.lmax = lmax_override;
        for (auto& t : data.tensors) {
            if (t.name == "channels.reverb.alpha_pos" && t.dims.size() == 1 &&
                t.dims[0] == static_cast<uint32_t>(old_lmax)) {
                t.dims[0] = static_cast<uint32_t>(lmax_override);
                t.data.resize(static_cast<size_t>(lmax_override), 0.0f);
            }
        }
    }
    ModelT<float> model(cfg, /*seed=*/0);
    import_tensors(model, data);
    return model;
}

}  // namespace kathleen
