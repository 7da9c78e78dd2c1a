#include "kathleen/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace kathleen {

namespace {

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF), static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

bool get_u32(std::istream& in, uint32_t& v) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) return false;
    v = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) | (static_cast<uint32_t>(b[2]) << 16) |
        (static_cast<uint32_t>(b[3]) << 24);
    return true;
}

void put_f32(std::ostream& out, float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

bool get_f32(std::istream& in, float& f) {
    uint32_t bits;
    if (!get_u32(in, bits)) return false;
    std::memcpy(&f, &bits, 4);
    return true;
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointData& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 4);
    put_u32(out, data.version);
    put_u32(out, static_cast<uint32_t>(data.config_text.size()));
    out.write(data.config_text.data(), static_cast<std::streamsize>(data.config_text.size()));
    for (const auto& t : data.tensors) {
        put_u32(out, static_cast<uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put_u32(out, static_cast<uint32_t>(t.dims.size()));
        uint64_t numel = 1;
        for (uint32_t d : t.dims) {
            put_u32(out, d);
            numel *= d;
        }
        if (numel != t.data.size()) {
            throw IoError("checkpoint tensor '" + t.name + "': dims do not match data size");
        }
        for (float f : t.data) put_f32(out, f);
    }
    if (!out) throw IoError("write failed: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw IoError(path + ": not a checkpoint (bad magic)");
    }
    CheckpointData data;
    if (!get_u32(in, data.version)) throw IoError(path + ": truncated header");
    if (data.version != kCheckpointVersion) {
        throw IoError(path + ": unsupported checkpoint version " + std::to_string(data.version));
    }
    uint32_t clen;
    if (!get_u32(in, clen)) throw IoError(path + ": truncated header");
    data.config_text.resize(clen);
    in.read(data.config_text.data(), clen);
    if (in.gcount() != static_cast<std::streamsize>(clen)) throw IoError(path + ": truncated config block");

    while (true) {
        uint32_t nlen;
        if (!get_u32(in, nlen)) break;  // clean EOF
        NamedTensorF32 t;
        t.name.resize(nlen);
        in.read(t.name.data(), nlen);
        if (in.gcount() != static_cast<std::streamsize>(nlen)) throw IoError(path + ": truncated tensor name");
        uint32_t rank;
        if (!get_u32(in, rank)) throw IoError(path + ": truncated tensor '" + t.name + "'");
        uint64_t numel = 1;
        for (uint32_t r = 0; r < rank; ++r) {
            uint32_t d;
            if (!get_u32(in, d)) throw IoError(path + ": truncated dims of '" + t.name + "'");
            t.dims.push_back(d);
            numel *= d;
        }
        t.data.resize(numel);
        for (uint64_t i = 0; i < numel; ++i) {
            if (!get_f32(in, t.data[i])) throw IoError(path + ": truncated data of '" + t.name + "'");
        }
        data.tensors.push_back(std::move(t));
    }
    return data;
}

}  // namespace kathleen
