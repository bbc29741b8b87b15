#pragma once
// Self-describing checkpoint container: named tensors (shape + row-major
// 64-bit little-endian values) plus the run's RNG seed and step counter.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "carl/errors.hpp"
#include "carl/tensor.hpp"

namespace carl {

struct TensorRecord {
    std::string name;
    ad::Shape shape;
    std::vector<double> data;
};

struct Checkpoint {
    uint64_t rng_seed = 0;
    uint64_t step = 0;
    std::vector<TensorRecord> tensors;

    const TensorRecord* find(const std::string& name) const {
        for (const auto& t : tensors)
            if (t.name == name) return &t;
        return nullptr;
    }
};

namespace ckpt_detail {

inline void put_u32(std::ostream& os, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}

inline void put_u64(std::ostream& os, uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 8);
}

inline void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<uint64_t>(d)); }

inline uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw DataError("truncated checkpoint");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

inline uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw DataError("truncated checkpoint");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

constexpr char kMagic[8] = {'C', 'A', 'R', 'L', 'C', 'K', 'P', '1'};

}  // namespace ckpt_detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write checkpoint: " + path);
    os.write(ckpt_detail::kMagic, 8);
    ckpt_detail::put_u32(os, 1);  // version
    ckpt_detail::put_u64(os, ck.rng_seed);
    ckpt_detail::put_u64(os, ck.step);
    ckpt_detail::put_u32(os, static_cast<uint32_t>(ck.tensors.size()));
    for (const auto& t : ck.tensors) {
        ckpt_detail::put_u32(os, static_cast<uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        ckpt_detail::put_u32(os, static_cast<uint32_t>(t.shape.size()));
        for (long d : t.shape) ckpt_detail::put_u64(os, static_cast<uint64_t>(d));
        for (double v : t.data) ckpt_detail::put_f64(os, v);
    }
    if (!os) throw DataError("short write to checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, ckpt_detail::kMagic, 8) != 0)
        throw DataError(path + ": not a checkpoint file");
    uint32_t version = ckpt_detail::get_u32(is);
    if (version != 1) throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
    Checkpoint ck;
    ck.rng_seed = ckpt_detail::get_u64(is);
    ck.step = ckpt_detail::get_u64(is);
    uint32_t count = ckpt_detail::get_u32(is);
    ck.tensors.resize(count);
    for (auto& t : ck.tensors) {
        uint32_t name_len = ckpt_detail::get_u32(is);
        t.name.resize(name_len);
        is.read(t.name.data(), name_len);
        if (!is) throw DataError(path + ": truncated tensor name");
        uint32_t ndim = ckpt_detail::get_u32(is);
        t.shape.resize(ndim);
        long total = 1;
        for (auto& d : t.shape) {
            d = static_cast<long>(ckpt_detail::get_u64(is));
            total *= d;
        }
        t.data.resize(static_cast<std::size_t>(total));
        for (auto& v : t.data) v = ckpt_detail::get_f64(is);
    }
    return ck;
}

}  // namespace carl
