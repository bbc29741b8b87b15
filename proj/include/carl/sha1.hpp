#pragma once
// Minimal SHA-1 for input fingerprints in run manifests, hashed the way git
// hashes blobs ("blob <size>\0" + content).

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "carl/errors.hpp"

namespace carl {

class Sha1 {
public:
    Sha1() { reset(); }

    void reset() {
        h_ = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
        len_ = 0;
        buf_fill_ = 0;
    }

    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        len_ += n;
        while (n > 0) {
            std::size_t take = std::min<std::size_t>(64 - buf_fill_, n);
            std::memcpy(buf_ + buf_fill_, p, take);
            buf_fill_ += take;
            p += take;
            n -= take;
            if (buf_fill_ == 64) {
                block(buf_);
                buf_fill_ = 0;
            }
        }
    }

    std::string hex_digest() {
        uint64_t bits = len_ * 8;
        unsigned char pad = 0x80;
        update(&pad, 1);
        unsigned char zero = 0;
        while (buf_fill_ != 56) update(&zero, 1);
        unsigned char lenb[8];
        for (int i = 0; i < 8; ++i) lenb[i] = static_cast<unsigned char>((bits >> (56 - 8 * i)) & 0xff);
        update(lenb, 8);
        std::ostringstream os;
        static const char* hexd = "0123456789abcdef";
        for (uint32_t w : h_)
            for (int i = 28; i >= 0; i -= 4) os << hexd[(w >> i) & 0xf];
        return os.str();
    }

private:
    static uint32_t rol(uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }

    void block(const unsigned char* p) {
        uint32_t w[80];
        for (int i = 0; i < 16; ++i)
            w[i] = (uint32_t(p[4 * i]) << 24) | (uint32_t(p[4 * i + 1]) << 16) | (uint32_t(p[4 * i + 2]) << 8) |
                   uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
        for (int i = 0; i < 80; ++i) {
            uint32_t f, k;
            if (i < 20) {
                f = (b & c) | (~b & d);
                k = 0x5A827999u;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            uint32_t tmp = rol(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rol(b, 30);
            b = a;
            a = tmp;
        }
        h_[0] += a;
        h_[1] += b;
        h_[2] += c;
        h_[3] += d;
        h_[4] += e;
    }

    std::array<uint32_t, 5> h_;
    unsigned char buf_[64];
    std::size_t buf_fill_ = 0;
    uint64_t len_ = 0;
};

inline std::string sha1_hex(const std::string& data) {
    Sha1 h;
    h.update(data.data(), data.size());
    return h.hex_digest();
}

/// git-style blob hash of a file's content.
inline std::string git_blob_sha1_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot hash missing file: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    std::string content = buf.str();
    Sha1 h;
    std::string header = "blob " + std::to_string(content.size());
    h.update(header.data(), header.size() + 1);  // include the trailing NUL
    h.update(content.data(), content.size());
    return h.hex_digest();
}

}  // namespace carl
