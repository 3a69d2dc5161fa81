#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "error.hpp"

// Little-endian binary i/o helpers shared by all container formats
// (FNT1 tilesets, FNS1 stats, FSM1/ADM1 checkpoints, FSC1 scenes).
// Values are serialized byte-by-byte so the files are identical on any host.

namespace fseg::io {

inline void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float v) {
    put_u32(out, std::bit_cast<uint32_t>(v));
}

inline void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<uint64_t>(v));
}

inline void put_f32_array(std::string& out, const float* p, size_t n) {
    for (size_t i = 0; i < n; ++i) put_f32(out, p[i]);
}

/// Cursor over an in-memory file image; every read is bounds-checked and
/// raises a format error on truncation.
class Reader {
public:
    Reader(const uint8_t* data, size_t size, std::string name)
        : data_(data), size_(size), name_(std::move(name)) {}

    size_t remaining() const { return size_ - pos_; }
    size_t position() const { return pos_; }

    void need(size_t n, const char* what) const {
        if (remaining() < n)
            throw Error(ErrCode::format, name_ + ": truncated while reading " + std::string(what));
    }

    uint8_t u8(const char* what) {
        need(1, what);
        return data_[pos_++];
    }

    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    uint64_t u64(const char* what) {
        need(8, what);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

    void f32_array(float* dst, size_t n, const char* what) {
        need(4 * n, what);
        for (size_t i = 0; i < n; ++i) {
            uint32_t v = 0;
            for (int b = 0; b < 4; ++b) v |= uint32_t(data_[pos_ + 4 * i + b]) << (8 * b);
            dst[i] = std::bit_cast<float>(v);
        }
        pos_ += 4 * n;
    }

    void magic(const char tag[4]) {
        need(4, "magic");
        if (std::memcmp(data_ + pos_, tag, 4) != 0)
            throw Error(ErrCode::format,
                        name_ + ": bad magic, expected \"" + std::string(tag, 4) + "\"");
        pos_ += 4;
    }

    /// True if the next 4 bytes equal `tag` (without consuming them).
    bool peek_tag(const char tag[4]) const {
        return remaining() >= 4 && std::memcmp(data_ + pos_, tag, 4) == 0;
    }

    void expect_end() const {
        if (remaining() != 0)
            throw Error(ErrCode::format, name_ + ": trailing data after payload");
    }

    const std::string& name() const { return name_; }

private:
    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
    std::string name_;
};

inline std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrCode::io, "cannot open for reading: " + path);
    f.seekg(0, std::ios::end);
    std::streamoff n = f.tellg();
    f.seekg(0, std::ios::beg);
    std::vector<uint8_t> buf(size_t(n));
    if (n > 0) f.read(reinterpret_cast<char*>(buf.data()), n);
    if (!f) throw Error(ErrCode::io, "read failed: " + path);
    return buf;
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrCode::io, "cannot open for writing: " + path);
    f.write(bytes.data(), std::streamsize(bytes.size()));
    f.flush();
    if (!f) throw Error(ErrCode::io, "write failed: " + path);
}

} // namespace fseg::io
