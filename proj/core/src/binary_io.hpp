#pragma once

// Little-endian primitives for the dataset and model containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cfo/error.hpp"

namespace cfo::io {

class LeWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }

    const std::vector<char>& buffer() const noexcept { return buf_; }
    void clear() noexcept { buf_.clear(); }

    void flush_to(std::ostream& out) {
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        buf_.clear();
    }

private:
    void put(std::uint64_t v, int n) {
        for (int k = 0; k < n; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
    }
    std::vector<char> buf_;
};

/// Reads from an in-memory block that starts at absolute file offset `base`,
/// so errors can name the exact byte position.
class LeReader {
public:
    LeReader(const char* data, std::size_t size, std::uint64_t base = 0) : data_(data), size_(size), base_(base) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    void bytes(char* out, std::size_t n) {
        require(n);
        std::memcpy(out, data_ + pos_, n);
        pos_ += n;
    }

    std::uint64_t offset() const noexcept { return base_ + pos_; }
    std::size_t remaining() const noexcept { return size_ - pos_; }

private:
    void require(std::size_t n) const {
        if (pos_ + n > size_)
            fail(ErrorKind::Format, "unexpected end of data at byte offset " + std::to_string(base_ + pos_));
    }
    std::uint64_t get(int n) {
        require(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int k = 0; k < n; ++k)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(k)])) << (8 * k);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    const char* data_;
    std::size_t size_;
    std::uint64_t base_;
    std::size_t pos_ = 0;
};

}  // namespace cfo::io
