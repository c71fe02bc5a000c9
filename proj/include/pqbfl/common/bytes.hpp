#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pqbfl {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

template <std::size_t N>
using ByteArray = std::array<std::uint8_t, N>;

/// Thrown by ByteReader when input is truncated or structurally invalid.
class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

template <std::size_t N>
ByteArray<N> array_from_hex(std::string_view hex) {
    const Bytes raw = from_hex(hex);
    if (raw.size() != N) {
        throw DecodeError("hex string has wrong length");
    }
    ByteArray<N> out{};
    std::copy(raw.begin(), raw.end(), out.begin());
    return out;
}

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

Bytes concat(std::initializer_list<ByteView> parts);

/// Big-endian, length-prefixed writer used for every canonical encoding.
class ByteWriter {
public:
    ByteWriter& u8(std::uint8_t v);
    ByteWriter& u16(std::uint16_t v);
    ByteWriter& u32(std::uint32_t v);
    ByteWriter& u64(std::uint64_t v);
    ByteWriter& raw(ByteView data);
    /// u32 length followed by the bytes.
    ByteWriter& var(ByteView data);

    const Bytes& bytes() const& { return buf_; }
    Bytes bytes() && { return std::move(buf_); }
    std::size_t size() const { return buf_.size(); }

private:
    Bytes buf_;
};

class ByteReader {
public:
    explicit ByteReader(ByteView data) : data_(data) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    ByteView raw(std::size_t n);
    ByteView var(std::size_t max_len = 1u << 24);

    template <std::size_t N>
    ByteArray<N> fixed() {
        ByteArray<N> out{};
        const ByteView v = raw(N);
        std::copy(v.begin(), v.end(), out.begin());
        return out;
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t position() const { return pos_; }
    void expect_end() const;

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

}  // namespace pqbfl
