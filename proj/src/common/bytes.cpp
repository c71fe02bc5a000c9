#include "pqbfl/common/bytes.hpp"

#include <algorithm>

namespace pqbfl {

namespace {

int nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::string to_hex(ByteView data) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) {
        throw DecodeError("odd-length hex string");
    }
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = nibble(hex[2 * i]);
        const int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw DecodeError("invalid hex digit");
        }
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

Bytes concat(std::initializer_list<ByteView> parts) {
    Bytes out;
    std::size_t total = 0;
    for (auto p : parts) total += p.size();
    out.reserve(total);
    for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

ByteWriter& ByteWriter::u8(std::uint8_t v) {
    buf_.push_back(v);
    return *this;
}

ByteWriter& ByteWriter::u16(std::uint16_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    buf_.push_back(static_cast<std::uint8_t>(v));
    return *this;
}

ByteWriter& ByteWriter::u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
        buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
    return *this;
}

ByteWriter& ByteWriter::u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
    return *this;
}

ByteWriter& ByteWriter::raw(ByteView data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
    return *this;
}

ByteWriter& ByteWriter::var(ByteView data) {
    u32(static_cast<std::uint32_t>(data.size()));
    return raw(data);
}

ByteView ByteReader::raw(std::size_t n) {
    if (n > remaining()) {
        throw DecodeError("truncated input");
    }
    ByteView out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t ByteReader::u8() { return raw(1)[0]; }

std::uint16_t ByteReader::u16() {
    const ByteView v = raw(2);
    return static_cast<std::uint16_t>((v[0] << 8) | v[1]);
}

std::uint32_t ByteReader::u32() {
    const ByteView v = raw(4);
    std::uint32_t out = 0;
    for (std::uint8_t b : v) out = (out << 8) | b;
    return out;
}

std::uint64_t ByteReader::u64() {
    const ByteView v = raw(8);
    std::uint64_t out = 0;
    for (std::uint8_t b : v) out = (out << 8) | b;
    return out;
}

ByteView ByteReader::var(std::size_t max_len) {
    const std::uint32_t len = u32();
    if (len > max_len) {
        throw DecodeError("length prefix exceeds bound");
    }
    return raw(len);
}

void ByteReader::expect_end() const {
    if (remaining() != 0) {
        throw DecodeError("trailing bytes");
    }
}

}  // namespace pqbfl
