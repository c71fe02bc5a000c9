#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "pqbfl/common/bytes.hpp"

namespace pqbfl::crypto {

/// Zeroes memory in a way the optimiser may not elide.
void secure_wipe(std::span<std::uint8_t> data) noexcept;

/// Fixed-size secret buffer wiped on destruction and on move-from.
template <std::size_t N>
class SecretBytes {
public:
    SecretBytes() = default;
    explicit SecretBytes(ByteView src) {
        if (src.size() != N) {
            throw std::invalid_argument("secret has wrong length");
        }
        std::copy(src.begin(), src.end(), bytes_.begin());
    }
    explicit SecretBytes(const ByteArray<N>& src) : bytes_(src) {}

    SecretBytes(const SecretBytes&) = default;
    SecretBytes& operator=(const SecretBytes&) = default;
    SecretBytes(SecretBytes&& other) noexcept : bytes_(other.bytes_) { other.wipe(); }
    SecretBytes& operator=(SecretBytes&& other) noexcept {
        if (this != &other) {
            bytes_ = other.bytes_;
            other.wipe();
        }
        return *this;
    }
    ~SecretBytes() { wipe(); }

    void wipe() noexcept { secure_wipe(bytes_); }

    ByteView view() const { return bytes_; }
    std::span<std::uint8_t, N> span() { return bytes_; }
    const ByteArray<N>& array() const { return bytes_; }
    static constexpr std::size_t size() { return N; }

    friend bool operator==(const SecretBytes& a, const SecretBytes& b) { return a.bytes_ == b.bytes_; }

private:
    ByteArray<N> bytes_{};
};

using Key32 = SecretBytes<32>;

}  // namespace pqbfl::crypto
