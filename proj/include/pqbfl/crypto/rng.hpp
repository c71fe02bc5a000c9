#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "pqbfl/common/bytes.hpp"

namespace pqbfl::crypto {

/// Deterministic byte stream: block_i = SHA-256(key || be64(i)).
///
/// Every key, nonce and coin in a simulation is drawn from one of these, so a
/// whole run replays bit-for-bit from its seed. Forks give each party an
/// independent stream without coupling draw order between parties.
/// Simulation entropy only; it is not a NIST DRBG.
class Rng {
public:
    explicit Rng(const ByteArray<32>& seed) : key_(seed) {}
    static Rng from_u64(std::uint64_t seed);

    void fill(std::span<std::uint8_t> out);

    template <std::size_t N>
    ByteArray<N> array() {
        ByteArray<N> out{};
        fill(out);
        return out;
    }

    std::uint64_t next_u64();
    /// Uniform in [0, bound) by rejection; bound must be non-zero.
    std::uint64_t uniform(std::uint64_t bound);

    /// Child stream keyed by SHA-256(key || label).
    Rng fork(std::string_view label) const;

private:
    void refill();

    ByteArray<32> key_;
    ByteArray<32> block_{};
    std::uint64_t counter_ = 0;
    std::size_t used_ = 32;
};

}  // namespace pqbfl::crypto
