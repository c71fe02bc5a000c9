#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "pqbfl/common/bytes.hpp"

namespace pqbfl::crypto::keccak {

void permute(std::array<std::uint64_t, 25>& state) noexcept;

/// Keccak sponge with incremental absorb and streaming squeeze.
class Sponge {
public:
    Sponge(std::size_t rate_bytes, std::uint8_t domain) : rate_(rate_bytes), domain_(domain) {}

    void absorb(ByteView data);
    void squeeze(std::span<std::uint8_t> out);

private:
    void finalize();

    std::array<std::uint64_t, 25> state_{};
    std::size_t rate_;
    std::uint8_t domain_;
    std::size_t offset_ = 0;
    bool squeezing_ = false;
};

class Shake128 : public Sponge {
public:
    Shake128() : Sponge(168, 0x1f) {}
    static constexpr std::size_t kRate = 168;
};

class Shake256 : public Sponge {
public:
    Shake256() : Sponge(136, 0x1f) {}
};

ByteArray<32> sha3_256(ByteView data);
ByteArray<64> sha3_512(ByteView data);
void shake256(ByteView data, std::span<std::uint8_t> out);

}  // namespace pqbfl::crypto::keccak
