#include "pqbfl/crypto/keccak.hpp"

#include <bit>

namespace pqbfl::crypto::keccak {

namespace {

constexpr std::array<std::uint64_t, 24> kRoundConstants = {
    0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808aULL, 0x8000000080008000ULL,
    0x000000000000808bULL, 0x0000000080000001ULL, 0x8000000080008081ULL, 0x8000000000008009ULL,
    0x000000000000008aULL, 0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000aULL,
    0x000000008000808bULL, 0x800000000000008bULL, 0x8000000000008089ULL, 0x8000000000008003ULL,
    0x8000000000008002ULL, 0x8000000000000080ULL, 0x000000000000800aULL, 0x800000008000000aULL,
    0x8000000080008081ULL, 0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL,
};

constexpr std::array<int, 25> kRotations = {
    0, 1, 62, 28, 27, 36, 44, 6, 55, 20, 3, 10, 43, 25, 39, 41, 45, 15, 21, 8, 18, 2, 61, 56, 14,
};

void xor_byte(std::array<std::uint64_t, 25>& s, std::size_t pos, std::uint8_t b) {
    s[pos / 8] ^= static_cast<std::uint64_t>(b) << (8 * (pos % 8));
}

std::uint8_t get_byte(const std::array<std::uint64_t, 25>& s, std::size_t pos) {
    return static_cast<std::uint8_t>(s[pos / 8] >> (8 * (pos % 8)));
}

}  // namespace

void permute(std::array<std::uint64_t, 25>& a) noexcept {
    for (std::uint64_t rc : kRoundConstants) {
        std::array<std::uint64_t, 5> c{};
        for (int x = 0; x < 5; ++x) {
            c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
        }
        for (int x = 0; x < 5; ++x) {
            const std::uint64_t d = c[(x + 4) % 5] ^ std::rotl(c[(x + 1) % 5], 1);
            for (int y = 0; y < 25; y += 5) a[y + x] ^= d;
        }
        // rho and pi
        std::array<std::uint64_t, 25> b{};
        for (int x = 0; x < 5; ++x) {
            for (int y = 0; y < 5; ++y) {
                b[y + 5 * ((2 * x + 3 * y) % 5)] = std::rotl(a[x + 5 * y], kRotations[x + 5 * y]);
            }
        }
        // chi
        for (int y = 0; y < 25; y += 5) {
            for (int x = 0; x < 5; ++x) {
                a[y + x] = b[y + x] ^ (~b[y + (x + 1) % 5] & b[y + (x + 2) % 5]);
            }
        }
        a[0] ^= rc;
    }
}

void Sponge::absorb(ByteView data) {
    for (std::uint8_t byte : data) {
        xor_byte(state_, offset_++, byte);
        if (offset_ == rate_) {
            permute(state_);
            offset_ = 0;
        }
    }
}

void Sponge::finalize() {
    xor_byte(state_, offset_, domain_);
    xor_byte(state_, rate_ - 1, 0x80);
    permute(state_);
    offset_ = 0;
    squeezing_ = true;
}

void Sponge::squeeze(std::span<std::uint8_t> out) {
    if (!squeezing_) finalize();
    for (auto& byte : out) {
        if (offset_ == rate_) {
            permute(state_);
            offset_ = 0;
        }
        byte = get_byte(state_, offset_++);
    }
}

ByteArray<32> sha3_256(ByteView data) {
    Sponge s(136, 0x06);
    s.absorb(data);
    ByteArray<32> out{};
    s.squeeze(out);
    return out;
}

ByteArray<64> sha3_512(ByteView data) {
    Sponge s(72, 0x06);
    s.absorb(data);
    ByteArray<64> out{};
    s.squeeze(out);
    return out;
}

void shake256(ByteView data, std::span<std::uint8_t> out) {
    Shake256 s;
    s.absorb(data);
    s.squeeze(out);
}

}  // namespace pqbfl::crypto::keccak
