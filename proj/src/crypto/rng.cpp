#include "pqbfl/crypto/rng.hpp"

#include <openssl/sha.h>

#include <stdexcept>

#include "pqbfl/crypto/secret.hpp"

namespace pqbfl::crypto {

Rng Rng::from_u64(std::uint64_t seed) {
    ByteWriter w;
    w.raw(as_bytes("pqbfl-rng")).u64(seed);
    ByteArray<32> key{};
    SHA256(w.bytes().data(), w.size(), key.data());
    return Rng(key);
}

void Rng::refill() {
    ByteWriter w;
    w.raw(key_).u64(counter_++);
    SHA256(w.bytes().data(), w.size(), block_.data());
    used_ = 0;
}

void Rng::fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
        if (used_ == block_.size()) refill();
        b = block_[used_++];
    }
}

std::uint64_t Rng::next_u64() {
    ByteArray<8> raw{};
    fill(raw);
    std::uint64_t v = 0;
    for (auto b : raw) v = (v << 8) | b;
    return v;
}

std::uint64_t Rng::uniform(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::uniform: zero bound");
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    for (;;) {
        const std::uint64_t v = next_u64();
        if (v < limit) return v % bound;
    }
}

Rng Rng::fork(std::string_view label) const {
    const Bytes input = concat({key_, as_bytes(label)});
    ByteArray<32> child{};
    SHA256(input.data(), input.size(), child.data());
    return Rng(child);
}

}  // namespace pqbfl::crypto
