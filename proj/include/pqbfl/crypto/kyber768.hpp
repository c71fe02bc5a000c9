#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include "pqbfl/common/bytes.hpp"

// CRYSTALS-Kyber-768, round-3 (v3.02) CCA-secure KEM.
namespace pqbfl::crypto::kyber768 {

inline constexpr std::size_t kPublicKeyBytes = 1184;
inline constexpr std::size_t kSecretKeyBytes = 2400;
inline constexpr std::size_t kCiphertextBytes = 1088;
inline constexpr std::size_t kSharedSecretBytes = 32;

class MalformedKey : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct KeyPair {
    Bytes public_key;
    Bytes secret_key;
};

struct Encapsulation {
    Bytes ciphertext;
    ByteArray<kSharedSecretBytes> shared_secret;
};

/// Deterministic key generation from the two 32-byte coin strings the
/// reference implementation draws: `d` seeds the CPA key pair, `z` is the
/// implicit-rejection secret.
KeyPair keypair_derand(const ByteArray<32>& d, const ByteArray<32>& z);

/// `coins` is the raw 32-byte message before the round-3 H(m) step.
/// Throws MalformedKey when the public key has the wrong length or carries
/// coefficients outside [0, q).
Encapsulation encapsulate_derand(ByteView public_key, const ByteArray<32>& coins);

/// Implicit rejection: a ciphertext that does not re-encrypt yields a
/// pseudo-random secret derived from z instead of an error.
ByteArray<kSharedSecretBytes> decapsulate(ByteView secret_key, ByteView ciphertext);

}  // namespace pqbfl::crypto::kyber768
