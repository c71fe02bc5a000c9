#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include "pqbfl/common/bytes.hpp"
#include "pqbfl/crypto/rng.hpp"
#include "pqbfl/crypto/secret.hpp"

// Fixed primitive set: Kyber-768, P-256 ECDH, secp256k1 ECDSA, SHA-256
// commitments, HKDF-SHA384 and AES-256-GCM.
namespace pqbfl::crypto {

inline constexpr std::size_t kDhPublicBytes = 65;
inline constexpr std::size_t kSigPublicBytes = 65;
inline constexpr std::size_t kSignatureBytes = 64;
inline constexpr std::size_t kAeadTagBytes = 16;
inline constexpr std::size_t kHkdfHashBytes = 48;

using Digest = ByteArray<32>;
using Address = ByteArray<20>;
using Signature = ByteArray<kSignatureBytes>;
using Nonce = ByteArray<12>;

class CryptoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed public key, point or ciphertext handed to a primitive.
class InvalidInput : public CryptoError {
public:
    using CryptoError::CryptoError;
};

/// AEAD tag check failed: tampered ciphertext, wrong AAD or wrong key.
class AuthFailure : public CryptoError {
public:
    using CryptoError::CryptoError;
};

enum class SecretOrigin : std::uint8_t { kem, dh };

struct SharedSecret {
    Key32 bytes;
    SecretOrigin origin;
};

struct KemKeyPair {
    KemKeyPair() = default;
    KemKeyPair(Bytes sk, Bytes pk) : secret(std::move(sk)), public_key(std::move(pk)) {}
    KemKeyPair(const KemKeyPair&) = default;
    KemKeyPair(KemKeyPair&&) noexcept = default;
    KemKeyPair& operator=(const KemKeyPair&) = default;
    KemKeyPair& operator=(KemKeyPair&&) noexcept = default;
    ~KemKeyPair() { secure_wipe(secret); }

    Bytes secret;
    Bytes public_key;
};

struct DhKeyPair {
    Key32 secret;
    Bytes public_key;  // 65-byte SEC1 uncompressed
};

struct SigKeyPair {
    Key32 secret;
    Bytes public_key;  // 65-byte SEC1 uncompressed
    Address address;
};

struct KemEncapsulation {
    Bytes ciphertext;
    SharedSecret secret;
};

// KEM. The 32-byte seed is expanded with SHA3-512 into Kyber's (d, z).
KemKeyPair kem_keygen(const ByteArray<32>& seed);
KemEncapsulation kem_encap(ByteView public_key, Rng& rng);
KemEncapsulation kem_encap_derand(ByteView public_key, const ByteArray<32>& coins);
SharedSecret kem_decap(ByteView secret_key, ByteView ciphertext);

// P-256 Diffie-Hellman; the shared secret is the x-coordinate.
DhKeyPair dh_keygen(Rng& rng);
DhKeyPair dh_from_secret(const ByteArray<32>& scalar);
SharedSecret dh_agree(const Key32& my_secret, ByteView peer_public);

// secp256k1 ECDSA over SHA-256(message); deterministic nonces, low-s, r||s.
SigKeyPair sig_keygen(Rng& rng);
SigKeyPair sig_from_secret(const ByteArray<32>& scalar);
Signature sign(const Key32& secret, ByteView message);
bool verify(ByteView public_key, ByteView message, ByteView signature) noexcept;
Address address_of(ByteView public_key);

Digest digest(ByteView data);

/// HKDF-SHA384. An empty salt means HashLen zero bytes.
Bytes hkdf(ByteView salt, ByteView ikm, ByteView label, std::size_t out_len);
Key32 hkdf32(ByteView salt, ByteView ikm, ByteView label);

/// AES-256-GCM; output is ciphertext || 16-byte tag.
Bytes aead_seal(const Key32& key, const Nonce& nonce, ByteView aad, ByteView plaintext);
Bytes aead_open(const Key32& key, const Nonce& nonce, ByteView aad, ByteView sealed);

enum class Direction : std::uint8_t {
    server_to_participant = 0x01,
    participant_to_server = 0x02,
};

/// First 12 bytes of digest(be32(round) || direction).
Nonce nonce_for(std::uint32_t round, Direction dir);

}  // namespace pqbfl::crypto
