#pragma once

#include <cstdint>

#include "pqbfl/common/bytes.hpp"
#include "pqbfl/crypto/suite.hpp"

namespace pqbfl::protocol {

inline constexpr std::uint8_t kEnvelopeVersion = 1;
inline constexpr std::size_t kMaxPayload = 1u << 24;

enum class MessageKind : std::uint8_t { key_offer = 1, key_reply = 2, task = 3, update = 4 };

/// Wire: version u8 | kind u8 | sender 20 | payload_len u32 | payload | sig 64.
/// The signature covers every byte before it.
struct Envelope {
    std::uint8_t version = kEnvelopeVersion;
    MessageKind kind = MessageKind::task;
    crypto::Address sender{};
    Bytes payload;
    crypto::Signature signature{};

    Bytes signed_bytes() const;
    Bytes encode() const;
    /// Throws ProtocolError(MalformedMessage).
    static Envelope decode(ByteView wire);

    /// Byte offset and length of the payload within encode().
    static constexpr std::size_t payload_offset() { return 1 + 1 + 20 + 4; }
};

Envelope seal_envelope(MessageKind kind, const crypto::SigKeyPair& signer, Bytes payload);

}  // namespace pqbfl::protocol
