#pragma once

#include <cstdint>
#include <optional>

#include "pqbfl/common/bytes.hpp"
#include "pqbfl/crypto/suite.hpp"

// Canonical payload encodings. Integers are big-endian; "var" fields carry a
// u32 length prefix. Decoders throw ProtocolError(MalformedMessage).
namespace pqbfl::protocol {

/// msg_b: kem_pub var | dh_pub var | reg_ref u64 | project u16 | timestamp u64.
struct KeyOffer {
    Bytes kem_public;
    Bytes dh_public;
    std::uint64_t registration_ref = 0;  // block index of RegProject
    std::uint16_t project_id = 0;
    std::uint64_t timestamp = 0;

    Bytes encode() const;
    static KeyOffer decode(ByteView data);
};

/// msg_a: dh_pub var | reg_ref u64 | project u16 | ct var | timestamp u64.
struct KeyReply {
    Bytes dh_public;
    std::uint64_t registration_ref = 0;  // block index of RegClient
    std::uint16_t project_id = 0;
    Bytes ciphertext;
    std::uint64_t timestamp = 0;

    Bytes encode() const;
    static KeyReply decode(ByteView data);
};

/// Encrypted round message: header | u32 len | AEAD output. The header is
/// the AAD.
struct RoundFrame {
    std::uint32_t round = 0;
    std::uint16_t project_id = 0;
    std::uint16_t task_id = 0;
    std::uint64_t timestamp = 0;
    Bytes sealed;

    Bytes header() const;
    Bytes encode() const;
    static RoundFrame decode(ByteView data);
};

struct FreshServerKeys {
    Bytes kem_public;
    Bytes dh_public;
};

struct FreshParticipantKeys {
    Bytes ciphertext;
    Bytes dh_public;
};

/// Inf_b^r: round u32 | has_keys u8 | [kem_pub var | dh_pub var] | model var |
/// project u16 | task u16 | deadline u16.
struct TaskPayload {
    std::uint32_t round = 0;
    std::optional<FreshServerKeys> keys;
    Bytes model;
    std::uint16_t project_id = 0;
    std::uint16_t task_id = 0;
    std::uint16_t deadline = 0;

    Bytes encode() const;
    static TaskPayload decode(ByteView data);
};

/// Inf_a^r: round u32 | has_keys u8 | [ct var | dh_pub var] | model var |
/// project u16 | task u16.
struct UpdatePayload {
    std::uint32_t round = 0;
    std::optional<FreshParticipantKeys> keys;
    Bytes model;
    std::uint16_t project_id = 0;
    std::uint16_t task_id = 0;

    Bytes encode() const;
    static UpdatePayload decode(ByteView data);
};

/// h(kpk || epk) and h(ct || epk).
crypto::Digest key_commitment(ByteView first, ByteView dh_public);

}  // namespace pqbfl::protocol
