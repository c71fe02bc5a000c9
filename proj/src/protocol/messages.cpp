#include "pqbfl/protocol/messages.hpp"

#include "pqbfl/crypto/kyber768.hpp"
#include "pqbfl/protocol/envelope.hpp"
#include "pqbfl/protocol/errors.hpp"

namespace pqbfl::protocol {

namespace {

template <typename Fn>
auto decoding(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const DecodeError& err) {
        throw ProtocolError(Errc::MalformedMessage, std::string(what) + ": " + err.what());
    }
}

Bytes read_sized(ByteReader& r, std::size_t expected, const char* field) {
    const ByteView v = r.var(kMaxPayload);
    if (v.size() != expected) throw DecodeError(std::string(field) + " has wrong length");
    return Bytes(v.begin(), v.end());
}

Bytes read_var(ByteReader& r) {
    const ByteView v = r.var(kMaxPayload);
    return Bytes(v.begin(), v.end());
}

bool read_flag(ByteReader& r) {
    const std::uint8_t f = r.u8();
    if (f > 1) throw DecodeError("flag byte must be 0 or 1");
    return f == 1;
}

}  // namespace

Bytes KeyOffer::encode() const {
    ByteWriter w;
    w.var(kem_public).var(dh_public).u64(registration_ref).u16(project_id).u64(timestamp);
    return std::move(w).bytes();
}

KeyOffer KeyOffer::decode(ByteView data) {
    return decoding("key offer", [&] {
        ByteReader r(data);
        KeyOffer m;
        m.kem_public = read_sized(r, crypto::kyber768::kPublicKeyBytes, "kem public key");
        m.dh_public = read_sized(r, crypto::kDhPublicBytes, "dh public key");
        m.registration_ref = r.u64();
        m.project_id = r.u16();
        m.timestamp = r.u64();
        r.expect_end();
        return m;
    });
}

Bytes KeyReply::encode() const {
    ByteWriter w;
    w.var(dh_public).u64(registration_ref).u16(project_id).var(ciphertext).u64(timestamp);
    return std::move(w).bytes();
}

KeyReply KeyReply::decode(ByteView data) {
    return decoding("key reply", [&] {
        ByteReader r(data);
        KeyReply m;
        m.dh_public = read_sized(r, crypto::kDhPublicBytes, "dh public key");
        m.registration_ref = r.u64();
        m.project_id = r.u16();
        m.ciphertext = read_sized(r, crypto::kyber768::kCiphertextBytes, "kem ciphertext");
        m.timestamp = r.u64();
        r.expect_end();
        return m;
    });
}

Bytes RoundFrame::header() const {
    ByteWriter w;
    w.u32(round).u16(project_id).u16(task_id).u64(timestamp);
    return std::move(w).bytes();
}

Bytes RoundFrame::encode() const {
    ByteWriter w;
    w.raw(header()).var(sealed);
    return std::move(w).bytes();
}

RoundFrame RoundFrame::decode(ByteView data) {
    return decoding("round frame", [&] {
        ByteReader r(data);
        RoundFrame f;
        f.round = r.u32();
        f.project_id = r.u16();
        f.task_id = r.u16();
        f.timestamp = r.u64();
        f.sealed = read_var(r);
        r.expect_end();
        return f;
    });
}

Bytes TaskPayload::encode() const {
    ByteWriter w;
    w.u32(round).u8(keys ? 1 : 0);
    if (keys) w.var(keys->kem_public).var(keys->dh_public);
    w.var(model).u16(project_id).u16(task_id).u16(deadline);
    return std::move(w).bytes();
}

TaskPayload TaskPayload::decode(ByteView data) {
    return decoding("task payload", [&] {
        ByteReader r(data);
        TaskPayload p;
        p.round = r.u32();
        if (read_flag(r)) {
            FreshServerKeys k;
            k.kem_public = read_sized(r, crypto::kyber768::kPublicKeyBytes, "kem public key");
            k.dh_public = read_sized(r, crypto::kDhPublicBytes, "dh public key");
            p.keys = std::move(k);
        }
        p.model = read_var(r);
        p.project_id = r.u16();
        p.task_id = r.u16();
        p.deadline = r.u16();
        r.expect_end();
        return p;
    });
}

Bytes UpdatePayload::encode() const {
    ByteWriter w;
    w.u32(round).u8(keys ? 1 : 0);
    if (keys) w.var(keys->ciphertext).var(keys->dh_public);
    w.var(model).u16(project_id).u16(task_id);
    return std::move(w).bytes();
}

UpdatePayload UpdatePayload::decode(ByteView data) {
    return decoding("update payload", [&] {
        ByteReader r(data);
        UpdatePayload p;
        p.round = r.u32();
        if (read_flag(r)) {
            FreshParticipantKeys k;
            k.ciphertext = read_sized(r, crypto::kyber768::kCiphertextBytes, "kem ciphertext");
            k.dh_public = read_sized(r, crypto::kDhPublicBytes, "dh public key");
            p.keys = std::move(k);
        }
        p.model = read_var(r);
        p.project_id = r.u16();
        p.task_id = r.u16();
        r.expect_end();
        return p;
    });
}

crypto::Digest key_commitment(ByteView first, ByteView dh_public) { return crypto::digest(concat({first, dh_public})); }

}  // namespace pqbfl::protocol
