#include "pqbfl/protocol/envelope.hpp"

#include "pqbfl/protocol/errors.hpp"

namespace pqbfl::protocol {

std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::BadSignature: return "BadSignature";
        case Errc::AuthFailure: return "AuthFailure";
        case Errc::CommitmentMismatch: return "CommitmentMismatch";
        case Errc::BadReference: return "BadReference";
        case Errc::ReplayDetected: return "ReplayDetected";
        case Errc::UnexpectedRound: return "UnexpectedRound";
        case Errc::StaleTimestamp: return "StaleTimestamp";
        case Errc::StaleDeadline: return "StaleDeadline";
        case Errc::NoActiveTask: return "NoActiveTask";
        case Errc::UnknownClient: return "UnknownClient";
        case Errc::UnknownSender: return "UnknownSender";
        case Errc::SessionNotReady: return "SessionNotReady";
        case Errc::Terminated: return "Terminated";
        case Errc::MalformedMessage: return "MalformedMessage";
        case Errc::InvalidConfig: return "InvalidConfig";
    }
    return "ProtocolError";
}

Bytes Envelope::signed_bytes() const {
    ByteWriter w;
    w.u8(version).u8(static_cast<std::uint8_t>(kind)).raw(sender).var(payload);
    return std::move(w).bytes();
}

Bytes Envelope::encode() const {
    Bytes out = signed_bytes();
    out.insert(out.end(), signature.begin(), signature.end());
    return out;
}

Envelope Envelope::decode(ByteView wire) {
    try {
        ByteReader r(wire);
        Envelope e;
        e.version = r.u8();
        if (e.version != kEnvelopeVersion) throw DecodeError("unsupported envelope version");
        const std::uint8_t kind = r.u8();
        if (kind < 1 || kind > 4) throw DecodeError("unknown message kind");
        e.kind = static_cast<MessageKind>(kind);
        e.sender = r.fixed<20>();
        const ByteView payload = r.var(kMaxPayload);
        e.payload.assign(payload.begin(), payload.end());
        e.signature = r.fixed<crypto::kSignatureBytes>();
        r.expect_end();
        return e;
    } catch (const DecodeError& err) {
        throw ProtocolError(Errc::MalformedMessage, std::string("envelope: ") + err.what());
    }
}

Envelope seal_envelope(MessageKind kind, const crypto::SigKeyPair& signer, Bytes payload) {
    Envelope e;
    e.kind = kind;
    e.sender = signer.address;
    e.payload = std::move(payload);
    e.signature = crypto::sign(signer.secret, e.signed_bytes());
    return e;
}

}  // namespace pqbfl::protocol
