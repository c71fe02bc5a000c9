#include "pqbfl/protocol/participant.hpp"

namespace pqbfl::protocol {

namespace {

[[noreturn]] void fail(Errc code, const std::string& detail) { throw ProtocolError(code, detail); }

}  // namespace

Participant::Participant(crypto::SigKeyPair identity, ledger::Ledger& ledger, const ledger::SimClock& clock,
                         crypto::Rng rng, ParticipantConfig config)
    : identity_(std::move(identity)), ledger_(ledger), clock_(clock), rng_(std::move(rng)), config_(std::move(config)) {
    try {
        config_.ratchet.validate();
    } catch (const ratchet::InvalidRatchetConfig& e) {
        fail(Errc::InvalidConfig, e.what());
    }
}

ledger::Event Participant::join(std::uint16_t project_id) {
    if (project_id_) fail(Errc::InvalidConfig, "already joined a project");
    auto dh = crypto::dh_keygen(rng_);
    auto event = ledger_.register_client(identity_.address, ledger::RegisterClientTx{project_id, crypto::digest(dh.public_key)});
    counters_.keygen += 1;
    counters_.onchain += event.onchain_bytes();
    registration_dh_ = std::move(dh);
    registration_block_ = event.block_index;
    project_id_ = project_id;
    server_ = ledger_.project(project_id)->owner;
    return event;
}

void Participant::check_skew(std::uint64_t timestamp) const {
    const std::uint64_t now = clock_.now();
    const std::uint64_t diff = now > timestamp ? now - timestamp : timestamp - now;
    if (diff > config_.max_skew) fail(Errc::StaleTimestamp, std::to_string(diff) + " s skew");
}

void Participant::record(crypto::Direction dir, MessageKind kind, ByteView plaintext,
                         std::optional<std::uint64_t> block, const crypto::Key32* key, std::uint32_t round) {
    TranscriptEntry e;
    e.session = identity_.address;
    e.side = Side::participant;
    e.direction = dir;
    e.kind = kind;
    e.payload_digest = crypto::digest(plaintext);
    e.block_index = block;
    if (key != nullptr && round_key_) {
        e.round = round;
        e.epoch = round_key_->epoch;
        e.step = round_key_->step;
        e.key_fp = key_fingerprint(*key);
        if (key_log_ != nullptr && dir == crypto::Direction::server_to_participant) {
            key_log_->push_back(KeyLogEntry{identity_.address, Side::participant, round, *key});
        }
    }
    transcript_.push_back(std::move(e));
}

Envelope Participant::open_envelope(ByteView wire, MessageKind kind, Errc bad_signature) {
    counters_.offchain_received += wire.size();
    Envelope env = Envelope::decode(wire);
    if (env.kind != kind) fail(Errc::MalformedMessage, "unexpected message kind");
    if (!server_ || env.sender != *server_) fail(Errc::UnknownSender, to_hex(env.sender));
    const auto pub = ledger_.public_key_of(env.sender);
    if (!pub) fail(Errc::UnknownSender, to_hex(env.sender));
    counters_.verify += 1;
    if (!crypto::verify(*pub, env.signed_bytes(), env.signature)) fail(bad_signature, "envelope signature");
    return env;
}

Bytes Participant::handle_keys(ByteView wire) {
    const Envelope env = open_envelope(wire, MessageKind::key_offer, Errc::BadSignature);
    if (ratchet_) fail(Errc::ReplayDetected, "session already established");

    const KeyOffer offer = KeyOffer::decode(env.payload);
    check_skew(offer.timestamp);
    if (offer.project_id != *project_id_) fail(Errc::BadReference, "project id");
    const auto ref = ledger_.event_at(offer.registration_ref);
    if (!ref || ref->kind() != ledger::EventKind::RegProject || ref->sender != env.sender ||
        std::get<ledger::RegisterProjectTx>(ref->tx).project_id != *project_id_) {
        fail(Errc::BadReference, "registration reference " + std::to_string(offer.registration_ref));
    }
    const auto project = ledger_.project(*project_id_);
    if (key_commitment(offer.kem_public, offer.dh_public) != project->h_keys) {
        fail(Errc::CommitmentMismatch, "h(kpk||epk)");
    }

    const auto ss_dh = crypto::dh_agree(registration_dh_->secret, offer.dh_public);
    const auto enc = crypto::kem_encap(offer.kem_public, rng_);
    ratchet_ = ratchet::RatchetState::init_root(enc.secret, ss_dh, config_.ratchet);
    root_ratchets_ += 1;
    counters_.dh_agree += 1;
    counters_.encap += 1;
    counters_.root_ratchet += 1;
    record(crypto::Direction::server_to_participant, MessageKind::key_offer, env.payload, offer.registration_ref,
           nullptr, 0);

    KeyReply reply;
    reply.dh_public = registration_dh_->public_key;
    reply.registration_ref = registration_block_;
    reply.project_id = *project_id_;
    reply.ciphertext = enc.ciphertext;
    reply.timestamp = clock_.now();
    const Bytes payload = reply.encode();
    Bytes out = seal_envelope(MessageKind::key_reply, identity_, payload).encode();
    counters_.sign += 1;
    counters_.offchain_sent += out.size();
    counters_.key_material += reply.dh_public.size() + reply.ciphertext.size();
    record(crypto::Direction::participant_to_server, MessageKind::key_reply, payload, registration_block_, nullptr, 0);
    return out;
}

TaskDelivery Participant::handle_task(ByteView wire) {
    const Envelope env = open_envelope(wire, MessageKind::task, Errc::AuthFailure);
    if (!ratchet_) fail(Errc::SessionNotReady, "no session");
    const RoundFrame frame = RoundFrame::decode(env.payload);
    if (frame.round <= last_round_) fail(Errc::ReplayDetected, "round " + std::to_string(frame.round));
    if (ratchet_->exhausted() || round_key_) fail(Errc::SessionNotReady, "previous round still open");
    if (frame.round != ratchet_->next_round()) fail(Errc::UnexpectedRound, "round " + std::to_string(frame.round));
    if (frame.project_id != *project_id_) fail(Errc::MalformedMessage, "project id");
    check_skew(frame.timestamp);

    auto next = *ratchet_;
    auto key = next.advance_symmetric();
    Bytes plaintext;
    try {
        plaintext = crypto::aead_open(key.bytes, crypto::nonce_for(frame.round, crypto::Direction::server_to_participant),
                                      frame.header(), frame.sealed);
    } catch (const crypto::AuthFailure&) {
        fail(Errc::AuthFailure, "task ciphertext");
    }
    TaskDelivery out;
    try {
        out.payload = TaskPayload::decode(plaintext);
        out.global_model = fl::deserialize_model(out.payload.model);
    } catch (const DecodeError& e) {
        fail(Errc::MalformedMessage, e.what());
    } catch (const fl::ModelError& e) {
        fail(Errc::MalformedMessage, e.what());
    }
    const auto& task = out.payload;
    if (task.round != frame.round || task.project_id != frame.project_id || task.task_id != frame.task_id) {
        fail(Errc::MalformedMessage, "payload does not match frame header");
    }

    const auto onchain = ledger_.task(*project_id_, task.task_id);
    if (!onchain || onchain->owner != *server_) fail(Errc::CommitmentMismatch, "no Task event for this round");
    if (onchain->h_model != crypto::digest(plaintext)) fail(Errc::CommitmentMismatch, "h(Inf_b)");
    if (task.keys.has_value() != onchain->h_keys.has_value() ||
        (task.keys && key_commitment(task.keys->kem_public, task.keys->dh_public) != *onchain->h_keys)) {
        fail(Errc::CommitmentMismatch, "h(kpk||epk)");
    }
    // Fresh keys may only arrive with the last key of an epoch.
    if (task.keys && !next.exhausted()) fail(Errc::UnexpectedRound, "ratchet keys mid-epoch");
    if (clock_.now() > onchain->deadline_at()) fail(Errc::StaleDeadline, "task deadline passed");

    if (task.keys) {
        auto dh = crypto::dh_keygen(rng_);
        auto enc = crypto::kem_encap(task.keys->kem_public, rng_);
        auto ss_dh = crypto::dh_agree(dh.secret, task.keys->dh_public);
        counters_.keygen += 1;
        counters_.encap += 1;
        counters_.dh_agree += 1;
        staged_ = Staged{std::move(enc.ciphertext), std::move(dh), enc.secret, ss_dh};
    }
    ratchet_ = std::move(next);
    round_key_ = key;
    last_round_ = frame.round;
    counters_.derive += 2;
    record(crypto::Direction::server_to_participant, MessageKind::task, plaintext, onchain->block_index, &key.bytes,
           frame.round);
    return out;
}

UpdateSubmission Participant::send_update(const fl::ModelVector& local_model) {
    if (!round_key_) fail(Errc::NoActiveTask, "no task handled for this round");
    const std::uint32_t r = round_key_->round;

    UpdatePayload update;
    update.round = r;
    if (staged_) update.keys = FreshParticipantKeys{staged_->ciphertext, staged_->dh.public_key};
    update.model = fl::serialize_model(local_model);
    update.project_id = *project_id_;
    update.task_id = static_cast<std::uint16_t>(r);
    const Bytes plaintext = update.encode();

    ledger::UpdateModelTx tx;
    tx.round = static_cast<std::uint8_t>(r);
    tx.h_model = crypto::digest(plaintext);
    if (update.keys) tx.h_ct_epk = key_commitment(update.keys->ciphertext, update.keys->dh_public);
    tx.task_id = update.task_id;
    tx.project_id = update.project_id;

    UpdateSubmission out;
    out.event = ledger_.update_model(identity_.address, tx);
    counters_.onchain += out.event.onchain_bytes();

    RoundFrame frame;
    frame.round = r;
    frame.project_id = update.project_id;
    frame.task_id = update.task_id;
    frame.timestamp = clock_.now();
    frame.sealed = crypto::aead_seal(round_key_->bytes, crypto::nonce_for(r, crypto::Direction::participant_to_server),
                                     frame.header(), plaintext);
    out.envelope = seal_envelope(MessageKind::update, identity_, frame.encode()).encode();
    counters_.sign += 1;
    counters_.offchain_sent += out.envelope.size();
    record(crypto::Direction::participant_to_server, MessageKind::update, plaintext, out.event.block_index,
           &round_key_->bytes, r);

    if (staged_) {
        counters_.key_material += update.keys->ciphertext.size() + update.keys->dh_public.size();
        ratchet_->advance_asymmetric(staged_->ss_kem, staged_->ss_dh);
        counters_.root_ratchet += 1;
        root_ratchets_ += 1;
        staged_.reset();
    }
    round_key_.reset();
    return out;
}

}  // namespace pqbfl::protocol
