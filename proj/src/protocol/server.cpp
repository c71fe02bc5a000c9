#include "pqbfl/protocol/server.hpp"

#include <algorithm>

namespace pqbfl::protocol {

namespace {

[[noreturn]] void fail(Errc code, const std::string& detail) { throw ProtocolError(code, detail); }

std::size_t key_bytes(const crypto::KemKeyPair& kem, const crypto::DhKeyPair& dh) {
    return kem.public_key.size() + dh.public_key.size();
}

}  // namespace

Server::Server(crypto::SigKeyPair identity, ledger::Ledger& ledger, const ledger::SimClock& clock, crypto::Rng rng,
               ServerConfig config)
    : identity_(std::move(identity)), ledger_(ledger), clock_(clock), rng_(std::move(rng)), config_(std::move(config)) {
    if (config_.n_clients == 0) fail(Errc::InvalidConfig, "project needs at least one participant");
    if (config_.total_rounds == 0 || config_.total_rounds > 255) {
        fail(Errc::InvalidConfig, "rounds must be in [1, 255]");
    }
    try {
        config_.ratchet.validate();
    } catch (const ratchet::InvalidRatchetConfig& e) {
        fail(Errc::InvalidConfig, e.what());
    }
}

ledger::Event Server::register_project(const fl::ModelVector& initial_model) {
    if (registration_block_) fail(Errc::InvalidConfig, "project already registered");
    kem_ = crypto::kem_keygen(rng_.array<32>());
    dh_ = crypto::dh_keygen(rng_);
    counters_.keygen += 2;

    ledger::RegisterProjectTx tx;
    tx.project_id = config_.project_id;
    tx.n_clients = config_.n_clients;
    tx.h_model = crypto::digest(fl::serialize_model(initial_model));
    tx.h_keys = key_commitment(kem_.public_key, dh_.public_key);
    auto event = ledger_.register_project(identity_.address, config_.deposit, tx);
    registration_block_ = event.block_index;
    submit(event);
    return event;
}

Server::Session& Server::session_for(const crypto::Address& participant, Errc missing) {
    auto it = sessions_.find(participant);
    if (it == sessions_.end()) fail(missing, to_hex(participant));
    return it->second;
}

void Server::check_skew(std::uint64_t timestamp) const {
    const std::uint64_t now = clock_.now();
    const std::uint64_t diff = now > timestamp ? now - timestamp : timestamp - now;
    if (diff > config_.max_skew) fail(Errc::StaleTimestamp, std::to_string(diff) + " s skew");
}

void Server::record(const crypto::Address& peer, crypto::Direction dir, MessageKind kind, ByteView plaintext,
                    std::optional<std::uint64_t> block, const Session& s, const crypto::Key32* key) {
    TranscriptEntry e;
    e.session = peer;
    e.side = Side::server;
    e.direction = dir;
    e.kind = kind;
    e.payload_digest = crypto::digest(plaintext);
    e.block_index = block;
    if (key != nullptr && s.round_key) {
        e.round = s.round_key->round;
        e.epoch = s.round_key->epoch;
        e.step = s.round_key->step;
        e.key_fp = key_fingerprint(*key);
        if (key_log_ != nullptr && dir == crypto::Direction::server_to_participant) {
            key_log_->push_back(KeyLogEntry{peer, Side::server, e.round, *key});
        }
    }
    transcript_.push_back(std::move(e));
}

Bytes Server::send_keys(const crypto::Address& participant) {
    if (!registration_block_) fail(Errc::SessionNotReady, "project not registered");
    if (round_ > 0) fail(Errc::SessionNotReady, "establishment after the first round");
    auto client = ledger_.client(participant);
    if (!client || client->project_id != config_.project_id) fail(Errc::UnknownClient, to_hex(participant));

    KeyOffer offer;
    offer.kem_public = kem_.public_key;
    offer.dh_public = dh_.public_key;
    offer.registration_ref = *registration_block_;
    offer.project_id = config_.project_id;
    offer.timestamp = clock_.now();
    const Bytes payload = offer.encode();
    const Bytes wire = seal_envelope(MessageKind::key_offer, identity_, payload).encode();

    auto& s = sessions_[participant];
    s.offered = true;
    counters_.sign += 1;
    counters_.offchain_sent += wire.size();
    counters_.key_material += key_bytes(kem_, dh_);
    record(participant, crypto::Direction::server_to_participant, MessageKind::key_offer, payload,
           registration_block_, s, nullptr);
    return wire;
}

Envelope Server::open_envelope(ByteView wire, MessageKind kind, Errc bad_signature, Session*& session) {
    counters_.offchain_received += wire.size();
    Envelope env = Envelope::decode(wire);
    if (env.kind != kind) fail(Errc::MalformedMessage, "unexpected message kind");

    auto client = ledger_.client(env.sender);
    auto it = sessions_.find(env.sender);
    if (!client || client->project_id != config_.project_id || it == sessions_.end()) {
        fail(Errc::UnknownClient, to_hex(env.sender));
    }
    session = &it->second;
    const auto pub = ledger_.public_key_of(env.sender);
    if (!pub) fail(Errc::UnknownClient, to_hex(env.sender));
    counters_.verify += 1;
    if (!crypto::verify(*pub, env.signed_bytes(), env.signature)) fail(bad_signature, "envelope signature");
    return env;
}

void Server::handle_key_response(ByteView wire) {
    Session* s = nullptr;
    const Envelope env = open_envelope(wire, MessageKind::key_reply, Errc::BadSignature, s);
    if (s->ratchet) fail(Errc::ReplayDetected, "session already established");

    const KeyReply reply = KeyReply::decode(env.payload);
    check_skew(reply.timestamp);
    if (reply.project_id != config_.project_id) fail(Errc::BadReference, "project id");
    const auto ref = ledger_.event_at(reply.registration_ref);
    if (!ref || ref->kind() != ledger::EventKind::RegClient || ref->sender != env.sender ||
        std::get<ledger::RegisterClientTx>(ref->tx).project_id != config_.project_id) {
        fail(Errc::BadReference, "registration reference " + std::to_string(reply.registration_ref));
    }
    const auto client = ledger_.client(env.sender);
    if (crypto::digest(reply.dh_public) != client->h_epk) fail(Errc::CommitmentMismatch, "h(epk_a)");

    const auto ss_kem = crypto::kem_decap(kem_.secret, reply.ciphertext);
    const auto ss_dh = crypto::dh_agree(dh_.secret, reply.dh_public);
    s->ratchet = ratchet::RatchetState::init_root(ss_kem, ss_dh, config_.ratchet);
    s->root_ratchets += 1;
    counters_.decap += 1;
    counters_.dh_agree += 1;
    counters_.root_ratchet += 1;
    record(env.sender, crypto::Direction::participant_to_server, MessageKind::key_reply, env.payload,
           reply.registration_ref, *s, nullptr);
}

RoundPublish Server::publish_round(const fl::ModelVector& global_model, std::uint16_t deadline) {
    if (terminated_) fail(Errc::Terminated, "project terminated");
    if (round_ >= config_.total_rounds) fail(Errc::UnexpectedRound, "all rounds published");
    if (sessions_.empty()) fail(Errc::SessionNotReady, "no sessions");
    for (const auto& [addr, s] : sessions_) {
        if (!s.ratchet || s.ratchet->exhausted()) fail(Errc::SessionNotReady, to_hex(addr));
    }
    if (fresh_kem_) {
        kem_ = std::move(*fresh_kem_);
        dh_ = std::move(*fresh_dh_);
        fresh_kem_.reset();
        fresh_dh_.reset();
    }

    const std::uint32_t r = round_ + 1;
    std::map<crypto::Address, ratchet::RatchetState> next;
    std::map<crypto::Address, ratchet::ModelKey> keys;
    bool exhausts = false;
    for (const auto& [addr, s] : sessions_) {
        auto copy = *s.ratchet;
        auto key = copy.advance_symmetric();
        if (key.round != r) fail(Errc::UnexpectedRound, "session " + to_hex(addr) + " out of step");
        exhausts = copy.exhausted();
        next.emplace(addr, std::move(copy));
        keys.emplace(addr, std::move(key));
    }

    RoundPublish out;
    out.ratchet_round = exhausts && r < config_.total_rounds;
    std::optional<crypto::KemKeyPair> kem;
    std::optional<crypto::DhKeyPair> dh;
    TaskPayload task;
    task.round = r;
    if (out.ratchet_round) {
        kem = crypto::kem_keygen(rng_.array<32>());
        dh = crypto::dh_keygen(rng_);
        task.keys = FreshServerKeys{kem->public_key, dh->public_key};
    }
    task.model = fl::serialize_model(global_model);
    task.project_id = config_.project_id;
    task.task_id = static_cast<std::uint16_t>(r);
    task.deadline = deadline;
    const Bytes plaintext = task.encode();

    ledger::PublishTaskTx tx;
    tx.round = static_cast<std::uint8_t>(r);
    tx.h_model = crypto::digest(plaintext);
    if (task.keys) tx.h_keys = key_commitment(task.keys->kem_public, task.keys->dh_public);
    tx.task_id = task.task_id;
    tx.project_id = config_.project_id;
    tx.deadline = deadline;
    out.event = ledger_.publish_task(identity_.address, tx);
    submit(out.event);

    if (out.ratchet_round) {
        counters_.keygen += 2;
        fresh_kem_ = std::move(kem);
        fresh_dh_ = std::move(dh);
    }
    for (auto& [addr, s] : sessions_) {
        const auto& key = keys.at(addr);
        RoundFrame frame;
        frame.round = r;
        frame.project_id = config_.project_id;
        frame.task_id = task.task_id;
        frame.timestamp = clock_.now();
        frame.sealed = crypto::aead_seal(key.bytes, crypto::nonce_for(r, crypto::Direction::server_to_participant),
                                         frame.header(), plaintext);
        Bytes wire = seal_envelope(MessageKind::task, identity_, frame.encode()).encode();

        s.ratchet = std::move(next.at(addr));
        s.round_key = key;
        counters_.derive += 2;
        counters_.sign += 1;
        counters_.offchain_sent += wire.size();
        if (task.keys) counters_.key_material += key_bytes(*fresh_kem_, *fresh_dh_);
        record(addr, crypto::Direction::server_to_participant, MessageKind::task, plaintext, out.event.block_index, s,
               &key.bytes);
        out.envelopes.emplace(addr, std::move(wire));
    }
    round_ = r;
    return out;
}

fl::ModelVector Server::handle_update(ByteView wire) {
    Session* s = nullptr;
    const Envelope env = open_envelope(wire, MessageKind::update, Errc::AuthFailure, s);
    const RoundFrame frame = RoundFrame::decode(env.payload);
    if (frame.round <= s->last_update_round) fail(Errc::ReplayDetected, "round " + std::to_string(frame.round));
    if (frame.round != round_ || !s->round_key) fail(Errc::UnexpectedRound, "round " + std::to_string(frame.round));
    if (frame.project_id != config_.project_id || frame.task_id != round_) {
        fail(Errc::MalformedMessage, "frame header does not match the open task");
    }
    check_skew(frame.timestamp);

    Bytes plaintext;
    try {
        plaintext = crypto::aead_open(s->round_key->bytes,
                                      crypto::nonce_for(frame.round, crypto::Direction::participant_to_server),
                                      frame.header(), frame.sealed);
    } catch (const crypto::AuthFailure&) {
        fail(Errc::AuthFailure, "update ciphertext");
    }
    UpdatePayload update;
    fl::ModelVector model;
    try {
        update = UpdatePayload::decode(plaintext);
        model = fl::deserialize_model(update.model);
    } catch (const DecodeError& e) {
        fail(Errc::MalformedMessage, e.what());
    } catch (const fl::ModelError& e) {
        fail(Errc::MalformedMessage, e.what());
    }
    if (update.round != frame.round || update.project_id != frame.project_id || update.task_id != frame.task_id) {
        fail(Errc::MalformedMessage, "payload does not match frame header");
    }

    const auto onchain = ledger_.update(config_.project_id, frame.task_id, env.sender);
    if (!onchain) fail(Errc::CommitmentMismatch, "no Update event for this round");
    if (onchain->h_model != crypto::digest(plaintext)) fail(Errc::CommitmentMismatch, "h(Inf_a)");
    const bool expect_keys = fresh_kem_ && s->ratchet->exhausted();
    if (update.keys.has_value() != expect_keys) fail(Errc::UnexpectedRound, "ratchet keys on the wrong round");
    if (update.keys.has_value() != onchain->h_ct_epk.has_value()) fail(Errc::CommitmentMismatch, "h(ct||epk)");

    std::optional<ratchet::RatchetState> next;
    if (update.keys) {
        if (key_commitment(update.keys->ciphertext, update.keys->dh_public) != *onchain->h_ct_epk) {
            fail(Errc::CommitmentMismatch, "h(ct||epk)");
        }
        const auto ss_kem = crypto::kem_decap(fresh_kem_->secret, update.keys->ciphertext);
        const auto ss_dh = crypto::dh_agree(fresh_dh_->secret, update.keys->dh_public);
        next = *s->ratchet;
        next->advance_asymmetric(ss_kem, ss_dh);
        counters_.decap += 1;
        counters_.dh_agree += 1;
        counters_.root_ratchet += 1;
        s->root_ratchets += 1;
    }

    record(env.sender, crypto::Direction::participant_to_server, MessageKind::update, plaintext, onchain->block_index,
           *s, &s->round_key->bytes);
    if (next) s->ratchet = std::move(next);
    s->last_update_round = frame.round;
    s->round_key.reset();
    return model;
}

ledger::Event Server::feedback(const crypto::Address& client, std::int16_t score_delta, bool terminate,
                               const fl::ModelVector& next_global) {
    if (terminated_) fail(Errc::Terminated, "project terminated");
    if (round_ == 0) fail(Errc::NoActiveTask, "no round published");
    ledger::FeedbackModelTx tx;
    tx.round = static_cast<std::uint8_t>(round_);
    tx.project_id = config_.project_id;
    tx.task_id = static_cast<std::uint16_t>(round_);
    tx.h_model = crypto::digest(fl::serialize_model(next_global));
    tx.h_keys = key_commitment(kem_.public_key, dh_.public_key);
    tx.client = client;
    tx.score_delta = score_delta;
    tx.terminate = terminate;
    auto event = ledger_.feedback_model(identity_.address, tx);
    submit(event);
    if (terminate) terminated_ = true;
    return event;
}

ledger::Event Server::finish() {
    auto event = ledger_.finish_project(identity_.address, ledger::FinishProjectTx{config_.project_id});
    submit(event);
    terminated_ = true;
    return event;
}

bool Server::session_ready(const crypto::Address& participant) const {
    auto it = sessions_.find(participant);
    return it != sessions_.end() && it->second.ratchet && !it->second.ratchet->exhausted();
}

std::vector<crypto::Address> Server::sessions() const {
    std::vector<crypto::Address> out;
    for (const auto& [addr, s] : sessions_) out.push_back(addr);
    return out;
}

std::uint32_t Server::epoch_of(const crypto::Address& participant) const {
    auto it = sessions_.find(participant);
    return it == sessions_.end() || !it->second.ratchet ? 0 : it->second.ratchet->epoch();
}

std::uint64_t Server::root_ratchets(const crypto::Address& participant) const {
    auto it = sessions_.find(participant);
    return it == sessions_.end() ? 0 : it->second.root_ratchets;
}

std::optional<ratchet::RatchetState> Server::ratchet_of(const crypto::Address& participant) const {
    auto it = sessions_.find(participant);
    if (it == sessions_.end()) return std::nullopt;
    return it->second.ratchet;
}

}  // namespace pqbfl::protocol
