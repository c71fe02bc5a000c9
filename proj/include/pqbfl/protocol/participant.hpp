#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pqbfl/crypto/suite.hpp"
#include "pqbfl/fl/model.hpp"
#include "pqbfl/ledger/ledger.hpp"
#include "pqbfl/protocol/errors.hpp"
#include "pqbfl/protocol/messages.hpp"
#include "pqbfl/protocol/transcript.hpp"
#include "pqbfl/ratchet/ratchet.hpp"

namespace pqbfl::protocol {

struct ParticipantConfig {
    ratchet::RatchetConfig ratchet;  // project parameter, known before joining
    std::uint64_t max_skew = 300;
};

struct TaskDelivery {
    TaskPayload payload;
    fl::ModelVector global_model;
};

struct UpdateSubmission {
    ledger::Event event;
    Bytes envelope;
};

/// Alice: one session with the project's server.
class Participant {
public:
    Participant(crypto::SigKeyPair identity, ledger::Ledger& ledger, const ledger::SimClock& clock, crypto::Rng rng,
                ParticipantConfig config);

    const crypto::Address& address() const { return identity_.address; }

    /// Generates the registration DH key and submits RegisterClient.
    ledger::Event join(std::uint16_t project_id);
    /// Checks msg_b against the chain, derives RK_1 and returns msg_a.
    Bytes handle_keys(ByteView wire);
    TaskDelivery handle_task(ByteView wire);
    UpdateSubmission send_update(const fl::ModelVector& local_model);

    bool established() const { return ratchet_.has_value(); }
    std::uint32_t last_round() const { return last_round_; }
    std::uint32_t epoch() const { return ratchet_ ? ratchet_->epoch() : 0; }
    std::uint64_t root_ratchets() const { return root_ratchets_; }
    const std::optional<ratchet::RatchetState>& ratchet_state() const { return ratchet_; }

    const OpCounters& counters() const { return counters_; }
    const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
    void set_key_log(KeyLog* log) { key_log_ = log; }

private:
    struct Staged {
        Bytes ciphertext;
        crypto::DhKeyPair dh;
        crypto::SharedSecret ss_kem;
        crypto::SharedSecret ss_dh;
    };

    Envelope open_envelope(ByteView wire, MessageKind kind, Errc bad_signature);
    void check_skew(std::uint64_t timestamp) const;
    void record(crypto::Direction dir, MessageKind kind, ByteView plaintext, std::optional<std::uint64_t> block,
                const crypto::Key32* key, std::uint32_t round);

    crypto::SigKeyPair identity_;
    ledger::Ledger& ledger_;
    const ledger::SimClock& clock_;
    crypto::Rng rng_;
    ParticipantConfig config_;

    std::optional<std::uint16_t> project_id_;
    std::optional<crypto::Address> server_;
    std::optional<crypto::DhKeyPair> registration_dh_;
    std::uint64_t registration_block_ = 0;

    std::optional<ratchet::RatchetState> ratchet_;
    std::optional<ratchet::ModelKey> round_key_;
    std::optional<Staged> staged_;
    std::uint32_t last_round_ = 0;
    std::uint64_t root_ratchets_ = 0;

    OpCounters counters_;
    std::vector<TranscriptEntry> transcript_;
    KeyLog* key_log_ = nullptr;
};

}  // namespace pqbfl::protocol
