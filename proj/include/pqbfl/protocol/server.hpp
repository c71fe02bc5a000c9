#pragma once

#include <cstdint>
#include <map>
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

struct ServerConfig {
    std::uint16_t project_id = 1;
    std::uint16_t n_clients = 1;
    std::uint32_t total_rounds = 1;  // fits the 1-byte on-chain round field
    ratchet::RatchetConfig ratchet;
    std::uint64_t deposit = 1000;
    std::uint64_t max_skew = 300;
};

struct RoundPublish {
    ledger::Event event;
    std::map<crypto::Address, Bytes> envelopes;  // one per session
    bool ratchet_round = false;
};

/// Bob: owns the project, one ratchet session per participant.
class Server {
public:
    Server(crypto::SigKeyPair identity, ledger::Ledger& ledger, const ledger::SimClock& clock, crypto::Rng rng,
           ServerConfig config);

    const crypto::Address& address() const { return identity_.address; }
    const crypto::SigKeyPair& identity() const { return identity_; }
    const ServerConfig& config() const { return config_; }

    /// Generates the epoch-1 KEM/DH keys and submits RegisterProject.
    ledger::Event register_project(const fl::ModelVector& initial_model);

    /// msg_b for a registered participant.
    Bytes send_keys(const crypto::Address& participant);
    /// Consumes msg_a and establishes RK_1.
    void handle_key_response(ByteView wire);

    /// Seals Inf_b^r for every session and submits PublishTask.
    RoundPublish publish_round(const fl::ModelVector& global_model, std::uint16_t deadline);
    /// Authenticates, decrypts and checks an update against its Update event.
    fl::ModelVector handle_update(ByteView wire);
    ledger::Event feedback(const crypto::Address& client, std::int16_t score_delta, bool terminate,
                           const fl::ModelVector& next_global);
    ledger::Event finish();

    std::uint32_t round() const { return round_; }
    bool terminated() const { return terminated_; }
    bool session_ready(const crypto::Address& participant) const;
    std::vector<crypto::Address> sessions() const;
    std::uint32_t epoch_of(const crypto::Address& participant) const;
    std::uint64_t root_ratchets(const crypto::Address& participant) const;
    std::optional<ratchet::RatchetState> ratchet_of(const crypto::Address& participant) const;

    const OpCounters& counters() const { return counters_; }
    const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
    void set_key_log(KeyLog* log) { key_log_ = log; }

private:
    struct Session {
        std::optional<ratchet::RatchetState> ratchet;
        std::optional<ratchet::ModelKey> round_key;
        std::uint32_t last_update_round = 0;
        std::uint64_t root_ratchets = 0;
        bool offered = false;
    };

    Session& session_for(const crypto::Address& participant, Errc missing);
    Envelope open_envelope(ByteView wire, MessageKind kind, Errc bad_signature, Session*& session);
    void check_skew(std::uint64_t timestamp) const;
    void record(const crypto::Address& peer, crypto::Direction dir, MessageKind kind, ByteView plaintext,
                std::optional<std::uint64_t> block, const Session& s, const crypto::Key32* key);
    void submit(const ledger::Event& e) { counters_.onchain += e.onchain_bytes(); }

    crypto::SigKeyPair identity_;
    ledger::Ledger& ledger_;
    const ledger::SimClock& clock_;
    crypto::Rng rng_;
    ServerConfig config_;

    crypto::KemKeyPair kem_;
    crypto::DhKeyPair dh_;
    std::optional<crypto::KemKeyPair> fresh_kem_;
    std::optional<crypto::DhKeyPair> fresh_dh_;
    std::optional<std::uint64_t> registration_block_;

    std::map<crypto::Address, Session> sessions_;
    std::uint32_t round_ = 0;
    bool terminated_ = false;

    OpCounters counters_;
    std::vector<TranscriptEntry> transcript_;
    KeyLog* key_log_ = nullptr;
};

}  // namespace pqbfl::protocol
