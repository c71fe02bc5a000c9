#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pqbfl/crypto/suite.hpp"
#include "pqbfl/protocol/envelope.hpp"

namespace pqbfl::protocol {

/// Per-party instrumentation. Operation counts follow the cost table of the
/// protocol: `derive` counts symmetric-ratchet KDF calls (two per model key),
/// `root_ratchet` counts root-key derivations (init and asymmetric steps).
struct OpCounters {
    std::uint64_t keygen = 0;
    std::uint64_t encap = 0;
    std::uint64_t decap = 0;
    std::uint64_t derive = 0;
    std::uint64_t sign = 0;
    std::uint64_t verify = 0;
    std::uint64_t dh_agree = 0;
    std::uint64_t root_ratchet = 0;

    std::uint64_t offchain_sent = 0;
    std::uint64_t offchain_received = 0;
    std::uint64_t key_material = 0;  // public keys and ciphertexts sent off-chain
    std::uint64_t onchain = 0;       // transaction payload bytes submitted

    OpCounters operator-(const OpCounters& o) const;
    OpCounters& operator+=(const OpCounters& o);
    friend bool operator==(const OpCounters&, const OpCounters&) = default;
};

enum class Side : std::uint8_t { server, participant };
std::string_view to_string(Side side);

struct TranscriptEntry {
    crypto::Address session{};  // participant address
    Side side = Side::server;
    std::uint32_t round = 0;
    std::uint32_t epoch = 0;
    std::uint32_t step = 0;
    crypto::Direction direction = crypto::Direction::server_to_participant;
    MessageKind kind = MessageKind::task;
    crypto::Digest payload_digest{};
    std::optional<std::uint64_t> block_index;
    std::string key_fp;  // first 8 bytes of a labelled hash of the model key

    friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

std::string key_fingerprint(const crypto::Key32& key);

void write_transcript_jsonl(std::ostream& out, const std::vector<TranscriptEntry>& entries);
/// Throws DecodeError on malformed lines.
std::vector<TranscriptEntry> read_transcript_jsonl(std::istream& in);

/// Full model keys, recorded only when a test asks for them.
struct KeyLogEntry {
    crypto::Address session{};
    Side side = Side::server;
    std::uint32_t round = 0;
    crypto::Key32 key;
};
using KeyLog = std::vector<KeyLogEntry>;

}  // namespace pqbfl::protocol
