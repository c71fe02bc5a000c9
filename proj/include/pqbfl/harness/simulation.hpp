#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqbfl/fl/model.hpp"
#include "pqbfl/harness/channel.hpp"
#include "pqbfl/protocol/transcript.hpp"
#include "pqbfl/ratchet/ratchet.hpp"

namespace pqbfl::harness {

/// An honest step failed, or the configuration is unusable.
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimConfig {
    std::uint32_t participants = 5;
    std::uint32_t rounds = 30;
    ratchet::RatchetConfig ratchet = ratchet::RatchetConfig::fixed(10);
    std::size_t dimension = fl::kDefaultDimension;
    std::uint64_t seed = 1;
    std::uint64_t deposit = 1000;
    std::set<Scenario> scenarios;
    std::uint64_t max_skew = 300;
    std::uint16_t deadline = 600;
    std::uint32_t attack_round = 2;  // clamped to the last round
    double noise_scale = 0.01;
    bool record_keys = false;

    void validate() const;
};

struct MetricsRow {
    std::uint32_t round = 0;
    std::string party;  // "server" or "participant:<i>", i from 1
    protocol::OpCounters counters;
};

struct AttackOutcome {
    Scenario scenario = Scenario::replay;
    std::uint32_t round = 0;
    std::string target;
    std::string expected;
    std::string observed;  // error name, "accepted", or the leak-scan verdict
    bool rejected = false;
};

struct RunMetrics {
    SimConfig config;
    std::vector<MetricsRow> rows;  // rounds 0..R; server first, then participants
    std::vector<AttackOutcome> attacks;
    std::vector<protocol::TranscriptEntry> server_transcript;
    std::vector<protocol::TranscriptEntry> participant_transcript;
    protocol::KeyLog key_log;  // only with record_keys
    std::vector<std::uint64_t> server_root_ratchets;       // per session
    std::vector<std::uint64_t> participant_root_ratchets;  // per participant
    std::vector<std::size_t> accepted_updates;             // per round, index 0 unused
    std::string ledger_jsonl;
    fl::ModelVector final_model;
    bool terminated = false;

    bool all_attacks_rejected() const;
    protocol::OpCounters total(const std::string& party_prefix = "") const;
};

RunMetrics run_simulation(const SimConfig& config);

inline constexpr const char* kMetricsHeader =
    "round,party,offchain_bytes_sent,offchain_bytes_received,key_material_bytes,onchain_bytes,keygen,encap,decap,"
    "derive,sign,verify,dh_agree,root_ratchet";

void write_metrics_csv(std::ostream& out, const RunMetrics& metrics);

struct TranscriptCheck {
    std::size_t matched = 0;
    std::vector<std::string> problems;
    bool ok() const { return problems.empty() && matched > 0; }
};

/// Pairs server and participant entries by (session, kind, direction, round)
/// and compares payload digest, block reference and key fingerprint.
TranscriptCheck verify_transcripts(const std::vector<protocol::TranscriptEntry>& server,
                                   const std::vector<protocol::TranscriptEntry>& participants);

inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kLedgerFile = "ledger.jsonl";
inline constexpr const char* kServerTranscriptFile = "transcript_server.jsonl";
inline constexpr const char* kParticipantTranscriptFile = "transcript_participants.jsonl";

/// Writes the four files above into dir (created if missing).
void write_run_outputs(const RunMetrics& metrics, const std::filesystem::path& dir);

}  // namespace pqbfl::harness
