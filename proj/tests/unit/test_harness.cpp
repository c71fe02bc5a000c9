#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "pqbfl/harness/simulation.hpp"

using namespace pqbfl;
using namespace pqbfl::harness;

namespace {

SimConfig small(std::uint32_t n, std::uint32_t r, std::uint32_t l, std::uint64_t seed = 1) {
    SimConfig c;
    c.participants = n;
    c.rounds = r;
    c.ratchet = ratchet::RatchetConfig::fixed(l);
    c.seed = seed;
    c.dimension = 16;
    return c;
}

std::map<std::string, int> event_kinds(const RunMetrics& m) {
    std::map<std::string, int> out;
    std::istringstream in(m.ledger_jsonl);
    std::string line;
    while (std::getline(in, line)) out[nlohmann::json::parse(line).at("kind").get<std::string>()]++;
    return out;
}

std::string csv(const RunMetrics& m) {
    std::ostringstream out;
    write_metrics_csv(out, m);
    return out.str();
}

std::string transcript(const std::vector<protocol::TranscriptEntry>& t) {
    std::ostringstream out;
    protocol::write_transcript_jsonl(out, t);
    return out.str();
}

}  // namespace

TEST(Simulation, SmallestRunHasOneOfEachTransaction) {
    const auto m = run_simulation(small(1, 1, 1));
    const auto kinds = event_kinds(m);
    for (const char* k : {"RegProject", "RegClient", "Task", "Update", "Feedback", "ProjectTerminate"}) {
        EXPECT_EQ(kinds.at(k), 1) << k;
    }
    EXPECT_TRUE(m.terminated);
    EXPECT_EQ(m.rows.size(), 4u);
    EXPECT_EQ(m.server_root_ratchets, (std::vector<std::uint64_t>{1}));
}

TEST(Simulation, RowsCoverEveryRoundAndParty) {
    const auto m = run_simulation(small(3, 5, 2));
    ASSERT_EQ(m.rows.size(), 6u * 4u);
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        EXPECT_EQ(m.rows[i].round, i / 4);
        EXPECT_EQ(m.rows[i].party, i % 4 == 0 ? "server" : "participant:" + std::to_string(i % 4));
    }
    const auto text = csv(m);
    EXPECT_EQ(text.substr(0, text.find('\n')), kMetricsHeader);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 25);
}

TEST(Simulation, OnchainTotalsFollowTheSizeFormulas) {
    // Registration 100 B, each round 148 B, finish 2 B.
    EXPECT_EQ(run_simulation(small(1, 5, 10)).total().onchain, 100u + 5 * 148 + 2);
    // One ratchet round (round 2 of 4 with L=2) adds two 32-byte key commitments.
    EXPECT_EQ(run_simulation(small(1, 4, 2)).total().onchain, 100u + 4 * 148 + 64 + 2);
}

TEST(Simulation, ServerPutsMoreOnChainThanAnyParticipant) {
    for (auto [n, r, l] : {std::tuple{1u, 1u, 1u}, {2u, 6u, 3u}, {4u, 10u, 4u}, {6u, 3u, 10u}}) {
        const auto m = run_simulation(small(n, r, l));
        const auto server = m.total("server").onchain;
        EXPECT_GT(server, m.total("participant").onchain);
        for (std::uint32_t i = 1; i <= n; ++i) {
            EXPECT_GT(server, m.total("participant:" + std::to_string(i)).onchain);
        }
    }
}

TEST(Simulation, KeyMaterialFallsAsTheRangeGrows) {
    std::uint64_t previous = UINT64_MAX;
    for (std::uint32_t l : {1u, 2u, 3u, 4u, 6u, 8u, 12u, 24u}) {
        const auto m = run_simulation(small(2, 24, l));
        const auto bytes = m.total().key_material;
        EXPECT_LT(bytes, previous) << "L=" << l;
        previous = bytes;
    }
}

TEST(Simulation, SameSeedSameFiles) {
    auto cfg = small(3, 7, 3, 42);
    cfg.scenarios = {Scenario::replay, Scenario::tamper, Scenario::mitm, Scenario::free_ride};
    const auto a = run_simulation(cfg);
    const auto b = run_simulation(cfg);
    EXPECT_EQ(csv(a), csv(b));
    EXPECT_EQ(a.ledger_jsonl, b.ledger_jsonl);
    EXPECT_EQ(transcript(a.server_transcript), transcript(b.server_transcript));
    EXPECT_EQ(transcript(a.participant_transcript), transcript(b.participant_transcript));

    cfg.seed = 43;
    EXPECT_NE(run_simulation(cfg).ledger_jsonl, a.ledger_jsonl);
}

TEST(Simulation, EveryScenarioIsRejectedAndTheRunFinishes) {
    for (auto s : {Scenario::replay, Scenario::tamper, Scenario::mitm, Scenario::free_ride}) {
        auto cfg = small(2, 4, 2, 5);
        cfg.scenarios = {s};
        const auto m = run_simulation(cfg);
        EXPECT_FALSE(m.attacks.empty()) << to_string(s);
        EXPECT_TRUE(m.all_attacks_rejected()) << to_string(s);
        EXPECT_TRUE(m.terminated);
        for (const auto& a : m.attacks) EXPECT_EQ(a.scenario, s);
        for (std::uint32_t r = 1; r <= cfg.rounds; ++r) EXPECT_EQ(m.accepted_updates[r], 2u);
        EXPECT_TRUE(verify_transcripts(m.server_transcript, m.participant_transcript).ok());
    }
}

TEST(Simulation, InvalidConfigurations) {
    EXPECT_THROW(run_simulation(small(0, 1, 1)), SimulationError);
    EXPECT_THROW(run_simulation(small(1, 0, 1)), SimulationError);
    EXPECT_THROW(run_simulation(small(1, 256, 1)), SimulationError);
    EXPECT_THROW(run_simulation(small(1, 1, 0)), SimulationError);
    auto cfg = small(1, 1, 1);
    cfg.dimension = 0;
    EXPECT_THROW(run_simulation(cfg), SimulationError);
}

TEST(Simulation, ScenarioNames) {
    for (auto s : {Scenario::replay, Scenario::tamper, Scenario::mitm, Scenario::free_ride}) {
        EXPECT_EQ(parse_scenario(to_string(s)), s);
    }
    EXPECT_FALSE(parse_scenario("ddos"));
}

TEST(TranscriptCheck, FlagsDivergence) {
    const auto m = run_simulation(small(2, 3, 2));
    ASSERT_TRUE(verify_transcripts(m.server_transcript, m.participant_transcript).ok());

    auto changed = m.participant_transcript;
    changed.back().payload_digest[0] ^= 1;
    EXPECT_FALSE(verify_transcripts(m.server_transcript, changed).ok());

    auto wrong_key = m.participant_transcript;
    for (auto& e : wrong_key) {
        if (!e.key_fp.empty()) {
            e.key_fp = "0000000000000000";
            break;
        }
    }
    EXPECT_FALSE(verify_transcripts(m.server_transcript, wrong_key).ok());

    auto missing = m.server_transcript;
    missing.pop_back();
    EXPECT_FALSE(verify_transcripts(missing, m.participant_transcript).ok());
}

TEST(Outputs, WritesFourFilesAndRejectsBadPaths) {
    const auto dir = std::filesystem::temp_directory_path() / "pqbfl_harness_test";
    std::filesystem::remove_all(dir);
    const auto m = run_simulation(small(1, 2, 1));
    write_run_outputs(m, dir);
    for (const char* f : {kMetricsFile, kLedgerFile, kServerTranscriptFile, kParticipantTranscriptFile}) {
        EXPECT_GT(std::filesystem::file_size(dir / f), 0u) << f;
    }
    std::ifstream in(dir / kServerTranscriptFile);
    EXPECT_EQ(protocol::read_transcript_jsonl(in), m.server_transcript);

    const auto blocker = dir / "not_a_dir";
    std::ofstream(blocker) << "x";
    EXPECT_THROW(write_run_outputs(m, blocker / "sub"), SimulationError);
    std::filesystem::remove_all(dir);
}
