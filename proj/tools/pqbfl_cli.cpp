#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pqbfl/harness/simulation.hpp"

namespace {

using namespace pqbfl;

struct RunOptions {
    harness::SimConfig cfg;
    std::vector<std::uint32_t> ranges{10};
    std::vector<std::string> scenarios;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("-n,--participants", o.cfg.participants, "Number of participants")->check(CLI::Range(1, 65535));
    cmd->add_option("-r,--rounds", o.cfg.rounds, "Training rounds")->check(CLI::Range(1, 255));
    cmd->add_option("-l,--ratchet-range", o.ranges, "Symmetric range L, or one value per epoch (comma separated)")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.cfg.seed, "Simulation seed");
    cmd->add_option("--dimension", o.cfg.dimension, "Model dimension")->check(CLI::PositiveNumber);
    cmd->add_option("--deposit", o.cfg.deposit, "Project deposit");
    cmd->add_option("--skew", o.cfg.max_skew, "Timestamp skew bound in simulated seconds");
    cmd->add_option("--attack-round", o.cfg.attack_round, "Round targeted by replay and tamper");
    cmd->add_option("--scenario", o.scenarios, "replay, tamper, free-ride or mitm (repeatable)")
        ->delimiter(',')
        ->check([](const std::string& s) {
            return harness::parse_scenario(s) ? std::string() : "unknown scenario '" + s + "'";
        });
}

harness::SimConfig finish_config(const RunOptions& o) {
    harness::SimConfig cfg = o.cfg;
    cfg.ratchet.ranges = o.ranges;
    for (const auto& s : o.scenarios) cfg.scenarios.insert(*harness::parse_scenario(s));
    return cfg;
}

std::vector<protocol::TranscriptEntry> read_transcript(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return protocol::read_transcript_jsonl(in);
}

int cmd_run(const RunOptions& o, const std::string& out_dir) {
    const auto cfg = finish_config(o);
    const auto t0 = std::chrono::steady_clock::now();
    const auto m = harness::run_simulation(cfg);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
    harness::write_run_outputs(m, out_dir);

    const auto server = m.total("server");
    const auto parts = m.total("participant");
    std::cout << "participants=" << cfg.participants << " rounds=" << cfg.rounds << " seed=" << cfg.seed << '\n'
              << "onchain_bytes server=" << server.onchain << " participants=" << parts.onchain << '\n'
              << "key_material_bytes=" << server.key_material + parts.key_material << '\n'
              << "root_ratchets per session=" << (m.server_root_ratchets.empty() ? 0 : m.server_root_ratchets[0])
              << '\n';
    for (const auto& a : m.attacks) {
        std::cout << "attack " << harness::to_string(a.scenario) << " round=" << a.round << " target=" << a.target
                  << " expected=" << a.expected << " observed=" << a.observed
                  << (a.rejected ? " REJECTED" : " NOT-REJECTED") << '\n';
    }
    std::cout << "terminated=" << (m.terminated ? "yes" : "no") << " wall_ms=" << ms.count() << " (informational)\n"
              << "wrote " << out_dir << '\n';
    return m.all_attacks_rejected() && m.terminated ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PQBFL simulation harness"};
    app.require_subcommand(1);

    RunOptions run_opts;
    std::string out_dir = "pqbfl-out";
    auto* run = app.add_subcommand("run", "Run a simulation and write metrics, ledger export and transcripts");
    add_run_options(run, run_opts);
    run->add_option("-o,--out", out_dir, "Output directory");

    RunOptions export_opts;
    std::string export_path;
    auto* exp = app.add_subcommand("export-ledger", "Run a simulation and write only its ledger export");
    add_run_options(exp, export_opts);
    exp->add_option("-o,--out", export_path, "Output file (stdout if omitted)");

    std::string server_path;
    std::string participant_path;
    std::string dir;
    auto* ver = app.add_subcommand("verify-transcripts", "Cross-check server and participant transcripts");
    ver->add_option("--dir", dir, "Run output directory");
    ver->add_option("--server", server_path, "Server transcript file");
    ver->add_option("--participants", participant_path, "Participant transcript file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(run_opts, out_dir);
        if (*exp) {
            const auto m = harness::run_simulation(finish_config(export_opts));
            if (export_path.empty()) {
                std::cout << m.ledger_jsonl;
            } else {
                std::ofstream f(export_path, std::ios::binary | std::ios::trunc);
                if (!f) throw std::runtime_error("cannot write " + export_path);
                f << m.ledger_jsonl;
            }
            return m.all_attacks_rejected() ? 0 : 1;
        }
        if (*ver) {
            if (!dir.empty()) {
                if (server_path.empty()) server_path = dir + "/" + harness::kServerTranscriptFile;
                if (participant_path.empty()) participant_path = dir + "/" + harness::kParticipantTranscriptFile;
            }
            if (server_path.empty() || participant_path.empty()) {
                std::cerr << "verify-transcripts needs --dir or both --server and --participants\n";
                return 2;
            }
            const auto check = harness::verify_transcripts(read_transcript(server_path), read_transcript(participant_path));
            for (const auto& p : check.problems) std::cout << "MISMATCH " << p << '\n';
            std::cout << "matched=" << check.matched << " problems=" << check.problems.size() << '\n';
            return check.ok() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
