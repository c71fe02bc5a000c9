#include "pqbfl/harness/simulation.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <tuple>

#include "pqbfl/ledger/ledger.hpp"
#include "pqbfl/protocol/participant.hpp"
#include "pqbfl/protocol/server.hpp"

namespace pqbfl::harness {

using protocol::Errc;
using protocol::MessageKind;
using protocol::ProtocolError;

void SimConfig::validate() const {
    if (participants == 0 || participants > 0xFFFF) throw SimulationError("participants must be in [1, 65535]");
    if (rounds == 0 || rounds > 255) throw SimulationError("rounds must be in [1, 255]");
    if (dimension == 0) throw SimulationError("model dimension must be positive");
    try {
        ratchet.validate();
    } catch (const ratchet::InvalidRatchetConfig& e) {
        throw SimulationError(e.what());
    }
}

bool RunMetrics::all_attacks_rejected() const {
    return std::all_of(attacks.begin(), attacks.end(), [](const AttackOutcome& a) { return a.rejected; });
}

protocol::OpCounters RunMetrics::total(const std::string& party_prefix) const {
    protocol::OpCounters sum;
    for (const auto& row : rows) {
        if (row.party.compare(0, party_prefix.size(), party_prefix) == 0) sum += row.counters;
    }
    return sum;
}

namespace {

constexpr std::uint16_t kProjectId = 1;
constexpr std::uint64_t kStartTime = 1'000'000;
constexpr std::uint64_t kRoundGap = 10;

std::string expected_for(Scenario s) {
    switch (s) {
        case Scenario::replay: return std::string(protocol::to_string(Errc::ReplayDetected));
        case Scenario::tamper: return std::string(protocol::to_string(Errc::AuthFailure));
        case Scenario::mitm: return std::string(protocol::to_string(Errc::CommitmentMismatch));
        case Scenario::free_ride: return "no-plaintext-leak";
    }
    return "";
}

std::string participant_label(std::size_t i) { return "participant:" + std::to_string(i + 1); }

class Run {
public:
    explicit Run(const SimConfig& config)
        : cfg_(config),
          clock_(kStartTime),
          ledger_(clock_, ledger::LedgerConfig{config.deposit}),
          rng_(crypto::Rng::from_u64(config.seed)),
          channel_(config.scenarios, std::min(config.attack_round, config.rounds), rng_.fork("channel")) {
        auto server_rng = rng_.fork("server-identity");
        auto server_id = crypto::sig_keygen(server_rng);
        ledger_.open_account(server_id.public_key, config.deposit);
        protocol::ServerConfig sc;
        sc.project_id = kProjectId;
        sc.n_clients = static_cast<std::uint16_t>(config.participants);
        sc.total_rounds = config.rounds;
        sc.ratchet = config.ratchet;
        sc.deposit = config.deposit;
        sc.max_skew = config.max_skew;
        server_ = std::make_unique<protocol::Server>(server_id, ledger_, clock_, rng_.fork("server"), sc);
        channel_.set_forger(&server_->identity());

        for (std::uint32_t i = 0; i < config.participants; ++i) {
            const std::string tag = std::to_string(i);
            auto id_rng = rng_.fork("participant-identity-" + tag);
            auto id = crypto::sig_keygen(id_rng);
            ledger_.open_account(id.public_key, 0);
            participants_.push_back(std::make_unique<protocol::Participant>(
                id, ledger_, clock_, rng_.fork("participant-" + tag),
                protocol::ParticipantConfig{config.ratchet, config.max_skew}));
            train_seeds_.push_back(rng_.fork("train-" + tag).next_u64());
        }
        if (config.record_keys) {
            server_->set_key_log(&out_.key_log);
            for (auto& p : participants_) p->set_key_log(&out_.key_log);
        }
    }

    RunMetrics execute() {
        out_.config = cfg_;
        out_.accepted_updates.assign(cfg_.rounds + 1, 0);
        snapshot();
        establish();
        close_round(0);

        fl::ModelVector global = fl::initial_model(cfg_.dimension, cfg_.seed);
        for (std::uint32_t r = 1; r <= cfg_.rounds; ++r) {
            clock_.advance(kRoundGap);
            global = play_round(r, global);
            close_round(r);
        }
        if (cfg_.scenarios.count(Scenario::free_ride) != 0) scan_for_leaks();

        out_.final_model = global;
        out_.terminated = server_->terminated();
        out_.server_transcript = server_->transcript();
        for (std::size_t i = 0; i < participants_.size(); ++i) {
            const auto& p = *participants_[i];
            out_.participant_transcript.insert(out_.participant_transcript.end(), p.transcript().begin(),
                                               p.transcript().end());
            out_.participant_root_ratchets.push_back(p.root_ratchets());
            out_.server_root_ratchets.push_back(server_->root_ratchets(p.address()));
        }
        std::ostringstream ledger_out;
        ledger_.export_jsonl(ledger_out);
        out_.ledger_jsonl = ledger_out.str();
        return std::move(out_);
    }

private:
    template <typename Fn>
    void honest(const std::string& what, Fn&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            throw SimulationError(what + ": " + e.what());
        }
    }

    // Runs the handler on every delivery. Injected copies must be rejected;
    // the honest copy must be accepted.
    template <typename Fn>
    void deliver(const Bytes& wire, const Hop& hop, const std::string& target, Fn&& handler) {
        for (const auto& d : channel_.transmit(wire, hop)) {
            clock_.advance(1);
            if (!d.injected) {
                honest(target + " round " + std::to_string(hop.round), [&] { handler(d.wire); });
                continue;
            }
            AttackOutcome a;
            a.scenario = *d.attack;
            a.round = hop.round;
            a.target = target;
            a.expected = expected_for(a.scenario);
            try {
                handler(d.wire);
                a.observed = "accepted";
            } catch (const ProtocolError& e) {
                a.observed = std::string(protocol::to_string(e.code()));
            }
            a.rejected = a.observed == a.expected;
            out_.attacks.push_back(std::move(a));
        }
    }

    void establish() {
        honest("register project", [&] { server_->register_project(fl::initial_model(cfg_.dimension, cfg_.seed)); });
        for (std::size_t i = 0; i < participants_.size(); ++i) {
            clock_.advance(1);
            honest(participant_label(i) + " join", [&] { participants_[i]->join(kProjectId); });
        }
        for (std::size_t i = 0; i < participants_.size(); ++i) {
            auto& p = *participants_[i];
            Bytes offer;
            honest("send keys", [&] { offer = server_->send_keys(p.address()); });
            Bytes reply;
            deliver(offer, Hop{MessageKind::key_offer, 0, i}, participant_label(i),
                    [&](const Bytes& w) { reply = p.handle_keys(w); });
            deliver(reply, Hop{MessageKind::key_reply, 0, i}, "server",
                    [&](const Bytes& w) { server_->handle_key_response(w); });
        }
    }

    fl::ModelVector play_round(std::uint32_t r, const fl::ModelVector& global) {
        protocol::RoundPublish pub;
        honest("publish round " + std::to_string(r), [&] { pub = server_->publish_round(global, cfg_.deadline); });
        plaintexts_.push_back(fl::serialize_model(global));

        std::vector<fl::ModelVector> locals;
        for (std::size_t i = 0; i < participants_.size(); ++i) {
            auto& p = *participants_[i];
            protocol::TaskDelivery task;
            deliver(pub.envelopes.at(p.address()), Hop{MessageKind::task, r, i}, participant_label(i),
                    [&](const Bytes& w) { task = p.handle_task(w); });

            auto local = fl::local_train(task.global_model, train_seeds_[i] + r, cfg_.noise_scale, p.address());
            local.round = r;
            plaintexts_.push_back(fl::serialize_model(local));
            protocol::UpdateSubmission up;
            honest(participant_label(i) + " update", [&] { up = p.send_update(local); });
            deliver(up.envelope, Hop{MessageKind::update, r, i}, "server", [&](const Bytes& w) {
                locals.push_back(server_->handle_update(w));
                ++out_.accepted_updates[r];
            });
        }
        if (locals.size() != participants_.size()) {
            throw SimulationError("round " + std::to_string(r) + ": accepted " + std::to_string(locals.size()) +
                                  " updates from " + std::to_string(participants_.size()) + " participants");
        }

        fl::ModelVector next = fl::aggregate(locals, fl::AggregationWeights::unit(locals.size()));
        next.round = r;
        next.tag = fl::ModelTag::global;
        const bool last = r == cfg_.rounds;
        for (std::size_t i = 0; i < participants_.size(); ++i) {
            const bool terminate = last && i + 1 == participants_.size();
            honest("feedback", [&] { server_->feedback(participants_[i]->address(), 1, terminate, next); });
        }
        if (last) honest("finish", [&] { server_->finish(); });
        return next;
    }

    void scan_for_leaks() {
        const Bytes& log = channel_.eavesdropped();
        constexpr std::size_t kChunk = 32;
        std::size_t leaks = 0;
        for (const auto& pt : plaintexts_) {
            for (std::size_t off = 0; off + kChunk <= pt.size(); off += kChunk) {
                if (std::search(log.begin(), log.end(), pt.begin() + off, pt.begin() + off + kChunk) != log.end()) {
                    ++leaks;
                }
            }
        }
        AttackOutcome a;
        a.scenario = Scenario::free_ride;
        a.round = cfg_.rounds;
        a.target = "eavesdropper";
        a.expected = expected_for(Scenario::free_ride);
        a.observed = leaks == 0 ? a.expected : "plaintext-leak:" + std::to_string(leaks);
        a.rejected = leaks == 0;
        out_.attacks.push_back(std::move(a));
    }

    void snapshot() {
        last_server_ = server_->counters();
        last_participants_.clear();
        for (const auto& p : participants_) last_participants_.push_back(p->counters());
    }

    void close_round(std::uint32_t r) {
        out_.rows.push_back(MetricsRow{r, "server", server_->counters() - last_server_});
        for (std::size_t i = 0; i < participants_.size(); ++i) {
            out_.rows.push_back(
                MetricsRow{r, participant_label(i), participants_[i]->counters() - last_participants_[i]});
        }
        snapshot();
    }

    SimConfig cfg_;
    ledger::SimClock clock_;
    ledger::Ledger ledger_;
    crypto::Rng rng_;
    Channel channel_;
    std::unique_ptr<protocol::Server> server_;
    std::vector<std::unique_ptr<protocol::Participant>> participants_;
    std::vector<std::uint64_t> train_seeds_;
    std::vector<Bytes> plaintexts_;
    protocol::OpCounters last_server_;
    std::vector<protocol::OpCounters> last_participants_;
    RunMetrics out_;
};

}  // namespace

RunMetrics run_simulation(const SimConfig& config) {
    config.validate();
    return Run(config).execute();
}

void write_metrics_csv(std::ostream& out, const RunMetrics& metrics) {
    out << kMetricsHeader << '\n';
    for (const auto& row : metrics.rows) {
        const auto& c = row.counters;
        out << row.round << ',' << row.party << ',' << c.offchain_sent << ',' << c.offchain_received << ','
            << c.key_material << ',' << c.onchain << ',' << c.keygen << ',' << c.encap << ',' << c.decap << ','
            << c.derive << ',' << c.sign << ',' << c.verify << ',' << c.dh_agree << ',' << c.root_ratchet << '\n';
    }
}

TranscriptCheck verify_transcripts(const std::vector<protocol::TranscriptEntry>& server,
                                   const std::vector<protocol::TranscriptEntry>& participants) {
    using Key = std::tuple<crypto::Address, MessageKind, crypto::Direction, std::uint32_t>;
    auto key_of = [](const protocol::TranscriptEntry& e) { return Key{e.session, e.kind, e.direction, e.round}; };
    auto describe = [](const protocol::TranscriptEntry& e) {
        return to_hex(e.session) + " round " + std::to_string(e.round) +
               (e.direction == crypto::Direction::server_to_participant ? " s2p" : " p2s");
    };

    TranscriptCheck check;
    std::map<Key, const protocol::TranscriptEntry*> by_key;
    for (const auto& e : server) {
        if (e.side != protocol::Side::server) check.problems.push_back("non-server entry in server transcript");
        if (!by_key.emplace(key_of(e), &e).second) check.problems.push_back("duplicate server entry " + describe(e));
    }
    std::set<Key> seen;
    for (const auto& e : participants) {
        if (e.side != protocol::Side::participant) {
            check.problems.push_back("non-participant entry in participant transcript");
        }
        const auto k = key_of(e);
        if (!seen.insert(k).second) {
            check.problems.push_back("duplicate participant entry " + describe(e));
            continue;
        }
        auto it = by_key.find(k);
        if (it == by_key.end()) {
            check.problems.push_back("no server entry for " + describe(e));
            continue;
        }
        const auto& s = *it->second;
        if (s.payload_digest != e.payload_digest) check.problems.push_back("payload digest differs at " + describe(e));
        if (s.block_index != e.block_index) check.problems.push_back("block reference differs at " + describe(e));
        if (s.key_fp != e.key_fp || s.epoch != e.epoch || s.step != e.step) {
            check.problems.push_back("model key differs at " + describe(e));
        }
        ++check.matched;
    }
    for (const auto& [k, e] : by_key) {
        if (seen.count(k) == 0) check.problems.push_back("no participant entry for " + describe(*e));
    }
    return check;
}

void write_run_outputs(const RunMetrics& metrics, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw SimulationError("cannot create " + dir.string() + ": " + ec.message());
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        if (!f) throw SimulationError("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open(kMetricsFile);
        write_metrics_csv(f, metrics);
    }
    {
        auto f = open(kLedgerFile);
        f << metrics.ledger_jsonl;
    }
    {
        auto f = open(kServerTranscriptFile);
        protocol::write_transcript_jsonl(f, metrics.server_transcript);
    }
    {
        auto f = open(kParticipantTranscriptFile);
        protocol::write_transcript_jsonl(f, metrics.participant_transcript);
    }
}

}  // namespace pqbfl::harness
