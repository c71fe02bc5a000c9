#include <gtest/gtest.h>

#include <functional>
#include <sstream>

#include "pqbfl/ledger/ledger.hpp"

using namespace pqbfl;
using namespace pqbfl::ledger;

namespace {

Hash h(std::uint8_t b) {
    Hash out{};
    out.fill(b);
    return out;
}

struct Fixture {
    SimClock clock{1000};
    Ledger ledger{clock, LedgerConfig{500}};
    crypto::Rng rng = crypto::Rng::from_u64(99);
    Address server{};
    std::vector<Address> clients;

    explicit Fixture(int n_clients = 3) {
        server = ledger.open_account(crypto::sig_keygen(rng).public_key, 10'000);
        for (int i = 0; i < n_clients; ++i) {
            clients.push_back(ledger.open_account(crypto::sig_keygen(rng).public_key, 100));
        }
    }

    void project(std::uint16_t id = 1, std::uint16_t n = 2) {
        ledger.register_project(server, 500, RegisterProjectTx{id, n, h(1), h(2)});
    }

    PublishTaskTx task(std::uint8_t r, std::uint16_t deadline = 60) {
        return PublishTaskTx{r, h(static_cast<std::uint8_t>(0x10 + r)), std::nullopt, r, 1, deadline};
    }
};

LedgerErrc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const LedgerError& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected LedgerError";
    return LedgerErrc::unknown_account;
}

}  // namespace

TEST(LedgerAccounting, RegistrationTotalsOneHundredBytes) {
    const Transaction project = RegisterProjectTx{1, 5, h(1), h(2)};
    const Transaction client = RegisterClientTx{1, h(3)};
    EXPECT_EQ(payload_size(project) + payload_size(client), 100u);
}

TEST(LedgerAccounting, RoundTotalsOneHundredFortyEightBytes) {
    const Transaction publish = PublishTaskTx{1, h(1), std::nullopt, 1, 1, 60};
    const Transaction update = UpdateModelTx{1, h(2), std::nullopt, 1, 1};
    const Transaction feedback = FeedbackModelTx{1, 1, 1, h(3), h(4), Address{}, 1, false};
    EXPECT_EQ(payload_size(publish) + payload_size(update) + payload_size(feedback), 148u);
}

TEST(LedgerAccounting, RatchetRoundAddsTwoCommitments) {
    const Transaction plain = PublishTaskTx{1, h(1), std::nullopt, 1, 1, 60};
    const Transaction ratchet = PublishTaskTx{1, h(1), h(9), 1, 1, 60};
    EXPECT_EQ(payload_size(ratchet), payload_size(plain) + 32);
    const Transaction u_plain = UpdateModelTx{1, h(2), std::nullopt, 1, 1};
    const Transaction u_ratchet = UpdateModelTx{1, h(2), h(8), 1, 1};
    const Transaction feedback = FeedbackModelTx{1, 1, 1, h(3), h(4), Address{}, 1, false};
    EXPECT_EQ(payload_size(ratchet) + payload_size(u_ratchet) + payload_size(feedback), 148u + 64u);
    EXPECT_EQ(payload_size(u_ratchet), payload_size(u_plain) + 32);
}

TEST(Ledger, RegisterProjectGuards) {
    Fixture f;
    const auto before = f.ledger.snapshot();
    EXPECT_EQ(code_of([&] { f.ledger.register_project(f.server, 499, RegisterProjectTx{1, 2, h(1), h(2)}); }),
              LedgerErrc::insufficient_deposit);
    EXPECT_EQ(code_of([&] { f.ledger.register_project(f.clients[0], 500, RegisterProjectTx{1, 2, h(1), h(2)}); }),
              LedgerErrc::insufficient_deposit);
    EXPECT_EQ(f.ledger.snapshot(), before);
    EXPECT_EQ(f.ledger.height(), 0u);

    const auto e = f.ledger.register_project(f.server, 500, RegisterProjectTx{1, 2, h(1), h(2)});
    EXPECT_EQ(e.kind(), EventKind::RegProject);
    EXPECT_EQ(std::get<RegisterProjectTx>(e.tx).n_clients, 2);
    EXPECT_EQ(f.ledger.balance_of(f.server), 9'500u);
    EXPECT_EQ(code_of([&] { f.ledger.register_project(f.server, 500, RegisterProjectTx{1, 2, h(1), h(2)}); }),
              LedgerErrc::duplicate_project);
}

TEST(Ledger, RegisterClientGuards) {
    Fixture f;
    EXPECT_EQ(code_of([&] { f.ledger.register_client(f.clients[0], RegisterClientTx{7, h(3)}); }),
              LedgerErrc::unknown_project);
    f.project(1, 2);
    f.ledger.register_client(f.clients[0], RegisterClientTx{1, h(3)});
    EXPECT_EQ(f.ledger.client(f.clients[0])->score, 0u);
    EXPECT_EQ(code_of([&] { f.ledger.register_client(f.clients[0], RegisterClientTx{1, h(3)}); }),
              LedgerErrc::duplicate_client);
    f.ledger.register_client(f.clients[1], RegisterClientTx{1, h(4)});
    const auto before = f.ledger.snapshot();
    EXPECT_EQ(code_of([&] { f.ledger.register_client(f.clients[2], RegisterClientTx{1, h(5)}); }),
              LedgerErrc::project_full);
    EXPECT_EQ(f.ledger.snapshot(), before);
}

TEST(Ledger, PublishTaskGuards) {
    Fixture f;
    f.project();
    const auto e = f.ledger.publish_task(f.server, f.task(1, 30));
    const auto& t = std::get<PublishTaskTx>(e.tx);
    EXPECT_EQ(t.round, 1);
    EXPECT_EQ(t.deadline, 30);
    EXPECT_EQ(e.n_clients, 2);
    EXPECT_EQ(code_of([&] { f.ledger.publish_task(f.clients[0], f.task(2)); }), LedgerErrc::not_project_owner);
    EXPECT_EQ(code_of([&] { f.ledger.publish_task(f.server, f.task(1)); }), LedgerErrc::duplicate_task);
    auto unknown = f.task(2);
    unknown.project_id = 9;
    EXPECT_EQ(code_of([&] { f.ledger.publish_task(f.server, unknown); }), LedgerErrc::unknown_project);
}

TEST(Ledger, UpdateModelGuards) {
    Fixture f;
    f.project();
    f.ledger.register_client(f.clients[0], RegisterClientTx{1, h(3)});
    f.ledger.publish_task(f.server, f.task(1, 60));

    EXPECT_EQ(code_of([&] { f.ledger.update_model(f.clients[0], UpdateModelTx{2, h(7), std::nullopt, 2, 1}); }),
              LedgerErrc::unknown_task);
    EXPECT_EQ(code_of([&] { f.ledger.update_model(f.clients[0], UpdateModelTx{1, Hash{}, std::nullopt, 1, 1}); }),
              LedgerErrc::empty_hash);
    EXPECT_EQ(code_of([&] { f.ledger.update_model(f.clients[1], UpdateModelTx{1, h(7), std::nullopt, 1, 1}); }),
              LedgerErrc::unregistered_client);

    f.clock.advance(60);  // exactly at the deadline is still accepted
    const auto e = f.ledger.update_model(f.clients[0], UpdateModelTx{1, h(7), std::nullopt, 1, 1});
    EXPECT_EQ(e.kind(), EventKind::Update);
    EXPECT_EQ(code_of([&] { f.ledger.update_model(f.clients[0], UpdateModelTx{1, h(7), std::nullopt, 1, 1}); }),
              LedgerErrc::duplicate_update);

    f.ledger.register_client(f.clients[1], RegisterClientTx{1, h(4)});
    f.clock.advance(1);
    EXPECT_EQ(code_of([&] { f.ledger.update_model(f.clients[1], UpdateModelTx{1, h(7), std::nullopt, 1, 1}); }),
              LedgerErrc::deadline_exceeded);
}

TEST(Ledger, FeedbackClampsScore) {
    Fixture f;
    f.project();
    const Address c = f.clients[0];
    f.ledger.register_client(c, RegisterClientTx{1, h(3)});
    for (std::uint8_t r = 1; r <= 3; ++r) {
        f.ledger.publish_task(f.server, f.task(r));
        f.ledger.feedback_model(f.server, FeedbackModelTx{r, 1, r, h(5), h(6), c, r == 1 ? std::int16_t{3} : std::int16_t{0}, false});
    }
    EXPECT_EQ(f.ledger.client(c)->score, 3u);
    f.ledger.publish_task(f.server, f.task(4));
    f.ledger.feedback_model(f.server, FeedbackModelTx{4, 1, 4, h(5), h(6), c, 2, false});
    EXPECT_EQ(f.ledger.client(c)->score, 5u);
    f.ledger.publish_task(f.server, f.task(5));
    f.ledger.feedback_model(f.server, FeedbackModelTx{5, 1, 5, h(5), h(6), c, -50, false});
    EXPECT_EQ(f.ledger.client(c)->score, 0u);

    f.ledger.publish_task(f.server, f.task(6));
    EXPECT_EQ(code_of([&] { f.ledger.feedback_model(f.clients[0], FeedbackModelTx{6, 1, 6, h(5), h(6), c, 1, false}); }),
              LedgerErrc::not_project_owner);
    EXPECT_EQ(code_of([&] { f.ledger.feedback_model(f.server, FeedbackModelTx{6, 1, 6, h(5), h(6), f.clients[2], 1, false}); }),
              LedgerErrc::unregistered_client);
    EXPECT_EQ(code_of([&] { f.ledger.feedback_model(f.server, FeedbackModelTx{7, 1, 7, h(5), h(6), c, 1, false}); }),
              LedgerErrc::unknown_task);
    const auto e = f.ledger.feedback_model(f.server, FeedbackModelTx{6, 1, 6, h(5), h(6), c, 1, true});
    EXPECT_TRUE(std::get<FeedbackModelTx>(e.tx).terminate);
}

TEST(Ledger, FinishProjectReleasesEscrowOnce) {
    Fixture f;
    const auto total = f.ledger.total_value();
    f.project();
    EXPECT_EQ(f.ledger.total_value(), total);
    EXPECT_EQ(code_of([&] { f.ledger.finish_project(f.clients[0], FinishProjectTx{1}); }),
              LedgerErrc::not_project_owner);
    f.ledger.publish_task(f.server, f.task(1));
    const auto e = f.ledger.finish_project(f.server, FinishProjectTx{1});
    EXPECT_EQ(e.kind(), EventKind::ProjectTerminate);
    EXPECT_EQ(e.last_round, 1);
    EXPECT_TRUE(f.ledger.project(1)->done);
    EXPECT_EQ(f.ledger.balance_of(f.server), 10'000u);
    EXPECT_EQ(code_of([&] { f.ledger.finish_project(f.server, FinishProjectTx{1}); }), LedgerErrc::already_done);
    EXPECT_EQ(code_of([&] { f.ledger.publish_task(f.server, f.task(2)); }), LedgerErrc::project_done);
    EXPECT_EQ(code_of([&] { f.ledger.finish_project(f.server, FinishProjectTx{4}); }), LedgerErrc::unknown_project);
    EXPECT_EQ(f.ledger.total_value(), total);
}

TEST(Ledger, SubscriptionsDeliverInOrderOnce) {
    Fixture f;
    f.project();
    f.ledger.register_client(f.clients[0], RegisterClientTx{1, h(3)});
    f.ledger.publish_task(f.server, f.task(1));

    auto late = f.ledger.subscribe(EventFilter{{}, std::nullopt, false});
    auto replayed = f.ledger.subscribe(EventFilter{{}, std::nullopt, true});
    auto tasks_a = f.ledger.subscribe(EventFilter{{EventKind::Task}, 1, true});
    auto tasks_b = f.ledger.subscribe(EventFilter{{EventKind::Task}, 1, true});
    EXPECT_TRUE(late.poll().empty());
    EXPECT_EQ(replayed.poll().size(), 3u);
    EXPECT_TRUE(replayed.poll().empty());

    f.ledger.publish_task(f.server, f.task(2));
    f.ledger.update_model(f.clients[0], UpdateModelTx{2, h(7), std::nullopt, 2, 1});
    const auto a = tasks_a.poll();
    const auto b = tasks_b.poll();
    ASSERT_EQ(a.size(), 2u);
    ASSERT_EQ(b.size(), 2u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].kind(), EventKind::Task);
        EXPECT_EQ(a[i].block_index, b[i].block_index);
    }
    EXPECT_LT(a[0].block_index, a[1].block_index);
    EXPECT_EQ(late.poll().size(), 2u);
}

// Random operation sequences: scores stay non-negative, value is conserved,
// failed calls leave state untouched, and replay rebuilds the same state.
TEST(Ledger, RandomSequencesPreserveInvariants) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Fixture f(4);
        crypto::Rng rng = crypto::Rng::from_u64(seed);
        const auto total = f.ledger.total_value();
        std::vector<Address> senders = f.clients;
        senders.push_back(f.server);

        for (int step = 0; step < 200; ++step) {
            const auto before = f.ledger.snapshot();
            const auto height = f.ledger.height();
            const Address sender = senders[rng.uniform(senders.size())];
            const auto pid = static_cast<std::uint16_t>(1 + rng.uniform(2));
            const auto tid = static_cast<std::uint16_t>(1 + rng.uniform(6));
            try {
                switch (rng.uniform(6)) {
                    case 0:
                        f.ledger.register_project(sender, 400 + rng.uniform(300),
                                                  RegisterProjectTx{pid, static_cast<std::uint16_t>(rng.uniform(4)), h(1), h(2)});
                        break;
                    case 1: f.ledger.register_client(sender, RegisterClientTx{pid, h(3)}); break;
                    case 2:
                        f.ledger.publish_task(sender, PublishTaskTx{static_cast<std::uint8_t>(tid), h(4), std::nullopt,
                                                                    tid, pid, static_cast<std::uint16_t>(rng.uniform(20))});
                        break;
                    case 3:
                        f.ledger.update_model(sender, UpdateModelTx{static_cast<std::uint8_t>(tid), h(5), std::nullopt, tid, pid});
                        break;
                    case 4:
                        f.ledger.feedback_model(
                            sender, FeedbackModelTx{static_cast<std::uint8_t>(tid), pid, tid, h(6), h(7),
                                                    senders[rng.uniform(senders.size())],
                                                    static_cast<std::int16_t>(static_cast<int>(rng.uniform(11)) - 5),
                                                    false});
                        break;
                    default: f.ledger.finish_project(sender, FinishProjectTx{pid}); break;
                }
            } catch (const LedgerError&) {
                EXPECT_EQ(f.ledger.snapshot(), before);
                EXPECT_EQ(f.ledger.height(), height);
            }
            f.clock.advance(rng.uniform(5));
            EXPECT_EQ(f.ledger.total_value(), total);
        }
        for (const auto& [_, c] : f.ledger.snapshot().clients) EXPECT_GE(c.score, 0u);
        EXPECT_EQ(Ledger::replay(f.ledger.genesis(), f.ledger.events()), f.ledger.snapshot());
        const auto events = f.ledger.events();
        for (std::size_t i = 0; i < events.size(); ++i) EXPECT_EQ(events[i].block_index, i);
    }
}

TEST(Ledger, ExportIsLineDelimitedWithHexHashes) {
    Fixture f;
    f.project();
    f.ledger.register_client(f.clients[0], RegisterClientTx{1, h(0xab)});
    std::ostringstream out;
    f.ledger.export_jsonl(out);
    std::istringstream in(out.str());
    std::string first, second;
    std::getline(in, first);
    std::getline(in, second);
    EXPECT_EQ(first.rfind(R"({"kind":"RegProject","block_index":0,"id_p":1,"nClients":2,)", 0), 0u) << first;
    EXPECT_NE(second.find(to_hex(h(0xab))), std::string::npos);
}
