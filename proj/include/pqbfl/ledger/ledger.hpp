#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "pqbfl/common/bytes.hpp"
#include "pqbfl/crypto/suite.hpp"

namespace pqbfl::ledger {

using Address = crypto::Address;
using Hash = crypto::Digest;

enum class LedgerErrc {
    insufficient_deposit,
    duplicate_project,
    project_full,
    unknown_project,
    not_project_owner,
    unknown_task,
    empty_hash,
    deadline_exceeded,
    unregistered_client,
    already_done,
    project_done,
    duplicate_task,
    duplicate_client,
    duplicate_update,
    round_mismatch,
    unknown_account,
    duplicate_account,
};

std::string_view to_string(LedgerErrc code);

class LedgerError : public std::runtime_error {
public:
    LedgerError(LedgerErrc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
    LedgerErrc code() const { return code_; }

private:
    LedgerErrc code_;
};

/// Seconds since the start of the simulation. Driven by the harness.
class SimClock {
public:
    explicit SimClock(std::uint64_t start = 0) : now_(start) {}
    std::uint64_t now() const { return now_.load(); }
    void advance(std::uint64_t seconds) { now_ += seconds; }
    void set(std::uint64_t t) { now_ = t; }

private:
    std::atomic<std::uint64_t> now_;
};

// Transaction bodies. Field widths are the on-chain widths counted by
// payload_size(); addresses travel as the transaction sender and are not
// part of the payload.

struct RegisterProjectTx {
    std::uint16_t project_id = 0;
    std::uint16_t n_clients = 0;
    Hash h_model{};  // h(M^0)
    Hash h_keys{};   // h(kpk || epk)
};

struct RegisterClientTx {
    std::uint16_t project_id = 0;  // names the target project; not payload
    Hash h_epk{};
};

struct PublishTaskTx {
    std::uint8_t round = 0;
    Hash h_model{};                // h(Inf_b^r)
    std::optional<Hash> h_keys;    // fresh h(kpk || epk), ratchet rounds only
    std::uint16_t task_id = 0;
    std::uint16_t project_id = 0;
    std::uint16_t deadline = 0;    // seconds after the task's block timestamp
};

struct UpdateModelTx {
    std::uint8_t round = 0;
    Hash h_model{};                // h(Inf_a^r)
    std::optional<Hash> h_ct_epk;  // h(ct || epk), ratchet rounds only
    std::uint16_t task_id = 0;
    std::uint16_t project_id = 0;
};

struct FeedbackModelTx {
    std::uint8_t round = 0;
    std::uint16_t project_id = 0;
    std::uint16_t task_id = 0;
    Hash h_model{};  // h(M^r)
    Hash h_keys{};   // server key commitment in force for the round
    Address client{};
    std::int16_t score_delta = 0;
    bool terminate = false;
};

struct FinishProjectTx {
    std::uint16_t project_id = 0;
};

using Transaction = std::variant<RegisterProjectTx, RegisterClientTx, PublishTaskTx, UpdateModelTx,
                                 FeedbackModelTx, FinishProjectTx>;

/// Application payload bytes of a transaction on chain.
std::size_t payload_size(const Transaction& tx);

enum class EventKind { RegProject, RegClient, Task, Update, Feedback, ProjectTerminate };
std::string_view to_string(EventKind kind);
EventKind kind_of(const Transaction& tx);

struct Event {
    std::uint64_t block_index = 0;
    std::uint64_t timestamp = 0;
    Address sender{};
    std::uint64_t value = 0;  // deposit attached to RegisterProject
    Transaction tx;
    // Denormalised for the Task and ProjectTerminate event signatures.
    std::uint16_t n_clients = 0;
    std::uint8_t last_round = 0;
    std::uint16_t last_task = 0;

    EventKind kind() const { return kind_of(tx); }
    std::size_t onchain_bytes() const { return payload_size(tx); }
};

struct Account {
    Address address{};
    Bytes public_key;
    std::uint64_t balance = 0;

    friend bool operator==(const Account&, const Account&) = default;
};

struct ClientRecord {
    Address address{};
    std::uint16_t project_id = 0;
    std::uint64_t score = 0;
    Hash h_epk{};
    std::uint64_t block_index = 0;

    friend bool operator==(const ClientRecord&, const ClientRecord&) = default;
};

struct ProjectRecord {
    std::uint16_t project_id = 0;
    std::uint16_t n_clients = 0;
    std::uint16_t clients = 0;
    Address owner{};
    std::uint64_t registered_at = 0;
    std::uint64_t block_index = 0;
    Hash h_model{};
    Hash h_keys{};
    std::uint64_t escrow = 0;
    bool done = false;
    std::uint8_t last_round = 0;
    std::uint16_t last_task = 0;

    friend bool operator==(const ProjectRecord&, const ProjectRecord&) = default;
};

struct TaskRecord {
    std::uint8_t round = 0;
    Hash h_model{};
    std::optional<Hash> h_keys;
    std::uint16_t task_id = 0;
    std::uint16_t project_id = 0;
    Address owner{};
    std::uint16_t deadline = 0;
    std::uint64_t timestamp = 0;
    std::uint64_t block_index = 0;

    std::uint64_t deadline_at() const { return timestamp + deadline; }
    friend bool operator==(const TaskRecord&, const TaskRecord&) = default;
};

struct UpdateRecord {
    std::uint8_t round = 0;
    std::uint16_t task_id = 0;
    Address client{};
    Hash h_model{};
    std::optional<Hash> h_ct_epk;
    std::uint16_t project_id = 0;
    std::uint64_t timestamp = 0;
    std::uint64_t block_index = 0;

    friend bool operator==(const UpdateRecord&, const UpdateRecord&) = default;
};

struct FeedbackRecord {
    std::uint8_t round = 0;
    std::uint16_t task_id = 0;
    std::uint16_t project_id = 0;
    Address client{};
    std::uint64_t timestamp = 0;
    std::int16_t score_delta = 0;
    bool terminate = false;

    friend bool operator==(const FeedbackRecord&, const FeedbackRecord&) = default;
};

using TaskKey = std::pair<std::uint16_t, std::uint16_t>;                // (project, task)
using ClientTaskKey = std::tuple<std::uint16_t, std::uint16_t, Address>;  // (project, task, client)

/// Everything the contract stores. Only Ledger::apply mutates it.
struct LedgerState {
    std::map<Address, Account> accounts;
    std::map<std::uint16_t, ProjectRecord> projects;
    std::map<Address, ClientRecord> clients;
    std::map<TaskKey, TaskRecord> tasks;
    std::map<ClientTaskKey, UpdateRecord> updates;
    std::map<ClientTaskKey, FeedbackRecord> feedbacks;

    friend bool operator==(const LedgerState&, const LedgerState&) = default;
};

struct LedgerConfig {
    std::uint64_t required_deposit = 1000;
};

struct GenesisAccount {
    Bytes public_key;
    std::uint64_t balance = 0;
};

class Ledger;

struct EventFilter {
    std::set<EventKind> kinds;  // empty = all kinds
    std::optional<std::uint16_t> project_id;
    bool from_genesis = false;

    bool matches(const Event& e) const;
};

/// Cursor over the event log; each matching event is returned once.
class Subscription {
public:
    std::vector<Event> poll();

private:
    friend class Ledger;
    Subscription(const Ledger& ledger, EventFilter filter, std::uint64_t cursor)
        : ledger_(&ledger), filter_(std::move(filter)), cursor_(cursor) {}

    const Ledger* ledger_;
    EventFilter filter_;
    std::uint64_t cursor_;
};

class Ledger {
public:
    Ledger(const SimClock& clock, LedgerConfig config = {});

    /// Genesis allocation; binds an address to its signing public key.
    Address open_account(ByteView public_key, std::uint64_t balance);

    Event register_project(const Address& sender, std::uint64_t deposit, const RegisterProjectTx& tx);
    Event register_client(const Address& sender, const RegisterClientTx& tx);
    Event publish_task(const Address& sender, const PublishTaskTx& tx);
    Event update_model(const Address& sender, const UpdateModelTx& tx);
    Event feedback_model(const Address& sender, const FeedbackModelTx& tx);
    Event finish_project(const Address& sender, const FinishProjectTx& tx);

    Subscription subscribe(EventFilter filter) const;

    std::uint64_t height() const;
    std::vector<Event> events() const;
    std::vector<Event> events_since(std::uint64_t index) const;
    std::optional<Event> event_at(std::uint64_t index) const;
    LedgerState snapshot() const;
    std::vector<GenesisAccount> genesis() const;
    const LedgerConfig& config() const { return config_; }

    std::optional<Bytes> public_key_of(const Address& address) const;
    std::optional<ProjectRecord> project(std::uint16_t id) const;
    std::optional<ClientRecord> client(const Address& address) const;
    std::optional<TaskRecord> task(std::uint16_t project_id, std::uint16_t task_id) const;
    std::optional<UpdateRecord> update(std::uint16_t project_id, std::uint16_t task_id, const Address& client) const;
    std::uint64_t balance_of(const Address& address) const;
    /// Sum of balances plus escrowed deposits.
    std::uint64_t total_value() const;

    /// Rebuilds a ledger by applying a recorded event log to the genesis.
    static LedgerState replay(const std::vector<GenesisAccount>& genesis, const std::vector<Event>& events);

    /// One JSON object per line: events in block order, then a state snapshot.
    void export_jsonl(std::ostream& out) const;

private:
    Event commit(const Address& sender, std::uint64_t value, Transaction tx);
    static void apply(LedgerState& state, const Event& event);
    void validate(const Address& sender, std::uint64_t value, const Transaction& tx, std::uint64_t now) const;

    const SimClock& clock_;
    LedgerConfig config_;
    mutable std::shared_mutex mutex_;
    LedgerState state_;
    std::vector<GenesisAccount> genesis_;
    std::vector<Event> log_;
};

}  // namespace pqbfl::ledger
