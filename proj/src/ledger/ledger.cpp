#include "pqbfl/ledger/ledger.hpp"

#include <algorithm>
#include <json.hpp>

namespace pqbfl::ledger {

namespace {

constexpr std::size_t kHash = 32;
constexpr std::size_t kRound = 1;
constexpr std::size_t kId = 2;
constexpr std::size_t kCount = 2;
constexpr std::size_t kDeadline = 2;
constexpr std::size_t kScore = 2;
constexpr std::size_t kFlag = 1;

bool is_empty(const Hash& h) {
    return std::all_of(h.begin(), h.end(), [](std::uint8_t b) { return b == 0; });
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void fail(LedgerErrc code, const std::string& detail) { throw LedgerError(code, detail); }

std::string id_str(std::uint16_t id) { return std::to_string(id); }

nlohmann::ordered_json opt_hash(const std::optional<Hash>& h) {
    return h ? nlohmann::ordered_json(to_hex(*h)) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string_view to_string(LedgerErrc code) {
    switch (code) {
        case LedgerErrc::insufficient_deposit: return "InsufficientDeposit";
        case LedgerErrc::duplicate_project: return "DuplicateProject";
        case LedgerErrc::project_full: return "ProjectFull";
        case LedgerErrc::unknown_project: return "UnknownProject";
        case LedgerErrc::not_project_owner: return "NotProjectOwner";
        case LedgerErrc::unknown_task: return "UnknownTask";
        case LedgerErrc::empty_hash: return "EmptyHash";
        case LedgerErrc::deadline_exceeded: return "DeadlineExceeded";
        case LedgerErrc::unregistered_client: return "UnregisteredClient";
        case LedgerErrc::already_done: return "AlreadyDone";
        case LedgerErrc::project_done: return "ProjectDone";
        case LedgerErrc::duplicate_task: return "DuplicateTask";
        case LedgerErrc::duplicate_client: return "DuplicateClient";
        case LedgerErrc::duplicate_update: return "DuplicateUpdate";
        case LedgerErrc::round_mismatch: return "RoundMismatch";
        case LedgerErrc::unknown_account: return "UnknownAccount";
        case LedgerErrc::duplicate_account: return "DuplicateAccount";
    }
    return "LedgerError";
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::RegProject: return "RegProject";
        case EventKind::RegClient: return "RegClient";
        case EventKind::Task: return "Task";
        case EventKind::Update: return "Update";
        case EventKind::Feedback: return "Feedback";
        case EventKind::ProjectTerminate: return "ProjectTerminate";
    }
    return "Unknown";
}

EventKind kind_of(const Transaction& tx) {
    return std::visit(overloaded{
                          [](const RegisterProjectTx&) { return EventKind::RegProject; },
                          [](const RegisterClientTx&) { return EventKind::RegClient; },
                          [](const PublishTaskTx&) { return EventKind::Task; },
                          [](const UpdateModelTx&) { return EventKind::Update; },
                          [](const FeedbackModelTx&) { return EventKind::Feedback; },
                          [](const FinishProjectTx&) { return EventKind::ProjectTerminate; },
                      },
                      tx);
}

std::size_t payload_size(const Transaction& tx) {
    return std::visit(
        overloaded{
            [](const RegisterProjectTx&) { return kId + kCount + 2 * kHash; },
            // id_p references the project registered above; only h(epk) is new data.
            [](const RegisterClientTx&) { return kHash; },
            [](const PublishTaskTx& t) {
                return kRound + kHash + (t.h_keys ? kHash : 0) + 2 * kId + kDeadline;
            },
            [](const UpdateModelTx& t) { return kRound + kHash + (t.h_ct_epk ? kHash : 0) + 2 * kId; },
            [](const FeedbackModelTx&) { return kRound + 2 * kId + 2 * kHash + kScore + kFlag; },
            [](const FinishProjectTx&) { return kId; },
        },
        tx);
}

bool EventFilter::matches(const Event& e) const {
    if (!kinds.empty() && kinds.count(e.kind()) == 0) return false;
    if (!project_id) return true;
    const std::uint16_t pid = std::visit([](const auto& t) { return t.project_id; }, e.tx);
    return pid == *project_id;
}

std::vector<Event> Subscription::poll() {
    std::vector<Event> out;
    for (auto& e : ledger_->events_since(cursor_)) {
        cursor_ = e.block_index + 1;
        if (filter_.matches(e)) out.push_back(std::move(e));
    }
    return out;
}

Ledger::Ledger(const SimClock& clock, LedgerConfig config) : clock_(clock), config_(config) {}

Address Ledger::open_account(ByteView public_key, std::uint64_t balance) {
    const Address addr = crypto::address_of(public_key);
    std::unique_lock lock(mutex_);
    if (state_.accounts.count(addr) != 0) fail(LedgerErrc::duplicate_account, to_hex(addr));
    state_.accounts[addr] = Account{addr, Bytes(public_key.begin(), public_key.end()), balance};
    genesis_.push_back(GenesisAccount{Bytes(public_key.begin(), public_key.end()), balance});
    return addr;
}

void Ledger::validate(const Address& sender, std::uint64_t value, const Transaction& tx, std::uint64_t now) const {
    const auto& s = state_;
    auto project_of = [&](std::uint16_t pid) -> const ProjectRecord& {
        auto it = s.projects.find(pid);
        if (it == s.projects.end()) fail(LedgerErrc::unknown_project, id_str(pid));
        return it->second;
    };
    auto owned_live_project = [&](std::uint16_t pid) -> const ProjectRecord& {
        const auto& p = project_of(pid);
        if (p.owner != sender) fail(LedgerErrc::not_project_owner, id_str(pid));
        if (p.done) fail(LedgerErrc::project_done, id_str(pid));
        return p;
    };
    auto task_of = [&](std::uint16_t pid, std::uint16_t tid) -> const TaskRecord& {
        auto it = s.tasks.find({pid, tid});
        if (it == s.tasks.end()) fail(LedgerErrc::unknown_task, id_str(pid) + "/" + id_str(tid));
        return it->second;
    };
    auto client_of = [&](const Address& a, std::uint16_t pid) {
        auto it = s.clients.find(a);
        if (it == s.clients.end() || it->second.project_id != pid) {
            fail(LedgerErrc::unregistered_client, to_hex(a));
        }
    };

    std::visit(
        overloaded{
            [&](const RegisterProjectTx& t) {
                auto acct = s.accounts.find(sender);
                if (acct == s.accounts.end()) fail(LedgerErrc::unknown_account, to_hex(sender));
                if (value < config_.required_deposit || acct->second.balance < value) {
                    fail(LedgerErrc::insufficient_deposit,
                         "deposit " + std::to_string(value) + ", required " +
                             std::to_string(config_.required_deposit) + ", balance " +
                             std::to_string(acct->second.balance));
                }
                if (s.projects.count(t.project_id) != 0) fail(LedgerErrc::duplicate_project, id_str(t.project_id));
                if (is_empty(t.h_model) || is_empty(t.h_keys)) fail(LedgerErrc::empty_hash, "RegisterProject");
            },
            [&](const RegisterClientTx& t) {
                if (s.accounts.count(sender) == 0) fail(LedgerErrc::unknown_account, to_hex(sender));
                const auto& p = project_of(t.project_id);
                if (p.done) fail(LedgerErrc::project_done, id_str(t.project_id));
                if (s.clients.count(sender) != 0) fail(LedgerErrc::duplicate_client, to_hex(sender));
                if (p.clients >= p.n_clients) fail(LedgerErrc::project_full, id_str(t.project_id));
                if (is_empty(t.h_epk)) fail(LedgerErrc::empty_hash, "RegisterClient");
            },
            [&](const PublishTaskTx& t) {
                owned_live_project(t.project_id);
                if (s.tasks.count({t.project_id, t.task_id}) != 0) {
                    fail(LedgerErrc::duplicate_task, id_str(t.project_id) + "/" + id_str(t.task_id));
                }
                if (is_empty(t.h_model) || (t.h_keys && is_empty(*t.h_keys))) {
                    fail(LedgerErrc::empty_hash, "PublishTask");
                }
            },
            [&](const UpdateModelTx& t) {
                const auto& p = project_of(t.project_id);
                const auto& task = task_of(t.project_id, t.task_id);
                if (is_empty(t.h_model) || (t.h_ct_epk && is_empty(*t.h_ct_epk))) {
                    fail(LedgerErrc::empty_hash, "UpdateModel");
                }
                client_of(sender, t.project_id);
                if (p.done) fail(LedgerErrc::project_done, id_str(t.project_id));
                if (t.round != task.round) fail(LedgerErrc::round_mismatch, std::to_string(t.round));
                if (now > task.deadline_at()) {
                    fail(LedgerErrc::deadline_exceeded,
                         "now " + std::to_string(now) + " > " + std::to_string(task.deadline_at()));
                }
                if (s.updates.count({t.project_id, t.task_id, sender}) != 0) {
                    fail(LedgerErrc::duplicate_update, to_hex(sender));
                }
            },
            [&](const FeedbackModelTx& t) {
                const auto& task = task_of(t.project_id, t.task_id);
                owned_live_project(t.project_id);
                client_of(t.client, t.project_id);
                if (t.round != task.round) fail(LedgerErrc::round_mismatch, std::to_string(t.round));
                if (is_empty(t.h_model) || is_empty(t.h_keys)) fail(LedgerErrc::empty_hash, "FeedbackModel");
                if (s.feedbacks.count({t.project_id, t.task_id, t.client}) != 0) {
                    fail(LedgerErrc::already_done, "feedback for " + to_hex(t.client));
                }
            },
            [&](const FinishProjectTx& t) {
                const auto& p = project_of(t.project_id);
                if (p.owner != sender) fail(LedgerErrc::not_project_owner, id_str(t.project_id));
                if (p.done) fail(LedgerErrc::already_done, id_str(t.project_id));
            },
        },
        tx);
}

void Ledger::apply(LedgerState& s, const Event& e) {
    std::visit(overloaded{
                   [&](const RegisterProjectTx& t) {
                       s.accounts.at(e.sender).balance -= e.value;
                       ProjectRecord p;
                       p.project_id = t.project_id;
                       p.n_clients = t.n_clients;
                       p.owner = e.sender;
                       p.registered_at = e.timestamp;
                       p.block_index = e.block_index;
                       p.h_model = t.h_model;
                       p.h_keys = t.h_keys;
                       p.escrow = e.value;
                       s.projects[t.project_id] = p;
                   },
                   [&](const RegisterClientTx& t) {
                       s.clients[e.sender] = ClientRecord{e.sender, t.project_id, 0, t.h_epk, e.block_index};
                       ++s.projects.at(t.project_id).clients;
                   },
                   [&](const PublishTaskTx& t) {
                       s.tasks[{t.project_id, t.task_id}] = TaskRecord{
                           t.round, t.h_model, t.h_keys, t.task_id, t.project_id, e.sender, t.deadline,
                           e.timestamp, e.block_index};
                       auto& p = s.projects.at(t.project_id);
                       p.last_round = t.round;
                       p.last_task = t.task_id;
                   },
                   [&](const UpdateModelTx& t) {
                       s.updates[{t.project_id, t.task_id, e.sender}] = UpdateRecord{
                           t.round, t.task_id, e.sender, t.h_model, t.h_ct_epk, t.project_id, e.timestamp,
                           e.block_index};
                   },
                   [&](const FeedbackModelTx& t) {
                       s.feedbacks[{t.project_id, t.task_id, t.client}] = FeedbackRecord{
                           t.round, t.task_id, t.project_id, t.client, e.timestamp, t.score_delta, t.terminate};
                       auto& c = s.clients.at(t.client);
                       const std::int64_t next = static_cast<std::int64_t>(c.score) + t.score_delta;
                       c.score = next < 0 ? 0 : static_cast<std::uint64_t>(next);
                   },
                   [&](const FinishProjectTx& t) {
                       auto& p = s.projects.at(t.project_id);
                       p.done = true;
                       s.accounts.at(p.owner).balance += p.escrow;
                       p.escrow = 0;
                   },
               },
               e.tx);
}

Event Ledger::commit(const Address& sender, std::uint64_t value, Transaction tx) {
    std::unique_lock lock(mutex_);
    const std::uint64_t now = clock_.now();
    validate(sender, value, tx, now);

    Event e;
    e.block_index = log_.size();
    e.timestamp = now;
    e.sender = sender;
    e.value = value;
    e.tx = std::move(tx);
    const std::uint16_t pid = std::visit([](const auto& t) { return t.project_id; }, e.tx);
    if (auto it = state_.projects.find(pid); it != state_.projects.end()) {
        e.n_clients = it->second.n_clients;
        e.last_round = it->second.last_round;
        e.last_task = it->second.last_task;
    }
    apply(state_, e);
    log_.push_back(e);
    return e;
}

Event Ledger::register_project(const Address& sender, std::uint64_t deposit, const RegisterProjectTx& tx) {
    return commit(sender, deposit, tx);
}
Event Ledger::register_client(const Address& sender, const RegisterClientTx& tx) { return commit(sender, 0, tx); }
Event Ledger::publish_task(const Address& sender, const PublishTaskTx& tx) { return commit(sender, 0, tx); }
Event Ledger::update_model(const Address& sender, const UpdateModelTx& tx) { return commit(sender, 0, tx); }
Event Ledger::feedback_model(const Address& sender, const FeedbackModelTx& tx) { return commit(sender, 0, tx); }
Event Ledger::finish_project(const Address& sender, const FinishProjectTx& tx) { return commit(sender, 0, tx); }

Subscription Ledger::subscribe(EventFilter filter) const {
    const std::uint64_t start = filter.from_genesis ? 0 : height();
    return Subscription(*this, std::move(filter), start);
}

std::uint64_t Ledger::height() const {
    std::shared_lock lock(mutex_);
    return log_.size();
}

std::vector<Event> Ledger::events() const {
    std::shared_lock lock(mutex_);
    return log_;
}

std::vector<Event> Ledger::events_since(std::uint64_t index) const {
    std::shared_lock lock(mutex_);
    if (index >= log_.size()) return {};
    return {log_.begin() + static_cast<std::ptrdiff_t>(index), log_.end()};
}

std::optional<Event> Ledger::event_at(std::uint64_t index) const {
    std::shared_lock lock(mutex_);
    if (index >= log_.size()) return std::nullopt;
    return log_[index];
}

LedgerState Ledger::snapshot() const {
    std::shared_lock lock(mutex_);
    return state_;
}

std::vector<GenesisAccount> Ledger::genesis() const {
    std::shared_lock lock(mutex_);
    return genesis_;
}

std::optional<Bytes> Ledger::public_key_of(const Address& address) const {
    std::shared_lock lock(mutex_);
    auto it = state_.accounts.find(address);
    if (it == state_.accounts.end()) return std::nullopt;
    return it->second.public_key;
}

std::optional<ProjectRecord> Ledger::project(std::uint16_t id) const {
    std::shared_lock lock(mutex_);
    auto it = state_.projects.find(id);
    if (it == state_.projects.end()) return std::nullopt;
    return it->second;
}

std::optional<ClientRecord> Ledger::client(const Address& address) const {
    std::shared_lock lock(mutex_);
    auto it = state_.clients.find(address);
    if (it == state_.clients.end()) return std::nullopt;
    return it->second;
}

std::optional<TaskRecord> Ledger::task(std::uint16_t project_id, std::uint16_t task_id) const {
    std::shared_lock lock(mutex_);
    auto it = state_.tasks.find({project_id, task_id});
    if (it == state_.tasks.end()) return std::nullopt;
    return it->second;
}

std::optional<UpdateRecord> Ledger::update(std::uint16_t project_id, std::uint16_t task_id,
                                           const Address& client) const {
    std::shared_lock lock(mutex_);
    auto it = state_.updates.find({project_id, task_id, client});
    if (it == state_.updates.end()) return std::nullopt;
    return it->second;
}

std::uint64_t Ledger::balance_of(const Address& address) const {
    std::shared_lock lock(mutex_);
    auto it = state_.accounts.find(address);
    return it == state_.accounts.end() ? 0 : it->second.balance;
}

std::uint64_t Ledger::total_value() const {
    std::shared_lock lock(mutex_);
    std::uint64_t total = 0;
    for (const auto& [_, a] : state_.accounts) total += a.balance;
    for (const auto& [_, p] : state_.projects) total += p.escrow;
    return total;
}

LedgerState Ledger::replay(const std::vector<GenesisAccount>& genesis, const std::vector<Event>& events) {
    LedgerState s;
    for (const auto& g : genesis) {
        const Address addr = crypto::address_of(g.public_key);
        s.accounts[addr] = Account{addr, g.public_key, g.balance};
    }
    for (const auto& e : events) apply(s, e);
    return s;
}

void Ledger::export_jsonl(std::ostream& out) const {
    using nlohmann::ordered_json;
    std::shared_lock lock(mutex_);
    for (const auto& e : log_) {
        ordered_json j;
        j["kind"] = std::string(to_string(e.kind()));
        j["block_index"] = e.block_index;
        std::visit(overloaded{
                       [&](const RegisterProjectTx& t) {
                           j["id_p"] = t.project_id;
                           j["nClients"] = t.n_clients;
                           j["sAddr"] = to_hex(e.sender);
                           j["h_M0"] = to_hex(t.h_model);
                           j["h_pks"] = to_hex(t.h_keys);
                           j["deposit"] = e.value;
                       },
                       [&](const RegisterClientTx& t) {
                           j["cAddr"] = to_hex(e.sender);
                           j["id_p"] = t.project_id;
                           j["sc"] = 0;
                           j["h_epk"] = to_hex(t.h_epk);
                       },
                       [&](const PublishTaskTx& t) {
                           j["r"] = t.round;
                           j["h_M"] = to_hex(t.h_model);
                           j["h_pks"] = opt_hash(t.h_keys);
                           j["id_p"] = t.project_id;
                           j["id_t"] = t.task_id;
                           j["nClients"] = e.n_clients;
                           j["D_t"] = t.deadline;
                           j["time"] = e.timestamp;
                       },
                       [&](const UpdateModelTx& t) {
                           j["r"] = t.round;
                           j["h_m"] = to_hex(t.h_model);
                           j["h_c_epk"] = opt_hash(t.h_ct_epk);
                           j["id_p"] = t.project_id;
                           j["id_t"] = t.task_id;
                           j["cAddr"] = to_hex(e.sender);
                           j["time"] = e.timestamp;
                       },
                       [&](const FeedbackModelTx& t) {
                           j["r"] = t.round;
                           j["id_p"] = t.project_id;
                           j["id_t"] = t.task_id;
                           j["h_m"] = to_hex(t.h_model);
                           j["h_pks"] = to_hex(t.h_keys);
                           j["cAddr"] = to_hex(t.client);
                           j["sc"] = t.score_delta;
                           j["T"] = t.terminate;
                       },
                       [&](const FinishProjectTx& t) {
                           j["r"] = e.last_round;
                           j["id_p"] = t.project_id;
                           j["id_t"] = e.last_task;
                           j["time"] = e.timestamp;
                       },
                   },
                   e.tx);
        j["sender"] = to_hex(e.sender);
        j["onchain_bytes"] = e.onchain_bytes();
        out << j.dump() << '\n';
    }
    for (const auto& [addr, a] : state_.accounts) {
        ordered_json j;
        j["kind"] = "Account";
        j["address"] = to_hex(addr);
        j["balance"] = a.balance;
        if (auto c = state_.clients.find(addr); c != state_.clients.end()) {
            j["id_p"] = c->second.project_id;
            j["score"] = c->second.score;
        }
        out << j.dump() << '\n';
    }
    for (const auto& [pid, p] : state_.projects) {
        ordered_json j;
        j["kind"] = "Project";
        j["id_p"] = pid;
        j["owner"] = to_hex(p.owner);
        j["clients"] = p.clients;
        j["nClients"] = p.n_clients;
        j["escrow"] = p.escrow;
        j["done"] = p.done;
        out << j.dump() << '\n';
    }
}

}  // namespace pqbfl::ledger
