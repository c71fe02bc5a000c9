#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pqbfl/common/bytes.hpp"
#include "pqbfl/crypto/suite.hpp"
#include "pqbfl/protocol/envelope.hpp"

namespace pqbfl::harness {

enum class Scenario { replay, tamper, free_ride, mitm };

std::string_view to_string(Scenario s);
/// Accepts replay, tamper, free-ride (or free_ride) and mitm.
std::optional<Scenario> parse_scenario(std::string_view name);

struct Delivery {
    Bytes wire;
    bool injected = false;
    std::optional<Scenario> attack;
};

/// Where an envelope sits in the run, so the channel can pick its targets.
struct Hop {
    protocol::MessageKind kind = protocol::MessageKind::task;
    std::uint32_t round = 0;
    std::size_t participant = 0;  // index of the participant end
};

/// In-process channel. Honest traffic passes unchanged; enabled scenarios
/// inject extra deliveries around designated envelopes. Every envelope is
/// also appended to the eavesdropper log.
class Channel {
public:
    Channel(std::set<Scenario> scenarios, std::uint32_t attack_round, crypto::Rng rng)
        : scenarios_(std::move(scenarios)), attack_round_(attack_round), rng_(std::move(rng)) {}

    /// Signing oracle for the MITM key swap (models forged classical ECDSA).
    void set_forger(const crypto::SigKeyPair* server_identity) { forger_ = server_identity; }

    std::vector<Delivery> transmit(const Bytes& wire, const Hop& hop);

    const Bytes& eavesdropped() const { return log_; }
    std::size_t injections() const { return injections_; }

private:
    bool enabled(Scenario s) const { return scenarios_.count(s) != 0; }
    Bytes flip_one_byte(const Bytes& wire);
    Bytes swap_keys(const Bytes& wire);

    std::set<Scenario> scenarios_;
    std::uint32_t attack_round_;
    crypto::Rng rng_;
    const crypto::SigKeyPair* forger_ = nullptr;
    Bytes log_;
    std::vector<Bytes> tasks_;  // honest task envelopes for the victim, by round
    std::size_t injections_ = 0;
};

}  // namespace pqbfl::harness
