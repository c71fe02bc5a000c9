#include "pqbfl/harness/channel.hpp"

#include "pqbfl/crypto/kyber768.hpp"
#include "pqbfl/protocol/messages.hpp"

namespace pqbfl::harness {

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::replay: return "replay";
        case Scenario::tamper: return "tamper";
        case Scenario::free_ride: return "free-ride";
        case Scenario::mitm: return "mitm";
    }
    return "unknown";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
    if (name == "replay") return Scenario::replay;
    if (name == "tamper") return Scenario::tamper;
    if (name == "free-ride" || name == "free_ride") return Scenario::free_ride;
    if (name == "mitm" || name == "mitm-key-swap") return Scenario::mitm;
    return std::nullopt;
}

Bytes Channel::flip_one_byte(const Bytes& wire) {
    // Anywhere in the payload or the signature; header fields are left alone.
    const std::size_t start = protocol::Envelope::payload_offset();
    const std::size_t pos = start + static_cast<std::size_t>(rng_.uniform(wire.size() - start));
    Bytes out = wire;
    out[pos] ^= static_cast<std::uint8_t>(1u << rng_.uniform(8));
    return out;
}

Bytes Channel::swap_keys(const Bytes& wire) {
    auto env = protocol::Envelope::decode(wire);
    auto offer = protocol::KeyOffer::decode(env.payload);
    offer.kem_public = crypto::kem_keygen(rng_.array<32>()).public_key;
    offer.dh_public = crypto::dh_keygen(rng_).public_key;
    return protocol::seal_envelope(env.kind, *forger_, offer.encode()).encode();
}

std::vector<Delivery> Channel::transmit(const Bytes& wire, const Hop& hop) {
    using protocol::MessageKind;
    log_.insert(log_.end(), wire.begin(), wire.end());

    std::vector<Delivery> out;
    auto inject = [&](Bytes w, Scenario s) {
        ++injections_;
        out.push_back(Delivery{std::move(w), true, s});
    };
    const bool victim = hop.participant == 0;

    if (victim && hop.kind == MessageKind::key_offer && enabled(Scenario::mitm) && forger_ != nullptr) {
        inject(swap_keys(wire), Scenario::mitm);
    }
    if (victim && hop.round == attack_round_ && enabled(Scenario::tamper) &&
        (hop.kind == MessageKind::task || hop.kind == MessageKind::update)) {
        inject(flip_one_byte(wire), Scenario::tamper);
    }
    // A stale task from the previous round arrives ahead of the fresh one.
    if (victim && hop.kind == MessageKind::task && hop.round == attack_round_ && enabled(Scenario::replay) &&
        !tasks_.empty()) {
        inject(tasks_.back(), Scenario::replay);
    }

    out.push_back(Delivery{wire, false, std::nullopt});

    if (victim && hop.kind == MessageKind::update && hop.round == attack_round_ && enabled(Scenario::replay)) {
        inject(wire, Scenario::replay);
    }
    if (victim && hop.kind == MessageKind::task) tasks_.push_back(wire);
    return out;
}

}  // namespace pqbfl::harness
