#include "pqbfl/protocol/transcript.hpp"

#include <json.hpp>

namespace pqbfl::protocol {

OpCounters OpCounters::operator-(const OpCounters& o) const {
    OpCounters d;
    d.keygen = keygen - o.keygen;
    d.encap = encap - o.encap;
    d.decap = decap - o.decap;
    d.derive = derive - o.derive;
    d.sign = sign - o.sign;
    d.verify = verify - o.verify;
    d.dh_agree = dh_agree - o.dh_agree;
    d.root_ratchet = root_ratchet - o.root_ratchet;
    d.offchain_sent = offchain_sent - o.offchain_sent;
    d.offchain_received = offchain_received - o.offchain_received;
    d.key_material = key_material - o.key_material;
    d.onchain = onchain - o.onchain;
    return d;
}

OpCounters& OpCounters::operator+=(const OpCounters& o) {
    keygen += o.keygen;
    encap += o.encap;
    decap += o.decap;
    derive += o.derive;
    sign += o.sign;
    verify += o.verify;
    dh_agree += o.dh_agree;
    root_ratchet += o.root_ratchet;
    offchain_sent += o.offchain_sent;
    offchain_received += o.offchain_received;
    key_material += o.key_material;
    onchain += o.onchain;
    return *this;
}

std::string_view to_string(Side side) { return side == Side::server ? "server" : "participant"; }

std::string key_fingerprint(const crypto::Key32& key) {
    const auto h = crypto::digest(concat({as_bytes("pqbfl-key-fp"), key.view()}));
    return to_hex(ByteView(h).first(8));
}

namespace {

std::string_view direction_name(crypto::Direction d) {
    return d == crypto::Direction::server_to_participant ? "s2p" : "p2s";
}

std::string_view kind_name(MessageKind k) {
    switch (k) {
        case MessageKind::key_offer: return "key_offer";
        case MessageKind::key_reply: return "key_reply";
        case MessageKind::task: return "task";
        case MessageKind::update: return "update";
    }
    return "unknown";
}

MessageKind kind_from(const std::string& s) {
    if (s == "key_offer") return MessageKind::key_offer;
    if (s == "key_reply") return MessageKind::key_reply;
    if (s == "task") return MessageKind::task;
    if (s == "update") return MessageKind::update;
    throw DecodeError("unknown message kind " + s);
}

}  // namespace

void write_transcript_jsonl(std::ostream& out, const std::vector<TranscriptEntry>& entries) {
    for (const auto& e : entries) {
        nlohmann::ordered_json j;
        j["session"] = to_hex(e.session);
        j["side"] = std::string(to_string(e.side));
        j["round"] = e.round;
        j["epoch"] = e.epoch;
        j["step"] = e.step;
        j["direction"] = std::string(direction_name(e.direction));
        j["kind"] = std::string(kind_name(e.kind));
        j["payload_digest"] = to_hex(e.payload_digest);
        j["block_index"] = e.block_index ? nlohmann::ordered_json(*e.block_index) : nlohmann::ordered_json(nullptr);
        j["key_fp"] = e.key_fp;
        out << j.dump() << '\n';
    }
}

std::vector<TranscriptEntry> read_transcript_jsonl(std::istream& in) {
    std::vector<TranscriptEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            TranscriptEntry e;
            e.session = array_from_hex<20>(j.at("session").get<std::string>());
            const auto side = j.at("side").get<std::string>();
            if (side != "server" && side != "participant") throw DecodeError("bad side");
            e.side = side == "server" ? Side::server : Side::participant;
            e.round = j.at("round").get<std::uint32_t>();
            e.epoch = j.at("epoch").get<std::uint32_t>();
            e.step = j.at("step").get<std::uint32_t>();
            const auto dir = j.at("direction").get<std::string>();
            if (dir != "s2p" && dir != "p2s") throw DecodeError("bad direction");
            e.direction = dir == "s2p" ? crypto::Direction::server_to_participant
                                       : crypto::Direction::participant_to_server;
            e.kind = kind_from(j.at("kind").get<std::string>());
            e.payload_digest = array_from_hex<32>(j.at("payload_digest").get<std::string>());
            if (!j.at("block_index").is_null()) e.block_index = j.at("block_index").get<std::uint64_t>();
            e.key_fp = j.at("key_fp").get<std::string>();
            out.push_back(std::move(e));
        } catch (const nlohmann::json::exception& err) {
            throw DecodeError("transcript line " + std::to_string(lineno) + ": " + err.what());
        } catch (const DecodeError& err) {
            throw DecodeError("transcript line " + std::to_string(lineno) + ": " + err.what());
        }
    }
    return out;
}

}  // namespace pqbfl::protocol
