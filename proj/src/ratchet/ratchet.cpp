#include "pqbfl/ratchet/ratchet.hpp"

#include <limits>
#include <string>

namespace pqbfl::ratchet {

namespace {

constexpr std::string_view kRootLabel = "pqbfl-root";
constexpr std::string_view kChainLabel = "chain";
constexpr std::string_view kModelLabel = "model";

}  // namespace

void RatchetConfig::validate() const {
    if (ranges.empty()) throw InvalidRatchetConfig("ratchet config needs at least one range");
    for (auto l : ranges) {
        if (l == 0) throw InvalidRatchetConfig("ratchet range must be >= 1");
    }
}

std::uint32_t RatchetConfig::range_for(std::uint32_t epoch) const {
    if (epoch == 0) throw InvalidRatchetConfig("epochs start at 1");
    const std::size_t idx = std::min<std::size_t>(epoch - 1, ranges.size() - 1);
    return ranges[idx];
}

std::uint32_t round_of(std::uint32_t epoch, std::uint32_t step, const RatchetConfig& config) {
    config.validate();
    const std::uint32_t l = config.range_for(epoch);
    if (step < 1 || step > l) {
        throw InvalidRatchetConfig("step " + std::to_string(step) + " outside [1, " + std::to_string(l) + "]");
    }
    std::uint64_t round = step;
    for (std::uint32_t k = 1; k < epoch; ++k) round += config.range_for(k);
    if (round > std::numeric_limits<std::uint32_t>::max()) throw InvalidRatchetConfig("round overflow");
    return static_cast<std::uint32_t>(round);
}

void RatchetState::reseed(ByteView salt, const crypto::SharedSecret& ss_kem, const crypto::SharedSecret& ss_dh) {
    if (ss_kem.origin != crypto::SecretOrigin::kem || ss_dh.origin != crypto::SecretOrigin::dh) {
        throw std::invalid_argument("ratchet expects (kem, dh) shared secrets in that order");
    }
    Bytes ikm = concat({ss_kem.bytes.view(), ss_dh.bytes.view()});
    Bytes okm = crypto::hkdf(salt, ikm, as_bytes(kRootLabel), 64);
    root_ = crypto::Key32(ByteView(okm).first(32));
    chain_ = crypto::Key32(ByteView(okm).subspan(32, 32));
    crypto::secure_wipe(ikm);
    crypto::secure_wipe(okm);
}

RatchetState RatchetState::init_root(const crypto::SharedSecret& ss_kem, const crypto::SharedSecret& ss_dh,
                                     RatchetConfig config) {
    config.validate();
    RatchetState st;
    st.config_ = std::move(config);
    const ByteArray<crypto::kHkdfHashBytes> zero_salt{};
    st.reseed(zero_salt, ss_kem, ss_dh);
    st.epoch_ = 1;
    st.step_ = 0;
    return st;
}

ModelKey RatchetState::advance_symmetric() {
    if (exhausted()) {
        throw EpochExhausted("epoch " + std::to_string(epoch_) + " has issued all " + std::to_string(range()) +
                             " keys");
    }
    ModelKey key;
    key.bytes = crypto::hkdf32({}, chain_.view(), as_bytes(kModelLabel));
    chain_ = crypto::hkdf32({}, chain_.view(), as_bytes(kChainLabel));
    ++step_;
    key.epoch = epoch_;
    key.step = step_;
    key.round = round_of(epoch_, step_, config_);
    return key;
}

void RatchetState::advance_asymmetric(const crypto::SharedSecret& ss_kem, const crypto::SharedSecret& ss_dh) {
    const crypto::Key32 salt = root_;
    reseed(salt.view(), ss_kem, ss_dh);
    ++epoch_;
    step_ = 0;
}

Bytes RatchetState::serialize() const {
    ByteWriter w;
    w.u32(epoch_).u32(step_).raw(root_.view()).raw(chain_.view());
    w.u32(static_cast<std::uint32_t>(config_.ranges.size()));
    for (auto l : config_.ranges) w.u32(l);
    return std::move(w).bytes();
}

RatchetState RatchetState::deserialize(ByteView data) {
    ByteReader r(data);
    RatchetState st;
    st.epoch_ = r.u32();
    st.step_ = r.u32();
    st.root_ = crypto::Key32(r.raw(32));
    st.chain_ = crypto::Key32(r.raw(32));
    const std::uint32_t count = r.u32();
    if (count == 0 || count > r.remaining() / 4) throw DecodeError("ratchet state: bad range count");
    st.config_.ranges.clear();
    for (std::uint32_t i = 0; i < count; ++i) st.config_.ranges.push_back(r.u32());
    r.expect_end();
    try {
        st.config_.validate();
        if (st.epoch_ == 0 || st.step_ > st.range()) throw DecodeError("ratchet state: indices out of range");
    } catch (const InvalidRatchetConfig& e) {
        throw DecodeError(std::string("ratchet state: ") + e.what());
    }
    return st;
}

}  // namespace pqbfl::ratchet
