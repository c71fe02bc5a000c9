#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pqbfl/common/bytes.hpp"
#include "pqbfl/crypto/suite.hpp"

namespace pqbfl::ratchet {

class RatchetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// All L_j symmetric steps of the current epoch are spent; an asymmetric
/// ratchet must happen before the next model key.
class EpochExhausted : public RatchetError {
public:
    using RatchetError::RatchetError;
};

class InvalidRatchetConfig : public RatchetError {
public:
    using RatchetError::RatchetError;
};

/// Symmetric range per epoch. Epochs past the end of the list reuse the
/// last entry, so a single value means a fixed L.
struct RatchetConfig {
    std::vector<std::uint32_t> ranges{10};

    static RatchetConfig fixed(std::uint32_t l) { return RatchetConfig{{l}}; }

    void validate() const;
    std::uint32_t range_for(std::uint32_t epoch) const;

    friend bool operator==(const RatchetConfig&, const RatchetConfig&) = default;
};

/// Global round for step i of epoch j: sum of the earlier ranges plus i.
std::uint32_t round_of(std::uint32_t epoch, std::uint32_t step, const RatchetConfig& config);

struct ModelKey {
    crypto::Key32 bytes;
    std::uint32_t epoch = 0;
    std::uint32_t step = 0;
    std::uint32_t round = 0;
};

class RatchetState {
public:
    /// RK_1 || CK_0 = HKDF(salt = zeros, ss_kem || ss_dh, "pqbfl-root", 64).
    static RatchetState init_root(const crypto::SharedSecret& ss_kem, const crypto::SharedSecret& ss_dh,
                                  RatchetConfig config);

    /// Issues K_{i+1,j} and replaces the chain key; the predecessor is wiped.
    ModelKey advance_symmetric();

    /// RK_{j+1} || CK_0 = HKDF(salt = RK_j, ss_kem' || ss_dh', "pqbfl-root", 64).
    void advance_asymmetric(const crypto::SharedSecret& ss_kem, const crypto::SharedSecret& ss_dh);

    std::uint32_t epoch() const { return epoch_; }
    std::uint32_t step() const { return step_; }
    std::uint32_t range() const { return config_.range_for(epoch_); }
    bool exhausted() const { return step_ >= range(); }
    /// Round the next advance_symmetric() will key.
    std::uint32_t next_round() const { return round_of(epoch_, step_ + 1, config_); }
    const RatchetConfig& config() const { return config_; }
    const crypto::Key32& root_key() const { return root_; }
    const crypto::Key32& chain_key() const { return chain_; }

    /// epoch u32 | step u32 | root 32 | chain 32 | count u32 | ranges u32...
    Bytes serialize() const;
    static RatchetState deserialize(ByteView data);

    friend bool operator==(const RatchetState&, const RatchetState&) = default;

private:
    RatchetState() = default;
    void reseed(ByteView salt, const crypto::SharedSecret& ss_kem, const crypto::SharedSecret& ss_dh);

    crypto::Key32 root_;
    crypto::Key32 chain_;
    std::uint32_t epoch_ = 0;
    std::uint32_t step_ = 0;
    RatchetConfig config_;
};

}  // namespace pqbfl::ratchet
