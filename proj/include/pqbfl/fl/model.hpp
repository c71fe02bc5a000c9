#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pqbfl/common/bytes.hpp"
#include "pqbfl/crypto/suite.hpp"

namespace pqbfl::fl {

inline constexpr std::size_t kDefaultDimension = 64;

class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class ModelTag : std::uint8_t { global = 0, local = 1 };

struct ModelVector {
    std::vector<double> values;
    std::uint32_t round = 0;
    ModelTag tag = ModelTag::global;
    crypto::Address owner{};  // meaningful for local models only

    friend bool operator==(const ModelVector&, const ModelVector&) = default;
};

struct AggregationWeights {
    std::vector<double> weights;

    static AggregationWeights unit(std::size_t n) { return {std::vector<double>(n, 1.0)}; }
    std::size_t count() const { return weights.size(); }
};

/// M[k] = sum_i (w_i / N) * m_i[k], N = number of models.
ModelVector aggregate(const std::vector<ModelVector>& models, const AggregationWeights& weights);

/// Seeded stand-in for local training: global plus a uniform delta in
/// [-noise_scale, noise_scale) per coordinate.
ModelVector local_train(const ModelVector& global, std::uint64_t participant_seed, double noise_scale,
                        const crypto::Address& owner);

/// Deterministic starting point for M^0.
ModelVector initial_model(std::size_t dimension, std::uint64_t seed);

/// u32 length | u32 round | u8 tag | [20-byte owner if local] | f64 BE values.
Bytes serialize_model(const ModelVector& model);
/// Throws DecodeError on truncation or trailing bytes, ModelError on NaN/Inf.
ModelVector deserialize_model(ByteView data);

}  // namespace pqbfl::fl
