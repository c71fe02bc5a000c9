#include "pqbfl/fl/model.hpp"

#include <bit>
#include <cmath>
#include <random>
#include <string>

namespace pqbfl::fl {

namespace {

constexpr std::size_t kMaxDimension = 1u << 22;

void require_finite(const std::vector<double>& values) {
    for (double v : values) {
        if (!std::isfinite(v)) throw ModelError("model contains a non-finite value");
    }
}

}  // namespace

ModelVector aggregate(const std::vector<ModelVector>& models, const AggregationWeights& weights) {
    if (models.empty()) throw ModelError("aggregate: no models");
    if (weights.count() != models.size()) {
        throw ModelError("aggregate: " + std::to_string(weights.count()) + " weights for " +
                         std::to_string(models.size()) + " models");
    }
    const std::size_t dim = models.front().values.size();
    const std::uint32_t round = models.front().round;
    for (const auto& m : models) {
        if (m.values.size() != dim) throw ModelError("aggregate: length mismatch");
        if (m.round != round) throw ModelError("aggregate: round mismatch");
        require_finite(m.values);
    }
    for (double w : weights.weights) {
        if (!std::isfinite(w) || w < 0) throw ModelError("aggregate: weights must be finite and non-negative");
    }

    const double n = static_cast<double>(models.size());
    ModelVector out;
    out.round = round;
    out.tag = ModelTag::global;
    out.values.assign(dim, 0.0);
    for (std::size_t i = 0; i < models.size(); ++i) {
        const double scale = weights.weights[i] / n;
        for (std::size_t k = 0; k < dim; ++k) out.values[k] += scale * models[i].values[k];
    }
    return out;
}

ModelVector local_train(const ModelVector& global, std::uint64_t participant_seed, double noise_scale,
                        const crypto::Address& owner) {
    require_finite(global.values);
    std::mt19937_64 gen(participant_seed);
    ModelVector out = global;
    out.tag = ModelTag::local;
    out.owner = owner;
    for (auto& v : out.values) {
        // 53 random bits -> u in [0, 1); spelled out so results do not depend
        // on the standard library's distribution implementation.
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        v += (u * 2.0 - 1.0) * noise_scale;
    }
    require_finite(out.values);
    return out;
}

ModelVector initial_model(std::size_t dimension, std::uint64_t seed) {
    ModelVector zero;
    zero.values.assign(dimension, 0.0);
    ModelVector m = local_train(zero, seed, 1.0, crypto::Address{});
    m.tag = ModelTag::global;
    m.round = 0;
    return m;
}

Bytes serialize_model(const ModelVector& model) {
    require_finite(model.values);
    if (model.values.size() > kMaxDimension) throw ModelError("model too large");
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(model.values.size())).u32(model.round).u8(static_cast<std::uint8_t>(model.tag));
    if (model.tag == ModelTag::local) w.raw(model.owner);
    for (double v : model.values) w.u64(std::bit_cast<std::uint64_t>(v));
    return std::move(w).bytes();
}

ModelVector deserialize_model(ByteView data) {
    ByteReader r(data);
    ModelVector m;
    const std::uint32_t len = r.u32();
    if (len > kMaxDimension) throw DecodeError("model length out of range");
    m.round = r.u32();
    const std::uint8_t tag = r.u8();
    if (tag == static_cast<std::uint8_t>(ModelTag::global)) {
        m.tag = ModelTag::global;
    } else if (tag == static_cast<std::uint8_t>(ModelTag::local)) {
        m.tag = ModelTag::local;
        m.owner = r.fixed<20>();
    } else {
        throw DecodeError("unknown model tag");
    }
    if (r.remaining() != static_cast<std::size_t>(len) * 8) throw DecodeError("model body length mismatch");
    m.values.reserve(len);
    for (std::uint32_t i = 0; i < len; ++i) m.values.push_back(std::bit_cast<double>(r.u64()));
    r.expect_end();
    require_finite(m.values);
    return m;
}

}  // namespace pqbfl::fl
