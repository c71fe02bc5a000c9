#include "pqbfl/crypto/kyber768.hpp"

#include <array>

#include "pqbfl/crypto/keccak.hpp"
#include "pqbfl/crypto/secret.hpp"

namespace pqbfl::crypto::kyber768 {

namespace {

constexpr int kN = 256;
constexpr int kK = 3;
constexpr int kQ = 3329;
constexpr int kEta1 = 2;
constexpr int kEta2 = 2;
constexpr int kDu = 10;
constexpr int kDv = 4;
constexpr std::size_t kPolyBytes = 384;
constexpr std::size_t kPolyVecBytes = kK * kPolyBytes;
constexpr std::size_t kCompressedU = kK * kN * kDu / 8;
constexpr std::size_t kCompressedV = kN * kDv / 8;

static_assert(kPublicKeyBytes == kPolyVecBytes + 32);
static_assert(kSecretKeyBytes == kPolyVecBytes + kPublicKeyBytes + 64);
static_assert(kCiphertextBytes == kCompressedU + kCompressedV);

using Poly = std::array<std::int32_t, kN>;
using PolyVec = std::array<Poly, kK>;

constexpr std::int32_t reduce(std::int64_t x) {
    std::int64_t r = x % kQ;
    return static_cast<std::int32_t>(r < 0 ? r + kQ : r);
}

constexpr std::int32_t pow_mod(std::int32_t base, int exp) {
    std::int64_t acc = 1;
    std::int64_t b = base;
    while (exp > 0) {
        if (exp & 1) acc = acc * b % kQ;
        b = b * b % kQ;
        exp >>= 1;
    }
    return static_cast<std::int32_t>(acc);
}

constexpr int bitrev7(int v) {
    int out = 0;
    for (int i = 0; i < 7; ++i) out |= ((v >> i) & 1) << (6 - i);
    return out;
}

// zeta = 17 is a primitive 256-th root of unity mod q.
constexpr std::array<std::int32_t, 128> kZetas = [] {
    std::array<std::int32_t, 128> z{};
    for (int i = 0; i < 128; ++i) z[i] = pow_mod(17, bitrev7(i));
    return z;
}();

constexpr std::array<std::int32_t, 128> kGammas = [] {
    std::array<std::int32_t, 128> g{};
    for (int i = 0; i < 128; ++i) g[i] = pow_mod(17, 2 * bitrev7(i) + 1);
    return g;
}();

void ntt(Poly& f) {
    int k = 1;
    for (int len = 128; len >= 2; len /= 2) {
        for (int start = 0; start < kN; start += 2 * len) {
            const std::int64_t zeta = kZetas[k++];
            for (int j = start; j < start + len; ++j) {
                const std::int32_t t = reduce(zeta * f[j + len]);
                f[j + len] = reduce(static_cast<std::int64_t>(f[j]) - t);
                f[j] = reduce(static_cast<std::int64_t>(f[j]) + t);
            }
        }
    }
}

void inverse_ntt(Poly& f) {
    int k = 127;
    for (int len = 2; len <= 128; len *= 2) {
        for (int start = 0; start < kN; start += 2 * len) {
            const std::int64_t zeta = kZetas[k--];
            for (int j = start; j < start + len; ++j) {
                const std::int32_t t = f[j];
                f[j] = reduce(static_cast<std::int64_t>(t) + f[j + len]);
                f[j + len] = reduce(zeta * (static_cast<std::int64_t>(f[j + len]) - t));
            }
        }
    }
    for (auto& c : f) c = reduce(static_cast<std::int64_t>(c) * 3303);
}

Poly multiply_ntt(const Poly& a, const Poly& b) {
    Poly c{};
    for (int i = 0; i < 128; ++i) {
        const std::int64_t a0 = a[2 * i], a1 = a[2 * i + 1];
        const std::int64_t b0 = b[2 * i], b1 = b[2 * i + 1];
        c[2 * i] = reduce(a0 * b0 + reduce(a1 * b1) * static_cast<std::int64_t>(kGammas[i]));
        c[2 * i + 1] = reduce(a0 * b1 + a1 * b0);
    }
    return c;
}

void add_into(Poly& acc, const Poly& x) {
    for (int i = 0; i < kN; ++i) acc[i] = reduce(static_cast<std::int64_t>(acc[i]) + x[i]);
}

Poly inner_product_ntt(const PolyVec& a, const PolyVec& b) {
    Poly acc{};
    for (int i = 0; i < kK; ++i) add_into(acc, multiply_ntt(a[i], b[i]));
    return acc;
}

// Rejection-samples a uniform NTT-domain polynomial from SHAKE128(rho || x || y).
Poly sample_ntt(const ByteArray<32>& rho, std::uint8_t x, std::uint8_t y) {
    keccak::Shake128 xof;
    xof.absorb(rho);
    const std::array<std::uint8_t, 2> idx = {x, y};
    xof.absorb(idx);
    Poly out{};
    int filled = 0;
    std::array<std::uint8_t, keccak::Shake128::kRate> buf{};
    std::size_t pos = buf.size();
    while (filled < kN) {
        if (pos + 3 > buf.size()) {
            xof.squeeze(buf);
            pos = 0;
        }
        const int d1 = buf[pos] | ((buf[pos + 1] & 0x0f) << 8);
        const int d2 = (buf[pos + 1] >> 4) | (buf[pos + 2] << 4);
        pos += 3;
        if (d1 < kQ) out[filled++] = d1;
        if (d2 < kQ && filled < kN) out[filled++] = d2;
    }
    return out;
}

// Centered binomial distribution over PRF(seed, nonce) = SHAKE256(seed || nonce).
Poly sample_cbd(ByteView seed, std::uint8_t nonce, int eta) {
    Bytes input(seed.begin(), seed.end());
    input.push_back(nonce);
    Bytes stream(64 * static_cast<std::size_t>(eta));
    keccak::shake256(input, stream);
    auto bit = [&](int i) { return (stream[i / 8] >> (i % 8)) & 1; };
    Poly out{};
    for (int i = 0; i < kN; ++i) {
        int a = 0, b = 0;
        for (int j = 0; j < eta; ++j) {
            a += bit(2 * i * eta + j);
            b += bit(2 * i * eta + eta + j);
        }
        out[i] = reduce(a - b);
    }
    return out;
}

void encode_poly(const Poly& f, int d, std::uint8_t* out) {
    std::uint32_t acc = 0;
    int bits = 0;
    std::size_t o = 0;
    for (int i = 0; i < kN; ++i) {
        acc |= static_cast<std::uint32_t>(f[i]) << bits;
        bits += d;
        while (bits >= 8) {
            out[o++] = static_cast<std::uint8_t>(acc);
            acc >>= 8;
            bits -= 8;
        }
    }
}

Poly decode_poly(const std::uint8_t* in, int d) {
    Poly f{};
    std::uint32_t acc = 0;
    int bits = 0;
    std::size_t o = 0;
    const std::uint32_t mask = (1u << d) - 1;
    for (int i = 0; i < kN; ++i) {
        while (bits < d) {
            acc |= static_cast<std::uint32_t>(in[o++]) << bits;
            bits += 8;
        }
        f[i] = static_cast<std::int32_t>(acc & mask);
        acc >>= d;
        bits -= d;
    }
    return f;
}

std::int32_t compress(std::int32_t x, int d) {
    const std::uint64_t scaled = (static_cast<std::uint64_t>(x) << d) + kQ / 2;
    return static_cast<std::int32_t>((scaled / kQ) & ((1u << d) - 1));
}

std::int32_t decompress(std::int32_t y, int d) {
    return static_cast<std::int32_t>((static_cast<std::uint64_t>(y) * kQ + (1u << (d - 1))) >> d);
}

Poly compress_poly(const Poly& f, int d) {
    Poly out{};
    for (int i = 0; i < kN; ++i) out[i] = compress(f[i], d);
    return out;
}

Poly decompress_poly(const Poly& f, int d) {
    Poly out{};
    for (int i = 0; i < kN; ++i) out[i] = decompress(f[i], d);
    return out;
}

PolyVec decode_vec12(const std::uint8_t* in, bool check_modulus) {
    PolyVec v{};
    for (int i = 0; i < kK; ++i) {
        v[i] = decode_poly(in + i * kPolyBytes, 12);
        if (check_modulus) {
            for (auto c : v[i]) {
                if (c >= kQ) throw MalformedKey("kyber768: public key coefficient out of range");
            }
        }
    }
    return v;
}

struct CpaKeys {
    Bytes public_key;
    Bytes secret_key;
};

CpaKeys cpa_keygen(const ByteArray<32>& d) {
    const auto g = keccak::sha3_512(d);
    ByteArray<32> rho{};
    std::copy(g.begin(), g.begin() + 32, rho.begin());
    const ByteView sigma(g.data() + 32, 32);

    std::uint8_t nonce = 0;
    PolyVec s{}, e{};
    for (auto& p : s) {
        p = sample_cbd(sigma, nonce++, kEta1);
        ntt(p);
    }
    for (auto& p : e) {
        p = sample_cbd(sigma, nonce++, kEta1);
        ntt(p);
    }

    CpaKeys keys;
    keys.public_key.resize(kPublicKeyBytes);
    keys.secret_key.resize(kPolyVecBytes);
    for (int i = 0; i < kK; ++i) {
        Poly t{};
        for (int j = 0; j < kK; ++j) {
            add_into(t, multiply_ntt(sample_ntt(rho, static_cast<std::uint8_t>(j), static_cast<std::uint8_t>(i)), s[j]));
        }
        add_into(t, e[i]);
        encode_poly(t, 12, keys.public_key.data() + i * kPolyBytes);
        encode_poly(s[i], 12, keys.secret_key.data() + i * kPolyBytes);
    }
    std::copy(rho.begin(), rho.end(), keys.public_key.begin() + kPolyVecBytes);
    return keys;
}

Bytes cpa_encrypt(ByteView public_key, const ByteArray<32>& message, ByteView coins) {
    const PolyVec t_hat = decode_vec12(public_key.data(), true);
    ByteArray<32> rho{};
    std::copy(public_key.begin() + kPolyVecBytes, public_key.end(), rho.begin());

    std::uint8_t nonce = 0;
    PolyVec r{}, e1{};
    for (auto& p : r) {
        p = sample_cbd(coins, nonce++, kEta1);
        ntt(p);
    }
    for (auto& p : e1) p = sample_cbd(coins, nonce++, kEta2);
    const Poly e2 = sample_cbd(coins, nonce++, kEta2);

    Bytes ct(kCiphertextBytes);
    for (int i = 0; i < kK; ++i) {
        Poly u{};
        for (int j = 0; j < kK; ++j) {
            add_into(u, multiply_ntt(sample_ntt(rho, static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j)), r[j]));
        }
        inverse_ntt(u);
        add_into(u, e1[i]);
        encode_poly(compress_poly(u, kDu), kDu, ct.data() + i * (kN * kDu / 8));
    }

    Poly v = inner_product_ntt(t_hat, r);
    inverse_ntt(v);
    add_into(v, e2);
    add_into(v, decompress_poly(decode_poly(message.data(), 1), 1));
    encode_poly(compress_poly(v, kDv), kDv, ct.data() + kCompressedU);
    return ct;
}

ByteArray<32> cpa_decrypt(ByteView secret_key, ByteView ct) {
    PolyVec u{};
    for (int i = 0; i < kK; ++i) {
        u[i] = decompress_poly(decode_poly(ct.data() + i * (kN * kDu / 8), kDu), kDu);
        ntt(u[i]);
    }
    const Poly v = decompress_poly(decode_poly(ct.data() + kCompressedU, kDv), kDv);
    const PolyVec s_hat = decode_vec12(secret_key.data(), false);

    Poly w = inner_product_ntt(s_hat, u);
    inverse_ntt(w);
    for (int i = 0; i < kN; ++i) w[i] = reduce(static_cast<std::int64_t>(v[i]) - w[i]);

    ByteArray<32> m{};
    encode_poly(compress_poly(w, 1), 1, m.data());
    return m;
}

ByteArray<32> kdf(ByteView prekey, ByteView ciphertext) {
    const auto h_ct = keccak::sha3_256(ciphertext);
    ByteArray<32> out{};
    keccak::shake256(concat({prekey, h_ct}), out);
    return out;
}

}  // namespace

KeyPair keypair_derand(const ByteArray<32>& d, const ByteArray<32>& z) {
    CpaKeys cpa = cpa_keygen(d);
    const auto h_pk = keccak::sha3_256(cpa.public_key);
    KeyPair kp;
    kp.public_key = cpa.public_key;
    kp.secret_key = concat({cpa.secret_key, cpa.public_key, h_pk, z});
    secure_wipe(cpa.secret_key);
    return kp;
}

Encapsulation encapsulate_derand(ByteView public_key, const ByteArray<32>& coins) {
    if (public_key.size() != kPublicKeyBytes) {
        throw MalformedKey("kyber768: public key has wrong length");
    }
    const auto m = keccak::sha3_256(coins);
    const auto h_pk = keccak::sha3_256(public_key);
    auto g = keccak::sha3_512(concat({m, h_pk}));
    Encapsulation out;
    out.ciphertext = cpa_encrypt(public_key, m, ByteView(g.data() + 32, 32));
    out.shared_secret = kdf(ByteView(g.data(), 32), out.ciphertext);
    secure_wipe(g);
    return out;
}

ByteArray<kSharedSecretBytes> decapsulate(ByteView secret_key, ByteView ciphertext) {
    if (secret_key.size() != kSecretKeyBytes) {
        throw MalformedKey("kyber768: secret key has wrong length");
    }
    if (ciphertext.size() != kCiphertextBytes) {
        throw std::invalid_argument("kyber768: ciphertext has wrong length");
    }
    const ByteView sk_cpa = secret_key.subspan(0, kPolyVecBytes);
    const ByteView pk = secret_key.subspan(kPolyVecBytes, kPublicKeyBytes);
    const ByteView h_pk = secret_key.subspan(kPolyVecBytes + kPublicKeyBytes, 32);
    const ByteView z = secret_key.subspan(kPolyVecBytes + kPublicKeyBytes + 32, 32);

    auto m = cpa_decrypt(sk_cpa, ciphertext);
    auto g = keccak::sha3_512(concat({m, h_pk}));
    const Bytes reencrypted = cpa_encrypt(pk, m, ByteView(g.data() + 32, 32));

    std::uint8_t diff = 0;
    for (std::size_t i = 0; i < kCiphertextBytes; ++i) diff |= reencrypted[i] ^ ciphertext[i];
    // mask = 0xff when the ciphertexts match, 0x00 otherwise.
    const auto mask = static_cast<std::uint8_t>(-static_cast<int>((static_cast<unsigned>(diff) - 1u) >> 8 & 1u));

    ByteArray<32> prekey{};
    for (std::size_t i = 0; i < 32; ++i) {
        prekey[i] = static_cast<std::uint8_t>((g[i] & mask) | (z[i] & ~mask));
    }
    const auto out = kdf(prekey, ciphertext);
    secure_wipe(m);
    secure_wipe(g);
    secure_wipe(prekey);
    return out;
}

}  // namespace pqbfl::crypto::kyber768
