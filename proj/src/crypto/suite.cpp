#include "pqbfl/crypto/suite.hpp"

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/kdf.h>
#include <openssl/obj_mac.h>
#include <openssl/params.h>
#include <openssl/sha.h>

#include <memory>

#include "pqbfl/crypto/keccak.hpp"
#include "pqbfl/crypto/kyber768.hpp"

namespace pqbfl::crypto {

namespace {

struct BnFree {
    void operator()(BIGNUM* p) const { BN_clear_free(p); }
};
struct BnCtxFree {
    void operator()(BN_CTX* p) const { BN_CTX_free(p); }
};
struct GroupFree {
    void operator()(EC_GROUP* p) const { EC_GROUP_free(p); }
};
struct PointFree {
    void operator()(EC_POINT* p) const { EC_POINT_clear_free(p); }
};
struct CipherCtxFree {
    void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
struct KdfFree {
    void operator()(EVP_KDF* p) const { EVP_KDF_free(p); }
};
struct KdfCtxFree {
    void operator()(EVP_KDF_CTX* p) const { EVP_KDF_CTX_free(p); }
};
struct PkeyFree {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct PkeyCtxFree {
    void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct MdCtxFree {
    void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct EcdsaSigFree {
    void operator()(ECDSA_SIG* p) const { ECDSA_SIG_free(p); }
};

using Bn = std::unique_ptr<BIGNUM, BnFree>;
using BnCtx = std::unique_ptr<BN_CTX, BnCtxFree>;
using Group = std::unique_ptr<EC_GROUP, GroupFree>;
using Point = std::unique_ptr<EC_POINT, PointFree>;

void check(int ok, const char* what) {
    if (ok != 1) throw CryptoError(std::string("openssl: ") + what);
}

template <typename T>
T* check_ptr(T* p, const char* what) {
    if (p == nullptr) throw CryptoError(std::string("openssl: ") + what);
    return p;
}

Bn bn_from(ByteView bytes) {
    return Bn(check_ptr(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr), "BN_bin2bn"));
}

Bn bn_new() { return Bn(check_ptr(BN_new(), "BN_new")); }

ByteArray<32> bn_to32(const BIGNUM* bn) {
    ByteArray<32> out{};
    check(BN_bn2binpad(bn, out.data(), 32) == 32 ? 1 : 0, "BN_bn2binpad");
    return out;
}

class Curve {
public:
    explicit Curve(int nid)
        : group_(check_ptr(EC_GROUP_new_by_curve_name(nid), "EC_GROUP_new_by_curve_name")),
          ctx_(check_ptr(BN_CTX_new(), "BN_CTX_new")) {}

    const EC_GROUP* group() const { return group_.get(); }
    BN_CTX* ctx() const { return ctx_.get(); }
    const BIGNUM* order() const { return EC_GROUP_get0_order(group_.get()); }

    bool valid_scalar(ByteView scalar) const {
        Bn k = bn_from(scalar);
        return !BN_is_zero(k.get()) && BN_cmp(k.get(), order()) < 0;
    }

    Point multiply_generator(const BIGNUM* k) const {
        Point p(check_ptr(EC_POINT_new(group()), "EC_POINT_new"));
        check(EC_POINT_mul(group(), p.get(), k, nullptr, nullptr, ctx()), "EC_POINT_mul");
        return p;
    }

    Point multiply(const EC_POINT* base, const BIGNUM* k) const {
        Point p(check_ptr(EC_POINT_new(group()), "EC_POINT_new"));
        check(EC_POINT_mul(group(), p.get(), nullptr, base, k, ctx()), "EC_POINT_mul");
        return p;
    }

    // Accepts only 65-byte uncompressed encodings of finite on-curve points.
    Point decode(ByteView encoded) const {
        if (encoded.size() != 65 || encoded[0] != 0x04) {
            throw InvalidInput("point must be a 65-byte uncompressed encoding");
        }
        Point p(check_ptr(EC_POINT_new(group()), "EC_POINT_new"));
        if (EC_POINT_oct2point(group(), p.get(), encoded.data(), encoded.size(), ctx()) != 1 ||
            EC_POINT_is_at_infinity(group(), p.get()) == 1 ||
            EC_POINT_is_on_curve(group(), p.get(), ctx()) != 1) {
            throw InvalidInput("point is not on the curve");
        }
        return p;
    }

    Bytes encode(const EC_POINT* p) const {
        Bytes out(65);
        const std::size_t n =
            EC_POINT_point2oct(group(), p, POINT_CONVERSION_UNCOMPRESSED, out.data(), out.size(), ctx());
        if (n != 65) throw CryptoError("openssl: EC_POINT_point2oct");
        return out;
    }

    ByteArray<32> x_coordinate(const EC_POINT* p) const {
        Bn x = bn_new();
        check(EC_POINT_get_affine_coordinates(group(), p, x.get(), nullptr, ctx()),
              "EC_POINT_get_affine_coordinates");
        return bn_to32(x.get());
    }

private:
    Group group_;
    BnCtx ctx_;
};

// EC_GROUP/BN_CTX are not shareable across threads; one set per thread.
const Curve& p256() {
    thread_local const Curve curve(NID_X9_62_prime256v1);
    return curve;
}

const Curve& secp256k1() {
    thread_local const Curve curve(NID_secp256k1);
    return curve;
}

ByteArray<32> sample_scalar(const Curve& curve, Rng& rng) {
    for (;;) {
        auto candidate = rng.array<32>();
        if (curve.valid_scalar(candidate)) return candidate;
    }
}

ByteArray<32> sha256(ByteView data) {
    ByteArray<32> out{};
    SHA256(data.data(), data.size(), out.data());
    return out;
}

ByteArray<32> hmac_sha256(ByteView key, ByteView data) {
    ByteArray<32> out{};
    unsigned int len = 0;
    check_ptr(HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(), out.data(),
                   &len),
              "HMAC");
    return out;
}

// RFC 6979 section 3.2 with HMAC-SHA256; qlen = hlen = 256 so bits2int is
// the identity on the hash and bits2octets reduces it mod n.
class NonceGenerator {
public:
    NonceGenerator(const ByteArray<32>& x, const ByteArray<32>& h1_mod_n) {
        v_.fill(0x01);
        k_.fill(0x00);
        k_ = hmac_sha256(k_, concat({v_, ByteArray<1>{0x00}, x, h1_mod_n}));
        v_ = hmac_sha256(k_, v_);
        k_ = hmac_sha256(k_, concat({v_, ByteArray<1>{0x01}, x, h1_mod_n}));
        v_ = hmac_sha256(k_, v_);
    }
    ~NonceGenerator() {
        secure_wipe(k_);
        secure_wipe(v_);
    }

    ByteArray<32> next() {
        if (started_) {
            k_ = hmac_sha256(k_, concat({v_, ByteArray<1>{0x00}}));
            v_ = hmac_sha256(k_, v_);
        }
        started_ = true;
        v_ = hmac_sha256(k_, v_);
        return v_;
    }

private:
    ByteArray<32> k_{};
    ByteArray<32> v_{};
    bool started_ = false;
};

}  // namespace

KemKeyPair kem_keygen(const ByteArray<32>& seed) {
    auto expanded = keccak::sha3_512(seed);
    ByteArray<32> d{};
    ByteArray<32> z{};
    std::copy(expanded.begin(), expanded.begin() + 32, d.begin());
    std::copy(expanded.begin() + 32, expanded.end(), z.begin());
    auto kp = kyber768::keypair_derand(d, z);
    secure_wipe(expanded);
    secure_wipe(d);
    secure_wipe(z);
    return KemKeyPair(std::move(kp.secret_key), std::move(kp.public_key));
}

KemEncapsulation kem_encap_derand(ByteView public_key, const ByteArray<32>& coins) {
    try {
        auto enc = kyber768::encapsulate_derand(public_key, coins);
        KemEncapsulation out{std::move(enc.ciphertext), {Key32(enc.shared_secret), SecretOrigin::kem}};
        secure_wipe(enc.shared_secret);
        return out;
    } catch (const kyber768::MalformedKey& e) {
        throw InvalidInput(e.what());
    }
}

KemEncapsulation kem_encap(ByteView public_key, Rng& rng) {
    auto coins = rng.array<32>();
    auto out = kem_encap_derand(public_key, coins);
    secure_wipe(coins);
    return out;
}

SharedSecret kem_decap(ByteView secret_key, ByteView ciphertext) {
    try {
        auto ss = kyber768::decapsulate(secret_key, ciphertext);
        SharedSecret out{Key32(ss), SecretOrigin::kem};
        secure_wipe(ss);
        return out;
    } catch (const std::invalid_argument& e) {
        throw InvalidInput(e.what());
    }
}

DhKeyPair dh_from_secret(const ByteArray<32>& scalar) {
    const Curve& curve = p256();
    if (!curve.valid_scalar(scalar)) throw InvalidInput("P-256 scalar out of range");
    Bn k = bn_from(scalar);
    BN_set_flags(k.get(), BN_FLG_CONSTTIME);
    Point pub = curve.multiply_generator(k.get());
    return DhKeyPair{Key32(scalar), curve.encode(pub.get())};
}

DhKeyPair dh_keygen(Rng& rng) {
    auto scalar = sample_scalar(p256(), rng);
    auto kp = dh_from_secret(scalar);
    secure_wipe(scalar);
    return kp;
}

SharedSecret dh_agree(const Key32& my_secret, ByteView peer_public) {
    const Curve& curve = p256();
    Point peer = curve.decode(peer_public);
    Bn k = bn_from(my_secret.view());
    BN_set_flags(k.get(), BN_FLG_CONSTTIME);
    Point shared = curve.multiply(peer.get(), k.get());
    if (EC_POINT_is_at_infinity(curve.group(), shared.get()) == 1) {
        throw InvalidInput("DH result is the point at infinity");
    }
    auto x = curve.x_coordinate(shared.get());
    SharedSecret out{Key32(x), SecretOrigin::dh};
    secure_wipe(x);
    return out;
}

Address address_of(ByteView public_key) {
    const auto h = sha256(public_key);
    Address out{};
    std::copy(h.end() - 20, h.end(), out.begin());
    return out;
}

SigKeyPair sig_from_secret(const ByteArray<32>& scalar) {
    const Curve& curve = secp256k1();
    if (!curve.valid_scalar(scalar)) throw InvalidInput("secp256k1 scalar out of range");
    Bn k = bn_from(scalar);
    BN_set_flags(k.get(), BN_FLG_CONSTTIME);
    Point pub = curve.multiply_generator(k.get());
    Bytes encoded = curve.encode(pub.get());
    const Address addr = address_of(encoded);
    return SigKeyPair{Key32(scalar), std::move(encoded), addr};
}

SigKeyPair sig_keygen(Rng& rng) {
    auto scalar = sample_scalar(secp256k1(), rng);
    auto kp = sig_from_secret(scalar);
    secure_wipe(scalar);
    return kp;
}

Signature sign(const Key32& secret, ByteView message) {
    const Curve& curve = secp256k1();
    BN_CTX* ctx = curve.ctx();
    const BIGNUM* n = curve.order();

    Bn x = bn_from(secret.view());
    BN_set_flags(x.get(), BN_FLG_CONSTTIME);
    if (BN_is_zero(x.get()) || BN_cmp(x.get(), n) >= 0) throw InvalidInput("secp256k1 scalar out of range");

    Bn e = bn_from(sha256(message));
    check(BN_nnmod(e.get(), e.get(), n, ctx), "BN_nnmod");
    const auto h1_mod_n = bn_to32(e.get());

    NonceGenerator nonces(secret.array(), h1_mod_n);
    Bn half = bn_new();
    check(BN_rshift1(half.get(), n), "BN_rshift1");

    for (;;) {
        auto candidate = nonces.next();
        Bn k = bn_from(candidate);
        secure_wipe(candidate);
        if (BN_is_zero(k.get()) || BN_cmp(k.get(), n) >= 0) continue;
        BN_set_flags(k.get(), BN_FLG_CONSTTIME);

        Point kg = curve.multiply_generator(k.get());
        Bn r = bn_from(curve.x_coordinate(kg.get()));
        check(BN_nnmod(r.get(), r.get(), n, ctx), "BN_nnmod");
        if (BN_is_zero(r.get())) continue;

        Bn s = bn_new();
        Bn kinv(check_ptr(BN_mod_inverse(nullptr, k.get(), n, ctx), "BN_mod_inverse"));
        check(BN_mod_mul(s.get(), r.get(), x.get(), n, ctx), "BN_mod_mul");
        check(BN_mod_add(s.get(), s.get(), e.get(), n, ctx), "BN_mod_add");
        check(BN_mod_mul(s.get(), s.get(), kinv.get(), n, ctx), "BN_mod_mul");
        if (BN_is_zero(s.get())) continue;
        if (BN_cmp(s.get(), half.get()) > 0) check(BN_sub(s.get(), n, s.get()), "BN_sub");

        Signature sig{};
        const auto rb = bn_to32(r.get());
        const auto sb = bn_to32(s.get());
        std::copy(rb.begin(), rb.end(), sig.begin());
        std::copy(sb.begin(), sb.end(), sig.begin() + 32);
        return sig;
    }
}

bool verify(ByteView public_key, ByteView message, ByteView signature) noexcept {
    try {
        if (signature.size() != kSignatureBytes) return false;
        const Curve& curve = secp256k1();
        curve.decode(public_key);

        Bn r = bn_from(signature.subspan(0, 32));
        Bn s = bn_from(signature.subspan(32, 32));
        Bn half = bn_new();
        check(BN_rshift1(half.get(), curve.order()), "BN_rshift1");
        if (BN_is_zero(r.get()) || BN_is_zero(s.get()) || BN_cmp(r.get(), curve.order()) >= 0 ||
            BN_cmp(s.get(), half.get()) > 0) {
            return false;
        }

        std::unique_ptr<ECDSA_SIG, EcdsaSigFree> sig(check_ptr(ECDSA_SIG_new(), "ECDSA_SIG_new"));
        check(ECDSA_SIG_set0(sig.get(), r.release(), s.release()), "ECDSA_SIG_set0");
        unsigned char* der = nullptr;
        const int der_len = i2d_ECDSA_SIG(sig.get(), &der);
        if (der_len <= 0) return false;
        const Bytes der_bytes(der, der + der_len);
        OPENSSL_free(der);

        char group_name[] = "secp256k1";
        Bytes pub(public_key.begin(), public_key.end());
        OSSL_PARAM params[] = {
            OSSL_PARAM_construct_utf8_string(OSSL_PKEY_PARAM_GROUP_NAME, group_name, 0),
            OSSL_PARAM_construct_octet_string(OSSL_PKEY_PARAM_PUB_KEY, pub.data(), pub.size()),
            OSSL_PARAM_construct_end(),
        };
        std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree> pctx(EVP_PKEY_CTX_new_from_name(nullptr, "EC", nullptr));
        if (!pctx || EVP_PKEY_fromdata_init(pctx.get()) != 1) return false;
        EVP_PKEY* raw = nullptr;
        if (EVP_PKEY_fromdata(pctx.get(), &raw, EVP_PKEY_PUBLIC_KEY, params) != 1) return false;
        std::unique_ptr<EVP_PKEY, PkeyFree> pkey(raw);

        std::unique_ptr<EVP_MD_CTX, MdCtxFree> md(EVP_MD_CTX_new());
        if (!md || EVP_DigestVerifyInit(md.get(), nullptr, EVP_sha256(), nullptr, pkey.get()) != 1) return false;
        return EVP_DigestVerify(md.get(), der_bytes.data(), der_bytes.size(), message.data(), message.size()) == 1;
    } catch (...) {
        return false;
    }
}

Digest digest(ByteView data) { return sha256(data); }

Bytes hkdf(ByteView salt, ByteView ikm, ByteView label, std::size_t out_len) {
    if (out_len > 255 * kHkdfHashBytes) throw InvalidInput("hkdf: output length exceeds 255 * HashLen");
    Bytes out(out_len);
    if (out_len == 0) return out;

    ByteArray<kHkdfHashBytes> zero_salt{};
    const ByteView effective_salt = salt.empty() ? ByteView(zero_salt) : salt;
    // OpenSSL rejects a zero-length key parameter; HKDF is defined for it.
    const std::uint8_t empty_ikm = 0;

    std::unique_ptr<EVP_KDF, KdfFree> kdf(check_ptr(EVP_KDF_fetch(nullptr, "HKDF", nullptr), "EVP_KDF_fetch"));
    std::unique_ptr<EVP_KDF_CTX, KdfCtxFree> ctx(check_ptr(EVP_KDF_CTX_new(kdf.get()), "EVP_KDF_CTX_new"));
    char md_name[] = "SHA384";
    OSSL_PARAM params[] = {
        OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, md_name, 0),
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_KEY,
                                          const_cast<std::uint8_t*>(ikm.empty() ? &empty_ikm : ikm.data()),
                                          ikm.size()),
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_SALT, const_cast<std::uint8_t*>(effective_salt.data()),
                                          effective_salt.size()),
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_INFO, const_cast<std::uint8_t*>(label.data()),
                                          label.size()),
        OSSL_PARAM_construct_end(),
    };
    check(EVP_KDF_derive(ctx.get(), out.data(), out.size(), params), "EVP_KDF_derive");
    return out;
}

Key32 hkdf32(ByteView salt, ByteView ikm, ByteView label) {
    Bytes raw = hkdf(salt, ikm, label, 32);
    Key32 key(raw);
    secure_wipe(raw);
    return key;
}

Bytes aead_seal(const Key32& key, const Nonce& nonce, ByteView aad, ByteView plaintext) {
    std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree> ctx(check_ptr(EVP_CIPHER_CTX_new(), "EVP_CIPHER_CTX_new"));
    check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr), "EVP_EncryptInit_ex");
    check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()), nullptr),
          "EVP_CTRL_GCM_SET_IVLEN");
    check(EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.array().data(), nonce.data()), "EVP_EncryptInit_ex");

    int len = 0;
    if (!aad.empty()) {
        check(EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())),
              "EVP_EncryptUpdate");
    }
    Bytes out(plaintext.size() + kAeadTagBytes);
    int written = 0;
    if (!plaintext.empty()) {
        check(EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(), static_cast<int>(plaintext.size())),
              "EVP_EncryptUpdate");
        written = len;
    }
    check(EVP_EncryptFinal_ex(ctx.get(), out.data() + written, &len), "EVP_EncryptFinal_ex");
    check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kAeadTagBytes, out.data() + plaintext.size()),
          "EVP_CTRL_GCM_GET_TAG");
    return out;
}

Bytes aead_open(const Key32& key, const Nonce& nonce, ByteView aad, ByteView sealed) {
    if (sealed.size() < kAeadTagBytes) throw AuthFailure("aead: ciphertext shorter than tag");
    const std::size_t body = sealed.size() - kAeadTagBytes;

    std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree> ctx(check_ptr(EVP_CIPHER_CTX_new(), "EVP_CIPHER_CTX_new"));
    check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr), "EVP_DecryptInit_ex");
    check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()), nullptr),
          "EVP_CTRL_GCM_SET_IVLEN");
    check(EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.array().data(), nonce.data()), "EVP_DecryptInit_ex");

    int len = 0;
    if (!aad.empty()) {
        check(EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())),
              "EVP_DecryptUpdate");
    }
    Bytes out(body);
    int written = 0;
    if (body > 0) {
        check(EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data(), static_cast<int>(body)),
              "EVP_DecryptUpdate");
        written = len;
    }
    Bytes tag(sealed.begin() + static_cast<std::ptrdiff_t>(body), sealed.end());
    check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kAeadTagBytes, tag.data()), "EVP_CTRL_GCM_SET_TAG");
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + written, &len) != 1) {
        secure_wipe(out);
        throw AuthFailure("aead: authentication failed");
    }
    return out;
}

Nonce nonce_for(std::uint32_t round, Direction dir) {
    ByteWriter w;
    w.u32(round).u8(static_cast<std::uint8_t>(dir));
    const auto h = digest(w.bytes());
    Nonce out{};
    std::copy(h.begin(), h.begin() + out.size(), out.begin());
    return out;
}

}  // namespace pqbfl::crypto
