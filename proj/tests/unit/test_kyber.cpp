#include <gtest/gtest.h>
#include <openssl/evp.h>
#include <openssl/sha.h>

#include <memory>

#include "pqbfl/crypto/kyber768.hpp"

using namespace pqbfl;
namespace kyber = pqbfl::crypto::kyber768;

namespace {

std::string sha256_hex(ByteView data) {
    ByteArray<32> out{};
    SHA256(data.data(), data.size(), out.data());
    return to_hex(out);
}

// AES-256-CTR-DRBG as used by the reference KAT generator (rng.c).
class KatDrbg {
public:
    explicit KatDrbg(const ByteArray<48>& entropy) { update(&entropy); }

    Bytes random_bytes(std::size_t n) {
        Bytes out;
        while (out.size() < n) {
            increment();
            const auto block = aes_block(v_);
            const std::size_t take = std::min<std::size_t>(16, n - out.size());
            out.insert(out.end(), block.begin(), block.begin() + static_cast<std::ptrdiff_t>(take));
        }
        update(nullptr);
        return out;
    }

    template <std::size_t N>
    ByteArray<N> array() {
        const Bytes raw = random_bytes(N);
        ByteArray<N> out{};
        std::copy(raw.begin(), raw.end(), out.begin());
        return out;
    }

private:
    void increment() {
        for (int i = 15; i >= 0; --i) {
            if (++v_[i] != 0) break;
        }
    }

    ByteArray<16> aes_block(const ByteArray<16>& in) const {
        std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(EVP_CIPHER_CTX_new(),
                                                                             &EVP_CIPHER_CTX_free);
        EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_ecb(), nullptr, key_.data(), nullptr);
        EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
        ByteArray<16> out{};
        int len = 0;
        EVP_EncryptUpdate(ctx.get(), out.data(), &len, in.data(), 16);
        return out;
    }

    void update(const ByteArray<48>* provided) {
        ByteArray<48> temp{};
        for (int i = 0; i < 3; ++i) {
            increment();
            const auto block = aes_block(v_);
            std::copy(block.begin(), block.end(), temp.begin() + 16 * i);
        }
        if (provided != nullptr) {
            for (std::size_t i = 0; i < 48; ++i) temp[i] ^= (*provided)[i];
        }
        std::copy(temp.begin(), temp.begin() + 32, key_.begin());
        std::copy(temp.begin() + 32, temp.end(), v_.begin());
    }

    ByteArray<32> key_{};
    ByteArray<16> v_{};
};

ByteArray<32> counting(std::uint8_t start) {
    ByteArray<32> out{};
    for (std::size_t i = 0; i < 32; ++i) out[i] = static_cast<std::uint8_t>(start + i);
    return out;
}

}  // namespace

TEST(Kyber768, NistKatCountZero) {
    ByteArray<48> entropy{};
    for (std::size_t i = 0; i < 48; ++i) entropy[i] = static_cast<std::uint8_t>(i);
    KatDrbg master(entropy);
    const auto seed = master.array<48>();
    EXPECT_EQ(to_hex(seed),
              "061550234d158c5ec95595fe04ef7a25767f2e24cc2bc479d09d86dc9abcfde7"
              "056a8c266f9ef97ed08541dbd2e1ffa1");

    KatDrbg drbg(seed);
    const auto d = drbg.array<32>();
    const auto z = drbg.array<32>();
    const auto kp = kyber::keypair_derand(d, z);
    const auto coins = drbg.array<32>();
    const auto enc = kyber::encapsulate_derand(kp.public_key, coins);

    ASSERT_EQ(kp.public_key.size(), kyber::kPublicKeyBytes);
    ASSERT_EQ(kp.secret_key.size(), kyber::kSecretKeyBytes);
    ASSERT_EQ(enc.ciphertext.size(), kyber::kCiphertextBytes);
    EXPECT_EQ(to_hex(ByteView(kp.public_key).first(16)), "a72c2d9c843ee9f8313ecc7f86d6294d");
    EXPECT_EQ(sha256_hex(kp.public_key), "de5713a43cd0a032f5bd42f9c88a9e77651ab2dfcc39c15bfb311828f59c7011");
    EXPECT_EQ(sha256_hex(kp.secret_key), "db9d8342dc72a6102c90d111dc34c210524f6cb73eee989848e38711f8a04031");
    EXPECT_EQ(sha256_hex(enc.ciphertext), "ded7f7c48b92fc887f6a378e44b21cecdf909a606ef140c13e8716803edb5a6d");
    EXPECT_EQ(to_hex(enc.shared_secret), "914cb67fe5c38e73bf74181c0ac50428dedf7750a98058f7d536708774535b29");
    EXPECT_EQ(kyber::decapsulate(kp.secret_key, enc.ciphertext), enc.shared_secret);
}

TEST(Kyber768, DerandomizedVectorAndImplicitRejection) {
    const auto kp = kyber::keypair_derand(counting(0x00), counting(0x20));
    const auto enc = kyber::encapsulate_derand(kp.public_key, counting(0x40));
    EXPECT_EQ(to_hex(ByteView(kp.public_key).first(16)), "ec58a3b8081161b93ca506384104cfbc");
    EXPECT_EQ(sha256_hex(kp.public_key), "32992ebf18a03bc8efb6dc12782f0ec788dda3599580f5ffc8a52f761c7fbe5a");
    EXPECT_EQ(sha256_hex(kp.secret_key), "e5d4889e39eb5d8746b348d00571a9ed38997ac789e10092962a102436bebdd3");
    EXPECT_EQ(sha256_hex(enc.ciphertext), "ef1885c43a88337bfcbd0d2d33ae8bf4f96eb54012b61c0debe322f2eb4dabc5");
    EXPECT_EQ(to_hex(enc.shared_secret), "7973130dd759b854824a18a0e046afd26cdd02ec874734200bc98d387965de7c");

    Bytes bad = enc.ciphertext;
    bad[0] ^= 0x01;
    const auto rejected = kyber::decapsulate(kp.secret_key, bad);
    EXPECT_EQ(to_hex(rejected), "1f6f5151d7478ec9fe1fec0145f8df5e084f0497d82ef45aed4c280449e51a44");
    EXPECT_NE(rejected, enc.shared_secret);
}

TEST(Kyber768, RejectsMalformedPublicKey) {
    const auto kp = kyber::keypair_derand(counting(0x00), counting(0x20));
    Bytes short_pk(kp.public_key.begin(), kp.public_key.end() - 1);
    EXPECT_THROW(kyber::encapsulate_derand(short_pk, counting(0x40)), kyber::MalformedKey);

    // First 12-bit coefficient set to 0xfff >= q.
    Bytes bad = kp.public_key;
    bad[0] = 0xff;
    bad[1] |= 0x0f;
    EXPECT_THROW(kyber::encapsulate_derand(bad, counting(0x40)), kyber::MalformedKey);
}

TEST(Kyber768, RoundTripOverManySeeds) {
    for (std::uint8_t s = 0; s < 40; ++s) {
        const auto kp = kyber::keypair_derand(counting(s), counting(static_cast<std::uint8_t>(s + 100)));
        const auto enc = kyber::encapsulate_derand(kp.public_key, counting(static_cast<std::uint8_t>(s + 200)));
        EXPECT_EQ(kyber::decapsulate(kp.secret_key, enc.ciphertext), enc.shared_secret) << int(s);
    }
}
