#include "pqbfl/crypto/secret.hpp"

#include <openssl/crypto.h>

namespace pqbfl::crypto {

void secure_wipe(std::span<std::uint8_t> data) noexcept {
    if (!data.empty()) OPENSSL_cleanse(data.data(), data.size());
}

}  // namespace pqbfl::crypto
