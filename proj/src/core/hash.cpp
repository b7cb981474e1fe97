#include "mpr/core/hash.hpp"

#include <openssl/evp.h>

#include "mpr/core/error.hpp"

namespace mpr {

struct sha256_hasher::impl {
    EVP_MD_CTX* ctx = nullptr;
};

sha256_hasher::sha256_hasher() : impl_(std::make_unique<impl>()) {
    impl_->ctx = EVP_MD_CTX_new();
    if (impl_->ctx == nullptr || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1) {
        throw error(error_category::io, "failed to initialise SHA-256 context");
    }
}

sha256_hasher::~sha256_hasher() {
    if (impl_ && impl_->ctx != nullptr) {
        EVP_MD_CTX_free(impl_->ctx);
    }
}

void sha256_hasher::update(const std::span<const std::uint8_t> bytes) {
    EVP_DigestUpdate(impl_->ctx, bytes.data(), bytes.size());
}

void sha256_hasher::update(const std::string_view text) {
    EVP_DigestUpdate(impl_->ctx, text.data(), text.size());
}

sha256_digest sha256_hasher::finish() {
    sha256_digest out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(impl_->ctx, out.data(), &len);
    return out;
}

sha256_digest sha256(const std::string_view text) {
    sha256_hasher h;
    h.update(text);
    return h.finish();
}

std::string to_hex(const sha256_digest& digest) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (const auto b : digest) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

} // namespace mpr
