#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace mpr {

using sha256_digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256 (OpenSSL backed).
class sha256_hasher {
public:
    sha256_hasher();
    ~sha256_hasher();
    sha256_hasher(const sha256_hasher&) = delete;
    sha256_hasher& operator=(const sha256_hasher&) = delete;

    void update(std::span<const std::uint8_t> bytes);
    void update(std::string_view text);
    template <typename T>
    void update_pod(const T& value) {
        update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(&value), sizeof(T)));
    }
    sha256_digest finish();

private:
    struct impl;
    std::unique_ptr<impl> impl_;
};

sha256_digest sha256(std::string_view text);
std::string to_hex(const sha256_digest& digest);

} // namespace mpr
