#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "mpr/core/error.hpp"

namespace mpr::binary {

template <typename U>
void write_le(std::ostream& os, U value) {
    static_assert(std::is_unsigned_v<U>);
    char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    }
    os.write(bytes, sizeof(U));
}

inline void write_f32(std::ostream& os, const float value) { write_le(os, std::bit_cast<std::uint32_t>(value)); }
inline void write_f64(std::ostream& os, const double value) { write_le(os, std::bit_cast<std::uint64_t>(value)); }

template <typename U>
U read_le(std::istream& is, const char* what) {
    static_assert(std::is_unsigned_v<U>);
    unsigned char bytes[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
        throw error(error_category::format, std::string("truncated input while reading ") + what);
    }
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        value |= static_cast<U>(bytes[i]) << (8 * i);
    }
    return value;
}

inline float read_f32(std::istream& is, const char* what) {
    return std::bit_cast<float>(read_le<std::uint32_t>(is, what));
}
inline double read_f64(std::istream& is, const char* what) {
    return std::bit_cast<double>(read_le<std::uint64_t>(is, what));
}

inline void expect_magic(std::istream& is, const std::string& magic, const std::string& source) {
    std::string got(magic.size(), '\0');
    if (!is.read(got.data(), static_cast<std::streamsize>(magic.size())) || got != magic) {
        throw error(error_category::format, "bad magic in " + source + ", expected \"" + magic + "\"");
    }
}

} // namespace mpr::binary
