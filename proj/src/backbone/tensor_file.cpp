#include "mpr/backbone/tensor_file.hpp"

#include <fstream>
#include <numeric>

#include "mpr/core/binary_io.hpp"
#include "mpr/core/error.hpp"

namespace mpr {

namespace {
constexpr const char* tensor_magic = "MPRT1";
}

std::size_t tensor::element_count() const {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           [](std::size_t acc, std::uint32_t d) { return acc * d; });
}

void write_tensor(std::ostream& os, const tensor& t) {
    if (t.dims.size() > 255) {
        throw error(error_category::invalid_argument, "tensor rank exceeds 255");
    }
    if (t.element_count() != t.data.size()) {
        throw error(error_category::dimension, "tensor payload does not match its dims");
    }
    os.write(tensor_magic, 5);
    binary::write_le(os, static_cast<std::uint8_t>(t.dims.size()));
    for (const auto d : t.dims) {
        binary::write_le(os, d);
    }
    for (const float v : t.data) {
        binary::write_f32(os, v);
    }
}

tensor read_tensor(std::istream& is, const std::string& source) {
    binary::expect_magic(is, tensor_magic, source);
    tensor t;
    const auto rank = binary::read_le<std::uint8_t>(is, "tensor rank");
    t.dims.resize(rank);
    for (auto& d : t.dims) {
        d = binary::read_le<std::uint32_t>(is, "tensor dims");
    }
    t.data.resize(t.element_count());
    for (auto& v : t.data) {
        v = binary::read_f32(is, "tensor payload");
    }
    return t;
}

void write_tensor_file(const std::filesystem::path& path, const tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw error(error_category::io, "cannot write tensor file " + path.string());
    }
    write_tensor(os, t);
}

tensor read_tensor_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw error(error_category::io, "missing tensor file " + path.string());
    }
    tensor t = read_tensor(is, path.string());
    if (is.peek() != std::char_traits<char>::eof()) {
        throw error(error_category::format, "trailing bytes in tensor file " + path.string());
    }
    return t;
}

tensor read_tensor_file(const std::filesystem::path& path, const std::size_t expected_rank) {
    tensor t = read_tensor_file(path);
    if (t.dims.size() != expected_rank) {
        throw error(error_category::format, "tensor file " + path.string() + " has rank " +
                                                std::to_string(t.dims.size()) + ", expected rank " +
                                                std::to_string(expected_rank));
    }
    return t;
}

} // namespace mpr
