#include "mpr/retrieval/checkpoint.hpp"

#include <fstream>

#include "mpr/backbone/tensor_file.hpp"
#include "mpr/core/binary_io.hpp"
#include "mpr/core/error.hpp"

namespace mpr::retrieval {

namespace {

constexpr const char* magic = "MPRW1";

void write_string(std::ostream& os, const std::string& s) {
    binary::write_le(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is, const char* what) {
    const auto n = binary::read_le<std::uint32_t>(is, what);
    std::string s(n, '\0');
    if (!is.read(s.data(), n)) {
        throw error(error_category::format, std::string("truncated input while reading ") + what);
    }
    return s;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const grm& net) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw error(error_category::io, "cannot write checkpoint " + path.string());
    }
    os.write(magic, 5);
    const sha256_digest h = net.config().hash();
    os.write(reinterpret_cast<const char*>(h.data()), static_cast<std::streamsize>(h.size()));
    write_string(os, net.config().to_json().dump());
    binary::write_le(os, static_cast<std::uint32_t>(net.params().size()));
    for (const auto& e : net.params()) {
        write_string(os, e.name);
        tensor t;
        t.dims = {static_cast<std::uint32_t>(e.value.rows()), static_cast<std::uint32_t>(e.value.cols())};
        t.data.reserve(static_cast<std::size_t>(e.value.size()));
        for (Eigen::Index r = 0; r < e.value.rows(); ++r) {
            for (Eigen::Index c = 0; c < e.value.cols(); ++c) {
                t.data.push_back(static_cast<float>(e.value(r, c)));
            }
        }
        write_tensor(os, t);
    }
    if (!os) {
        throw error(error_category::io, "failed writing checkpoint " + path.string());
    }
}

grm load_checkpoint(const std::filesystem::path& path, const std::optional<grm_config>& expected) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw error(error_category::io, "cannot open checkpoint " + path.string());
    }
    const std::string source = path.string();
    binary::expect_magic(is, magic, source);
    sha256_digest stored{};
    if (!is.read(reinterpret_cast<char*>(stored.data()), static_cast<std::streamsize>(stored.size()))) {
        throw error(error_category::format, "truncated checkpoint " + source);
    }
    grm_config config;
    try {
        config = grm_config::from_json(nlohmann::json::parse(read_string(is, "checkpoint config")));
    } catch (const nlohmann::json::exception& e) {
        throw error(error_category::format, "bad checkpoint config in " + source + ": " + e.what());
    }
    if (config.hash() != stored) {
        throw error(error_category::format, "checkpoint " + source + " config hash does not match its config");
    }
    if (expected && expected->hash() != stored) {
        throw error(error_category::config, "checkpoint " + source + " was trained with a different network config");
    }
    grm net(config);
    const auto count = binary::read_le<std::uint32_t>(is, "tensor count");
    if (count != net.params().size()) {
        throw error(error_category::format, "checkpoint " + source + " has " + std::to_string(count) +
                                                " tensors, expected " + std::to_string(net.params().size()));
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = read_string(is, "tensor name");
        const tensor t = read_tensor(is, source);
        if (!net.params().contains(name)) {
            throw error(error_category::format, "checkpoint " + source + " has unknown tensor " + name);
        }
        auto& value = net.params().value(name);
        if (t.dims.size() != 2 || t.dims[0] != value.rows() || t.dims[1] != value.cols()) {
            throw error(error_category::format, "checkpoint tensor " + name + " has the wrong shape");
        }
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < value.rows(); ++r) {
            for (Eigen::Index c = 0; c < value.cols(); ++c) {
                value(r, c) = static_cast<double>(t.data[k++]);
            }
        }
    }
    if (is.peek() != std::char_traits<char>::eof()) {
        throw error(error_category::format, "trailing bytes in checkpoint " + source);
    }
    return net;
}

void round_to_storage(grm& net) {
    for (auto& e : net.params()) {
        e.value = e.value.cast<float>().cast<double>();
    }
}

sha256_digest file_digest(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw error(error_category::io, "cannot open " + path.string());
    }
    sha256_hasher h;
    char buf[1 << 16];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        h.update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(buf),
                                               static_cast<std::size_t>(is.gcount())));
    }
    return h.finish();
}

} // namespace mpr::retrieval
