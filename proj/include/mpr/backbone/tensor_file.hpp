#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mpr {

/// Dense row-major f32 tensor as stored in MPRT1 files.
struct tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const;
    bool operator==(const tensor&) const = default;
};

/// "MPRT1", rank (u8), rank x u32 LE dims, row-major f32 LE payload.
void write_tensor(std::ostream& os, const tensor& t);
tensor read_tensor(std::istream& is, const std::string& source);

void write_tensor_file(const std::filesystem::path& path, const tensor& t);
tensor read_tensor_file(const std::filesystem::path& path);

/// Reads a tensor and checks its rank, naming the expected rank on mismatch.
tensor read_tensor_file(const std::filesystem::path& path, std::size_t expected_rank);

} // namespace mpr
