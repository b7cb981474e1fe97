#pragma once

#include <filesystem>

#include "mpr/core/types.hpp"

namespace mpr {

/// Reads an 8-bit RGB PNG (other PNG layouts are converted to RGB8).
camera_image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const camera_image& image);

} // namespace mpr
