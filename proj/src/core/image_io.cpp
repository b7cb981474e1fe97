#include "mpr/core/image_io.hpp"

#include <cstring>

#include <png.h>

#include "mpr/core/error.hpp"

namespace mpr {

camera_image read_png(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw error(error_category::io, "missing image file " + path.string());
    }
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_file(&img, path.c_str()) == 0) {
        throw error(error_category::format, "malformed PNG header in " + path.string() + ": " + img.message);
    }
    img.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
    if (png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr) == 0) {
        png_image_free(&img);
        throw error(error_category::format, "failed to decode PNG " + path.string() + ": " + img.message);
    }
    return camera_image(static_cast<int>(img.height), static_cast<int>(img.width), std::move(buffer));
}

void write_png(const std::filesystem::path& path, const camera_image& image) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width());
    img.height = static_cast<png_uint_32>(image.height());
    img.format = PNG_FORMAT_RGB;
    if (png_image_write_to_file(&img, path.c_str(), 0, image.pixels().data(), 0, nullptr) == 0) {
        throw error(error_category::io, "failed to write PNG " + path.string() + ": " + img.message);
    }
}

} // namespace mpr
