#pragma once

#include <cstdint>
#include <vector>

#include "mpr/core/types.hpp"

namespace mpr {

/// Bilinear interpolation with pixel centers at integer coordinates.
/// Coordinates outside the grid are clamped to the border.
double sample_bilinear(const grid_d& grid, double u, double v);

/// Median of a collection; mean of the two central order statistics for even
/// sizes. Throws on empty input.
double median(std::vector<double> values);

/// Binary H x W mask.
struct binary_mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;

    binary_mask() = default;
    binary_mask(int h, int w, bool value = false)
        : height(h), width(w), bits(static_cast<std::size_t>(h) * w, value ? 1 : 0) {}

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool value = true) { bits[static_cast<std::size_t>(y) * width + x] = value ? 1 : 0; }
    int area() const;

    bool operator==(const binary_mask&) const = default;
};

} // namespace mpr
