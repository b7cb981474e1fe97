#pragma once

#include <array>
#include <cstddef>

#include "mpr/backbone/backbone.hpp"
#include "mpr/core/grid.hpp"

namespace mpr {

struct fast_config {
    /// Intensity threshold on the 0..255 scale (20/255).
    int threshold = 20;
    bool nonmax_suppression = true;
    std::size_t max_points = 256;
};

/// Bresenham circle of radius 3, clockwise from the top pixel.
inline constexpr std::array<std::array<int, 2>, 16> fast_circle = {{
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
}};

inline constexpr int fast_arc_length = 9;
inline constexpr int fast_border = 3;

/// FAST-9 corner detector with 3x3 non-maximum suppression.
class fast_detector {
public:
    explicit fast_detector(fast_config config = {}) : config_(config) {}

    /// 0 unless 9 contiguous circle pixels are all brighter than centre + t
    /// or all darker than centre - t. Corners score the larger of the summed
    /// bright excess and dark excess over t across the whole circle. Pixels
    /// within 3 of the border score 0.
    int score(const camera_image& image, int x, int y) const;

    /// Corners inside `region` in descending score order (raster order on
    /// ties), at most max_points.
    keypoint_set detect(const camera_image& image, const binary_mask& region) const;

    const fast_config& config() const noexcept { return config_; }

private:
    fast_config config_;
};

/// Convenience wrapper matching the detector contract.
keypoint_set detect_corners(const camera_image& image, const binary_mask& region, std::size_t max_points,
                            const fast_config& config = {});

} // namespace mpr
