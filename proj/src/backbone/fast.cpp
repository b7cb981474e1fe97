#include "mpr/backbone/fast.hpp"

#include <algorithm>
#include <limits>

#include "mpr/core/error.hpp"

namespace mpr {

namespace {

/// Largest over circular windows of 9 of the window minimum.
int best_arc(const std::array<int, 16>& diff) {
    int best = std::numeric_limits<int>::min();
    for (int start = 0; start < 16; ++start) {
        int lowest = std::numeric_limits<int>::max();
        for (int k = 0; k < fast_arc_length; ++k) {
            lowest = std::min(lowest, diff[(start + k) % 16]);
            if (lowest <= best) {
                break;
            }
        }
        best = std::max(best, lowest);
    }
    return best;
}

} // namespace

int fast_detector::score(const camera_image& image, const int x, const int y) const {
    if (x < fast_border || y < fast_border || x >= image.width() - fast_border ||
        y >= image.height() - fast_border) {
        return 0;
    }
    const int t = config_.threshold;
    const int center = image.gray(x, y);
    std::array<int, 16> ring{};
    for (int i = 0; i < 16; ++i) {
        ring[i] = image.gray(x + fast_circle[i][0], y + fast_circle[i][1]);
    }

    // Any 9-arc covers two adjacent compass points (indices 0, 4, 8, 12).
    int bright = 0;
    int dark = 0;
    for (int i = 0; i < 16; i += 4) {
        bright += ring[i] > center + t;
        dark += ring[i] < center - t;
    }
    if (bright < 2 && dark < 2) {
        return 0;
    }

    std::array<int, 16> up{};
    std::array<int, 16> down{};
    for (int i = 0; i < 16; ++i) {
        up[i] = ring[i] - center;
        down[i] = center - ring[i];
    }
    if (best_arc(up) <= t && best_arc(down) <= t) {
        return 0;
    }
    int bright_sum = 0;
    int dark_sum = 0;
    for (int i = 0; i < 16; ++i) {
        bright_sum += std::max(0, up[i] - t);
        dark_sum += std::max(0, down[i] - t);
    }
    return std::max(bright_sum, dark_sum);
}

keypoint_set fast_detector::detect(const camera_image& image, const binary_mask& region) const {
    if (region.height != image.height() || region.width != image.width()) {
        throw error(error_category::dimension, "corner region mask must match the image size");
    }
    const int w = image.width();
    const int h = image.height();
    std::vector<int> scores(static_cast<std::size_t>(w) * h, 0);
    for (int y = fast_border; y < h - fast_border; ++y) {
        for (int x = fast_border; x < w - fast_border; ++x) {
            if (region.at(x, y)) {
                scores[static_cast<std::size_t>(y) * w + x] = score(image, x, y);
            }
        }
    }

    struct corner {
        int x;
        int y;
        int score;
    };
    std::vector<corner> corners;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int s = scores[static_cast<std::size_t>(y) * w + x];
            if (s == 0) {
                continue;
            }
            bool keep = true;
            if (config_.nonmax_suppression) {
                for (int dy = -1; dy <= 1 && keep; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx;
                        const int ny = y + dy;
                        if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) {
                            continue;
                        }
                        const int ns = scores[static_cast<std::size_t>(ny) * w + nx];
                        const bool earlier = dy < 0 || (dy == 0 && dx < 0);
                        if (ns > s || (ns == s && earlier)) {
                            keep = false;
                            break;
                        }
                    }
                }
            }
            if (keep) {
                corners.push_back({x, y, s});
            }
        }
    }

    // Raster order is already the collection order; stable sort keeps it on ties.
    std::stable_sort(corners.begin(), corners.end(),
                     [](const corner& a, const corner& b) { return a.score > b.score; });
    if (corners.size() > config_.max_points) {
        corners.resize(config_.max_points);
    }

    keypoint_set out;
    out.points.reserve(corners.size());
    out.scores.reserve(corners.size());
    for (const auto& c : corners) {
        out.points.emplace_back(c.x, c.y);
        out.scores.push_back(c.score);
    }
    return out;
}

keypoint_set detect_corners(const camera_image& image, const binary_mask& region, const std::size_t max_points,
                            const fast_config& config) {
    fast_config c = config;
    c.max_points = max_points;
    return fast_detector(c).detect(image, region);
}

} // namespace mpr
