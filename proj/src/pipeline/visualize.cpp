#include "mpr/pipeline/visualize.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "mpr/core/error.hpp"

namespace mpr::pipeline {

namespace {

/// Rows top to bottom, bit 2 is the left column.
const std::array<std::uint8_t, 5>* glyph(const char c) {
    static const std::array<std::uint8_t, 5> digits[10] = {
        {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
        {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
    };
    static const std::array<std::uint8_t, 5> dot{0, 0, 0, 0, 2};
    static const std::array<std::uint8_t, 5> minus{0, 0, 7, 0, 0};
    static const std::array<std::uint8_t, 5> colon{0, 2, 0, 2, 0};
    static const std::array<std::uint8_t, 5> s{7, 4, 7, 1, 7};
    static const std::array<std::uint8_t, 5> d{6, 5, 5, 5, 6};
    static const std::array<std::uint8_t, 5> m{0, 0, 7, 7, 5};
    if (c >= '0' && c <= '9') {
        return &digits[c - '0'];
    }
    switch (c) {
    case '.':
        return &dot;
    case '-':
        return &minus;
    case ':':
        return &colon;
    case 'S':
        return &s;
    case 'D':
        return &d;
    case 'm':
        return &m;
    default:
        return nullptr;
    }
}

void put(camera_image& image, const int x, const int y, const std::array<std::uint8_t, 3>& color) {
    if (x >= 0 && y >= 0 && x < image.width() && y < image.height()) {
        image.set(x, y, color[0], color[1], color[2]);
    }
}

} // namespace

confidence_band band_of(const double confidence) {
    if (confidence > 0.75) {
        return confidence_band::high;
    }
    if (confidence >= 0.50) {
        return confidence_band::medium;
    }
    if (confidence >= 0.25) {
        return confidence_band::low;
    }
    return confidence_band::very_low;
}

std::array<std::uint8_t, 3> band_color(const confidence_band band) {
    switch (band) {
    case confidence_band::high:
        return {0, 200, 0};
    case confidence_band::medium:
        return {230, 200, 0};
    case confidence_band::low:
        return {160, 60, 200};
    case confidence_band::very_low:
        break;
    }
    return {40, 80, 230};
}

void draw_line(camera_image& image, int x0, int y0, const int x1, const int y1,
               const std::array<std::uint8_t, 3>& color) {
    const int dx = std::abs(x1 - x0);
    const int dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1;
    const int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        put(image, x0, y0, color);
        if (x0 == x1 && y0 == y1) {
            break;
        }
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void draw_text(camera_image& image, int x, const int y, const std::string& text,
               const std::array<std::uint8_t, 3>& color) {
    for (const char c : text) {
        if (const auto* g = glyph(c)) {
            for (int r = 0; r < 5; ++r) {
                for (int col = 0; col < 3; ++col) {
                    if (((*g)[static_cast<std::size_t>(r)] >> (2 - col)) & 1) {
                        put(image, x + col, y + r, color);
                    }
                }
            }
        }
        x += 4;
    }
}

camera_image render_pair(const camera_image& query, const camera_image& candidate,
                         const std::vector<Eigen::Vector2d>& keypoints, const std::vector<Eigen::Vector2d>& tracked,
                         const std::vector<double>& confidences, const double score, const double distance_m) {
    if (keypoints.size() != tracked.size() || tracked.size() != confidences.size()) {
        throw error(error_category::invalid_argument, "keypoints, tracked points and confidences differ in length");
    }
    const int h = std::max(query.height(), candidate.height());
    const int w = query.width() + candidate.width();
    camera_image out(h, w, 0, 0, 0);
    for (int y = 0; y < query.height(); ++y) {
        for (int x = 0; x < query.width(); ++x) {
            out.set(x, y, query.at(x, y, 0), query.at(x, y, 1), query.at(x, y, 2));
        }
    }
    for (int y = 0; y < candidate.height(); ++y) {
        for (int x = 0; x < candidate.width(); ++x) {
            out.set(query.width() + x, y, candidate.at(x, y, 0), candidate.at(x, y, 1), candidate.at(x, y, 2));
        }
    }
    for (std::size_t i = 0; i < keypoints.size(); ++i) {
        const auto color = band_color(band_of(confidences[i]));
        draw_line(out, static_cast<int>(std::lround(keypoints[i].x())), static_cast<int>(std::lround(keypoints[i].y())),
                  query.width() + static_cast<int>(std::lround(tracked[i].x())),
                  static_cast<int>(std::lround(tracked[i].y())), color);
    }
    char caption[64];
    std::snprintf(caption, sizeof(caption), "S %.2f D %.1fm", score, distance_m);
    const int x0 = query.width() + 1;
    for (int y = 0; y < 7 && y < h; ++y) {
        for (int x = x0; x < w && x < x0 + 4 * static_cast<int>(std::string(caption).size()) + 1; ++x) {
            out.set(x, y, 0, 0, 0);
        }
    }
    draw_text(out, x0 + 1, 1, caption, {255, 255, 255});
    return out;
}

} // namespace mpr::pipeline
