#pragma once

#include <array>
#include <string>
#include <vector>

#include "mpr/backbone/backbone.hpp"

namespace mpr::pipeline {

enum class confidence_band { high, medium, low, very_low };

/// > 0.75 high, [0.50, 0.75] medium, [0.25, 0.50) low, < 0.25 very low.
confidence_band band_of(double confidence);
std::array<std::uint8_t, 3> band_color(confidence_band band);

/// Query on the left, candidate on the right, one line per keypoint from its
/// query position to its tracked position coloured by confidence band, and a
/// "S <score> D <distance>m" caption over the candidate.
camera_image render_pair(const camera_image& query, const camera_image& candidate,
                         const std::vector<Eigen::Vector2d>& keypoints, const std::vector<Eigen::Vector2d>& tracked,
                         const std::vector<double>& confidences, double score, double distance_m);

void draw_line(camera_image& image, int x0, int y0, int x1, int y1, const std::array<std::uint8_t, 3>& color);
/// 3x5 glyphs for digits, '.', '-', ':', 'S', 'D', 'm' and space.
void draw_text(camera_image& image, int x, int y, const std::string& text, const std::array<std::uint8_t, 3>& color);

} // namespace mpr::pipeline
