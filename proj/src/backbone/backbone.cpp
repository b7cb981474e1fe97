#include "mpr/backbone/backbone.hpp"

#include <algorithm>

#include "mpr/core/error.hpp"

namespace mpr {

void sample_track_confidences(track_result& result) {
    result.sampled_confidences.clear();
    result.sampled_confidences.reserve(result.predicted_points.size());
    for (const auto& p : result.predicted_points) {
        const double c = sample_bilinear(result.confidence_map, p.x(), p.y());
        result.sampled_confidences.push_back(std::clamp(c, 0.0, 1.0));
    }
}

void check_keypoints(const keypoint_set& keypoints, const camera_image& image) {
    if (keypoints.empty()) {
        throw error(error_category::invalid_argument, "track_points needs at least one keypoint");
    }
    for (const auto& p : keypoints.points) {
        if (!(p.x() >= 0.0 && p.y() >= 0.0 && p.x() < image.width() && p.y() < image.height())) {
            throw error(error_category::invalid_argument, "keypoint outside query image bounds");
        }
    }
}

} // namespace mpr
