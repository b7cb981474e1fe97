#pragma once

#include <vector>

#include "json.hpp"

#include "mpr/core/grid.hpp"

namespace mpr::rerank {

struct tca_config {
    double tau = 0.7;
    double alpha = 0.1;
    double epsilon = 1e-6;
    double lambda1 = 0.45;
    double lambda2 = 0.45;
    double lambda3 = 0.10;
    /// Masks larger than this fraction of the image are dropped before detection.
    double mask_area_fraction = 0.20;
    int max_keypoints = 256;
    int fast_threshold = 20;
    /// Zero the consistency term when the median confidence is below 0.05.
    bool cons_requires_floor = false;

    void validate() const;
    nlohmann::json to_json() const;
    static tca_config from_json(const nlohmann::json& j);
};

struct rerank_score {
    double s_med = 0.0;
    double s_high = 0.0;
    double s_cons = 0.0;
    double s_total = 0.0;
    std::size_t n_keypoints = 0;
    /// Set when no keypoints were available and the floor score was used.
    bool floor = false;
};

/// Median of the full map, fraction of sampled confidences strictly above
/// tau, tanh(alpha / (population std of the map + epsilon)), weighted sum.
rerank_score tca_score(const std::vector<double>& confidences, const grid_d& map, const tca_config& config = {});

/// Score for a candidate with no keypoints: only the consistency term, taken
/// from the map when one exists.
rerank_score floor_score(const grid_d* map, const tca_config& config = {});

} // namespace mpr::rerank
