#pragma once

#include <vector>

#include "mpr/backbone/backbone.hpp"
#include "mpr/core/geometry.hpp"

namespace mpr::depth {

struct anchor {
    double relative = 0.0;
    /// Camera depth of the projected LiDAR point, meters.
    double absolute = 0.0;
    Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

using anchor_set = std::vector<anchor>;

struct affine_fit {
    double scale = 1.0;
    double offset = 0.0;
};

struct dense_metric_depth {
    grid_d values;
    double scale = 1.0;
    double offset = 0.0;
    std::size_t anchor_count = 0;
    /// Set when the least-squares fit was degenerate and a fallback was used.
    bool degenerate = false;
};

struct densify_config {
    /// Drop residuals above 3 * MAD and refit once.
    bool trimmed_refit = false;
    double min_depth_m = 0.1;
};

/// One anchor per LiDAR point projecting inside the image; the relative depth
/// is read bilinearly at the point's pixel.
anchor_set collect_anchors(const relative_depth_map& relative, const point_cloud& cloud, const calibration& calib);

/// Ordinary least squares of absolute on relative depth. Throws
/// error_category::degenerate for fewer than two anchors or zero variance.
affine_fit fit_scale(const anchor_set& anchors);

/// Elementwise scale * relative + offset, clamped below at min_depth_m.
dense_metric_depth densify(const relative_depth_map& relative, double scale, double offset,
                           double min_depth_m = 0.1);

/// Anchors, fit (with the configured fallback), densify.
dense_metric_depth estimate_metric_depth(const relative_depth_map& relative, const point_cloud& cloud,
                                         const calibration& calib, const densify_config& config = {});

/// Mean |scale * r + offset - a| over the anchors.
double mean_abs_residual(const anchor_set& anchors, const affine_fit& fit);

} // namespace mpr::depth
