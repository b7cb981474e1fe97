#pragma once

#include <vector>

#include "mpr/core/types.hpp"

namespace mpr {

struct image_size {
    int height = 0;
    int width = 0;
};

struct projected_point {
    Eigen::Vector2d pixel;
    /// Camera-frame z, meters.
    double depth = 0.0;
    std::size_t point_index = 0;
};

/// Applies the LiDAR-to-camera extrinsics to every point.
Eigen::Matrix3Xd to_camera_frame(const Eigen::Matrix3Xd& lidar_points, const calibration& calib);

/// Pinhole projection without distortion. Keeps points with positive depth
/// whose pixel falls in [0, W) x [0, H). Pixel (u, v) = (x, y) at pixel centers.
std::vector<projected_point> project_points(const point_cloud& cloud, const calibration& calib, image_size size);

/// Camera-frame point for a pixel at a given depth: K^-1 (u, v, 1) * depth.
Eigen::Vector3d back_project(const Eigen::Vector2d& pixel, double depth, const calibration& calib);

} // namespace mpr
