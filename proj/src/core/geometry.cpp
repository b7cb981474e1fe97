#include "mpr/core/geometry.hpp"

namespace mpr {

Eigen::Matrix3Xd to_camera_frame(const Eigen::Matrix3Xd& lidar_points, const calibration& calib) {
    return (calib.rotation() * lidar_points).colwise() + calib.translation();
}

std::vector<projected_point> project_points(const point_cloud& cloud, const calibration& calib,
                                            const image_size size) {
    const Eigen::Matrix3Xd cam = to_camera_frame(cloud.points, calib);
    const Eigen::Matrix3d& k = calib.intrinsics;

    std::vector<projected_point> out;
    out.reserve(cloud.size());
    for (Eigen::Index i = 0; i < cam.cols(); ++i) {
        const Eigen::Vector3d p = cam.col(i);
        if (!(p.z() > 0.0)) {
            continue;
        }
        const Eigen::Vector3d h = k * p;
        const double u = h.x() / h.z();
        const double v = h.y() / h.z();
        if (u < 0.0 || v < 0.0 || u >= size.width || v >= size.height) {
            continue;
        }
        out.push_back({Eigen::Vector2d(u, v), p.z(), static_cast<std::size_t>(i)});
    }
    return out;
}

Eigen::Vector3d back_project(const Eigen::Vector2d& pixel, const double depth, const calibration& calib) {
    return calib.intrinsics.inverse() * Eigen::Vector3d(pixel.x(), pixel.y(), 1.0) * depth;
}

} // namespace mpr
