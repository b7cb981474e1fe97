#include "mpr/core/types.hpp"

#include <cmath>

#include "mpr/core/error.hpp"

namespace mpr {

camera_image::camera_image(const int height, const int width, std::vector<std::uint8_t> rgb)
    : height_(height), width_(width), pixels_(std::move(rgb)) {
    if (height < min_side || width < min_side) {
        throw error(error_category::invalid_argument,
                    "image must be at least 16x16, got " + std::to_string(height) + "x" + std::to_string(width));
    }
    if (pixels_.size() != static_cast<std::size_t>(height) * width * 3) {
        throw error(error_category::dimension, "image buffer size does not match 3*H*W");
    }
}

camera_image::camera_image(const int height, const int width, const std::uint8_t r, const std::uint8_t g,
                           const std::uint8_t b)
    : camera_image(height, width, std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width * 3)) {
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            set(x, y, r, g, b);
        }
    }
}

void camera_image::set(const int x, const int y, const std::uint8_t r, const std::uint8_t g, const std::uint8_t b) {
    const auto base = (static_cast<std::size_t>(y) * width_ + x) * 3;
    pixels_[base] = r;
    pixels_[base + 1] = g;
    pixels_[base + 2] = b;
}

int camera_image::gray(const int x, const int y) const {
    return (299 * at(x, y, 0) + 587 * at(x, y, 1) + 114 * at(x, y, 2) + 500) / 1000;
}

void point_cloud::validate() const {
    if (!points.allFinite()) {
        for (Eigen::Index i = 0; i < points.cols(); ++i) {
            if (!points.col(i).allFinite()) {
                throw error(error_category::format, "non-finite point coordinate at index " + std::to_string(i));
            }
        }
    }
    if (!intensity.empty() && intensity.size() != size()) {
        throw error(error_category::dimension, "intensity count does not match point count");
    }
}

bool point_cloud::operator==(const point_cloud& other) const {
    return points.cols() == other.points.cols() && points == other.points && intensity == other.intensity;
}

void calibration::validate() const {
    if (!(fx() > 0.0) || !(fy() > 0.0)) {
        throw error(error_category::invalid_argument, "calibration focal lengths must be positive");
    }
    const Eigen::Matrix3d r = rotation();
    const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (ortho > 1e-6 || std::abs(r.determinant() - 1.0) > 1e-6) {
        throw error(error_category::invalid_argument, "calibration extrinsic rotation is not a proper rotation");
    }
    if (extrinsics.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) {
        throw error(error_category::invalid_argument, "calibration extrinsics last row must be [0 0 0 1]");
    }
}

bool calibration::operator==(const calibration& other) const {
    return intrinsics == other.intrinsics && extrinsics == other.extrinsics;
}

void pose::validate() const {
    if (std::abs(heading.norm() - 1.0) > 1e-9) {
        throw error(error_category::invalid_argument, "pose quaternion must have unit norm");
    }
    if (!position.allFinite()) {
        throw error(error_category::invalid_argument, "pose position must be finite");
    }
}

bool pose::operator==(const pose& other) const {
    return position == other.position && heading.coeffs() == other.heading.coeffs();
}

bool frame::operator==(const frame& other) const {
    return id == other.id && timestamp == other.timestamp && sequence == other.sequence && image == other.image &&
           cloud == other.cloud && world_pose == other.world_pose && calib == other.calib &&
           calibration_ref == other.calibration_ref;
}

Eigen::Quaterniond heading_from_yaw(const double yaw_rad) {
    return Eigen::Quaterniond(Eigen::AngleAxisd(yaw_rad, Eigen::Vector3d::UnitZ()));
}

} // namespace mpr
