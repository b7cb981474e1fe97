#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mpr {

using frame_id_t = std::uint64_t;

/// Real-valued H x W grid; row index is v, column index is u.
using grid_d = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 8-bit RGB image, row-major, interleaved channels.
class camera_image {
public:
    static constexpr int min_side = 16;

    camera_image() = default;
    camera_image(int height, int width, std::vector<std::uint8_t> rgb);
    /// Uniformly filled image.
    camera_image(int height, int width, std::uint8_t r, std::uint8_t g, std::uint8_t b);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    bool empty() const noexcept { return pixels_.empty(); }

    const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }

    std::uint8_t at(int x, int y, int channel) const {
        return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + channel];
    }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);

    /// Integer luma in [0, 255], (299 R + 587 G + 114 B + 500) / 1000.
    int gray(int x, int y) const;

    bool operator==(const camera_image&) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> pixels_;
};

struct point_cloud {
    /// 3 x N, meters, sensor frame.
    Eigen::Matrix3Xd points;
    /// Per-point intensity, carried through I/O but unused by the pipeline.
    std::vector<float> intensity;

    std::size_t size() const noexcept { return static_cast<std::size_t>(points.cols()); }
    void validate() const;

    bool operator==(const point_cloud& other) const;
};

struct calibration {
    Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
    /// Maps LiDAR-frame points into the camera frame.
    Eigen::Matrix4d extrinsics = Eigen::Matrix4d::Identity();

    double fx() const { return intrinsics(0, 0); }
    double fy() const { return intrinsics(1, 1); }
    double cx() const { return intrinsics(0, 2); }
    double cy() const { return intrinsics(1, 2); }

    Eigen::Matrix3d rotation() const { return extrinsics.topLeftCorner<3, 3>(); }
    Eigen::Vector3d translation() const { return extrinsics.topRightCorner<3, 1>(); }

    /// Throws when focal lengths are non-positive or the rotation block is not
    /// a proper rotation within 1e-6.
    void validate() const;

    bool operator==(const calibration& other) const;
};

/// Sensor (LiDAR) frame pose in the world: world = heading * local + position.
struct pose {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Quaterniond heading = Eigen::Quaterniond::Identity();

    void validate() const;
    double distance_to(const pose& other) const { return (position - other.position).norm(); }

    bool operator==(const pose& other) const;
};

struct frame {
    frame_id_t id = 0;
    double timestamp = 0.0;
    /// Optional traversal/sequence index carried by the manifest.
    int sequence = 0;
    camera_image image;
    point_cloud cloud;
    pose world_pose;
    calibration calib;
    std::string calibration_ref;

    bool operator==(const frame& other) const;
};

struct global_descriptor {
    Eigen::VectorXd values;
    frame_id_t frame_id = 0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();

    Eigen::Index dimension() const noexcept { return values.size(); }
};

/// Yaw-only heading quaternion (rotation about world z).
Eigen::Quaterniond heading_from_yaw(double yaw_rad);

} // namespace mpr
