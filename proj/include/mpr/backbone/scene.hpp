#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "mpr/core/geometry.hpp"
#include "mpr/core/grid.hpp"
#include "mpr/core/types.hpp"

namespace mpr::synthetic {

inline constexpr int sky_id = 0;
inline constexpr int ground_id = 1;
inline constexpr int first_box_id = 2;
inline constexpr int first_occluder_id = 1000;

/// Oriented box standing in the world; yaw about world z.
struct box {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d half_extent = Eigen::Vector3d::Ones();
    double yaw = 0.0;
    std::array<std::uint8_t, 3> color{200, 200, 200};
};

/// Ground plane z = 0 plus boxes.
struct scene {
    std::vector<box> boxes;
    std::vector<box> occluders;
};

struct ray_hit {
    double t = 0.0;
    int object = sky_id;
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

std::optional<ray_hit> cast_ray(const scene& s, const Eigen::Vector3d& origin, const Eigen::Vector3d& direction,
                                double max_t);

/// Pinhole camera mounted on a posed sensor frame.
struct camera_model {
    pose world_pose;
    calibration calib;
    image_size size;

    Eigen::Vector3d origin_world() const;
    /// World-frame direction whose camera-frame z component is 1, so the ray
    /// parameter of a hit equals its camera depth.
    Eigen::Vector3d ray_world(double u, double v) const;
    Eigen::Vector3d world_to_camera(const Eigen::Vector3d& p) const;
    Eigen::Vector3d world_direction_to_camera(const Eigen::Vector3d& d) const;
};

struct render_output {
    camera_image image;
    /// Camera depth; sky pixels hold the far depth.
    grid_d depth;
    Eigen::MatrixXi object_id;
};

render_output render(const scene& s, const camera_model& camera, double far_depth);

struct lidar_config {
    int beams = 16;
    double min_elevation_deg = -15.0;
    double max_elevation_deg = 10.0;
    double azimuth_step_deg = 2.0;
    double max_range_m = 80.0;
};

/// Ray-casts a spinning LiDAR at the sensor origin. With `quantize` the
/// coordinates are rounded to f32 so the cloud survives file round trips.
point_cloud simulate_lidar(const scene& s, const pose& sensor_pose, const lidar_config& config, bool quantize);

/// LiDAR (x fwd, y left, z up) to camera (x right, y down, z fwd), co-located.
Eigen::Matrix4d default_extrinsics();
calibration make_calibration(image_size size, double focal_px);

struct place_record {
    int index = 0;
    pose anchor;
    scene geometry;
    std::uint64_t appearance_seed = 0;
    /// Nonzero for the second member of an aliasing pair.
    std::uint64_t alias_seed = 0;
    int alias_of = -1;
};

struct frame_record {
    frame_id_t id = 0;
    int place = 0;
    pose world_pose;
    calibration calib;
    image_size size;
    std::vector<box> occluders;
};

/// Ground-truth world behind a synthetic dataset.
class scene_catalog {
public:
    double alias_appearance_noise = 0.1;
    std::vector<place_record> places;
    std::map<frame_id_t, frame_record> frames;

    const frame_record* find(frame_id_t id) const;
    scene scene_for(const frame_record& f) const;
    camera_model camera_for(const frame_record& f) const;

    std::string to_json_text() const;
    static scene_catalog from_json_text(const std::string& text);

    void save(const std::filesystem::path& path) const;
    static scene_catalog load(const std::filesystem::path& path);
};

} // namespace mpr::synthetic
