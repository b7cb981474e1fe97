#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mpr/backbone/scene.hpp"

namespace mpr::pipeline {

struct world_spec {
    int places = 200;
    int traversals = 2;
    /// Places sit on a square grid with this spacing.
    double place_spacing_m = 40.0;
    double position_jitter_m = 1.5;
    double yaw_jitter_deg = 5.0;
    /// Fraction of frames with an occluding box close to the camera.
    double occlusion_rate = 0.0;
    /// Alias pairs recorded = round(aliasing_rate * places).
    double aliasing_rate = 0.0;
    double alias_appearance_noise = 0.1;
    std::uint64_t seed = 0;
    int image_height = 96;
    int image_width = 128;
    double focal_px = 100.0;
    double sensor_height_m = 1.6;
    synthetic::lidar_config lidar;

    /// Places must be at least twice the negative threshold apart.
    void validate(double negative_threshold_m = 18.0) const;
    nlohmann::json to_json() const;
    static world_spec from_json(const nlohmann::json& j);
};

struct synthetic_world {
    std::vector<frame> frames;
    synthetic::scene_catalog catalog;
    /// (original place, alias place) index pairs.
    std::vector<std::pair<int, int>> alias_pairs;
};

/// Frame id = traversal * places + place; the frame's sequence is its traversal.
synthetic_world generate_world(const world_spec& spec);

inline constexpr const char* world_file = "world.json";
inline constexpr const char* aliases_file = "aliases.json";

/// manifest.json, images/, clouds/, world.json and aliases.json under `dir`.
void write_world(const synthetic_world& world, const std::filesystem::path& dir);

std::vector<std::pair<int, int>> read_aliases(const std::filesystem::path& path);

} // namespace mpr::pipeline
