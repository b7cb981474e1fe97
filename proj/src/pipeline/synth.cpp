#include "mpr/pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "mpr/core/dataset.hpp"
#include "mpr/core/error.hpp"
#include "mpr/core/random.hpp"

namespace mpr::pipeline {

namespace {

constexpr double deg = std::numbers::pi / 180.0;

std::array<std::uint8_t, 3> random_color(rng& gen) {
    std::array<std::uint8_t, 3> c{};
    for (auto& v : c) {
        v = static_cast<std::uint8_t>(40 + gen.below(200));
    }
    return c;
}

synthetic::scene random_scene(const pose& anchor, rng& gen) {
    synthetic::scene s;
    const int count = 4 + static_cast<int>(gen.below(4));
    for (int i = 0; i < count; ++i) {
        synthetic::box b;
        b.half_extent = {gen.uniform(0.5, 2.5), gen.uniform(0.5, 2.5), gen.uniform(1.0, 4.0)};
        const Eigen::Vector3d local{gen.uniform(6.0, 30.0), gen.uniform(-10.0, 10.0), 0.0};
        Eigen::Vector3d world = anchor.heading * local + anchor.position;
        world.z() = b.half_extent.z();
        b.center = world;
        b.yaw = gen.uniform(-std::numbers::pi, std::numbers::pi);
        b.color = random_color(gen);
        s.boxes.push_back(b);
    }
    return s;
}

/// Re-expresses a scene built around `from` relative to `to`.
synthetic::scene relocate(const synthetic::scene& s, const pose& from, const pose& to) {
    synthetic::scene out = s;
    const Eigen::Quaterniond rot = to.heading * from.heading.conjugate();
    const double dyaw = std::atan2(2.0 * (rot.w() * rot.z() + rot.x() * rot.y()),
                                   1.0 - 2.0 * (rot.y() * rot.y() + rot.z() * rot.z()));
    for (auto& b : out.boxes) {
        const double z = b.center.z();
        b.center = rot * (b.center - from.position) + to.position;
        b.center.z() = z;
        b.yaw += dyaw;
    }
    return out;
}

} // namespace

void world_spec::validate(const double negative_threshold_m) const {
    const auto fail = [](const std::string& what) { throw error(error_category::config, "synth: " + what); };
    if (places < 1 || traversals < 1) {
        fail("places and traversals must be positive");
    }
    if (place_spacing_m < 2.0 * negative_threshold_m) {
        fail("place_spacing_m must be at least twice the negative threshold");
    }
    if (position_jitter_m < 0.0 || yaw_jitter_deg < 0.0) {
        fail("jitter must be non-negative");
    }
    if (!(occlusion_rate >= 0.0 && occlusion_rate <= 1.0) || !(aliasing_rate >= 0.0 && aliasing_rate <= 0.5)) {
        fail("occlusion_rate must lie in [0, 1] and aliasing_rate in [0, 0.5]");
    }
    if (image_height < camera_image::min_side || image_width < camera_image::min_side || !(focal_px > 0.0)) {
        fail("image must be at least 16 x 16 with a positive focal length");
    }
}

nlohmann::json world_spec::to_json() const {
    return {{"places", places},
            {"traversals", traversals},
            {"place_spacing_m", place_spacing_m},
            {"position_jitter_m", position_jitter_m},
            {"yaw_jitter_deg", yaw_jitter_deg},
            {"occlusion_rate", occlusion_rate},
            {"aliasing_rate", aliasing_rate},
            {"alias_appearance_noise", alias_appearance_noise},
            {"seed", seed},
            {"image_height", image_height},
            {"image_width", image_width},
            {"focal_px", focal_px},
            {"sensor_height_m", sensor_height_m},
            {"lidar",
             {{"beams", lidar.beams},
              {"min_elevation_deg", lidar.min_elevation_deg},
              {"max_elevation_deg", lidar.max_elevation_deg},
              {"azimuth_step_deg", lidar.azimuth_step_deg},
              {"max_range_m", lidar.max_range_m}}}};
}

world_spec world_spec::from_json(const nlohmann::json& j) {
    world_spec s;
    for (const auto& [key, value] : j.items()) {
        if (key == "places") {
            s.places = value.get<int>();
        } else if (key == "traversals") {
            s.traversals = value.get<int>();
        } else if (key == "place_spacing_m") {
            s.place_spacing_m = value.get<double>();
        } else if (key == "position_jitter_m") {
            s.position_jitter_m = value.get<double>();
        } else if (key == "yaw_jitter_deg") {
            s.yaw_jitter_deg = value.get<double>();
        } else if (key == "occlusion_rate") {
            s.occlusion_rate = value.get<double>();
        } else if (key == "aliasing_rate") {
            s.aliasing_rate = value.get<double>();
        } else if (key == "alias_appearance_noise") {
            s.alias_appearance_noise = value.get<double>();
        } else if (key == "seed") {
            s.seed = value.get<std::uint64_t>();
        } else if (key == "image_height") {
            s.image_height = value.get<int>();
        } else if (key == "image_width") {
            s.image_width = value.get<int>();
        } else if (key == "focal_px") {
            s.focal_px = value.get<double>();
        } else if (key == "sensor_height_m") {
            s.sensor_height_m = value.get<double>();
        } else if (key == "lidar") {
            for (const auto& [k, v] : value.items()) {
                if (k == "beams") {
                    s.lidar.beams = v.get<int>();
                } else if (k == "min_elevation_deg") {
                    s.lidar.min_elevation_deg = v.get<double>();
                } else if (k == "max_elevation_deg") {
                    s.lidar.max_elevation_deg = v.get<double>();
                } else if (k == "azimuth_step_deg") {
                    s.lidar.azimuth_step_deg = v.get<double>();
                } else if (k == "max_range_m") {
                    s.lidar.max_range_m = v.get<double>();
                } else {
                    throw error(error_category::config, "synth.lidar: unknown key " + k);
                }
            }
        } else {
            throw error(error_category::config, "synth: unknown key " + key);
        }
    }
    s.validate();
    return s;
}

synthetic_world generate_world(const world_spec& spec) {
    spec.validate();
    rng gen(mix64(spec.seed, 0x5C3E));
    synthetic_world world;
    world.catalog.alias_appearance_noise = spec.alias_appearance_noise;

    const int columns = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.places))));
    for (int p = 0; p < spec.places; ++p) {
        synthetic::place_record place;
        place.index = p;
        place.anchor.position = {(p % columns) * spec.place_spacing_m, (p / columns) * spec.place_spacing_m,
                                 spec.sensor_height_m};
        place.anchor.heading = heading_from_yaw(gen.uniform(-std::numbers::pi, std::numbers::pi));
        place.geometry = random_scene(place.anchor, gen);
        place.appearance_seed = gen.next();
        world.catalog.places.push_back(std::move(place));
    }

    const int pairs = static_cast<int>(std::lround(spec.aliasing_rate * spec.places));
    if (pairs > 0) {
        std::vector<int> order(static_cast<std::size_t>(spec.places));
        for (int i = 0; i < spec.places; ++i) {
            order[static_cast<std::size_t>(i)] = i;
        }
        for (int i = 0; i < 2 * pairs; ++i) {
            const auto j = static_cast<std::size_t>(i) + gen.below(order.size() - static_cast<std::size_t>(i));
            std::swap(order[static_cast<std::size_t>(i)], order[j]);
        }
        for (int k = 0; k < pairs; ++k) {
            const int a = std::min(order[static_cast<std::size_t>(2 * k)], order[static_cast<std::size_t>(2 * k + 1)]);
            const int b = std::max(order[static_cast<std::size_t>(2 * k)], order[static_cast<std::size_t>(2 * k + 1)]);
            auto& src = world.catalog.places[static_cast<std::size_t>(a)];
            auto& dst = world.catalog.places[static_cast<std::size_t>(b)];
            dst.geometry = relocate(src.geometry, src.anchor, dst.anchor);
            dst.appearance_seed = src.appearance_seed;
            dst.alias_seed = gen.next() | 1;
            dst.alias_of = a;
            world.alias_pairs.emplace_back(a, b);
        }
        std::sort(world.alias_pairs.begin(), world.alias_pairs.end());
    }

    const image_size size{spec.image_height, spec.image_width};
    const calibration calib = synthetic::make_calibration(size, spec.focal_px);
    for (int t = 0; t < spec.traversals; ++t) {
        for (int p = 0; p < spec.places; ++p) {
            const auto& place = world.catalog.places[static_cast<std::size_t>(p)];
            synthetic::frame_record rec;
            rec.id = static_cast<frame_id_t>(t) * static_cast<frame_id_t>(spec.places) + static_cast<frame_id_t>(p);
            rec.place = p;
            const double r = spec.position_jitter_m * std::sqrt(gen.uniform());
            const double theta = gen.uniform(-std::numbers::pi, std::numbers::pi);
            rec.world_pose.position = place.anchor.position + Eigen::Vector3d(r * std::cos(theta), r * std::sin(theta), 0.0);
            const double anchor_yaw = 2.0 * std::atan2(place.anchor.heading.z(), place.anchor.heading.w());
            rec.world_pose.heading =
                heading_from_yaw(anchor_yaw + gen.uniform(-spec.yaw_jitter_deg, spec.yaw_jitter_deg) * deg);
            rec.calib = calib;
            rec.size = size;
            if (gen.uniform() < spec.occlusion_rate) {
                synthetic::box occ;
                occ.half_extent = {0.4, gen.uniform(0.8, 1.5), gen.uniform(1.0, 2.0)};
                const Eigen::Vector3d local{gen.uniform(3.0, 5.0), gen.uniform(-1.0, 1.0), 0.0};
                occ.center = rec.world_pose.heading * local + rec.world_pose.position;
                occ.center.z() = occ.half_extent.z();
                occ.yaw = anchor_yaw;
                occ.color = random_color(gen);
                rec.occluders.push_back(occ);
            }
            world.catalog.frames.emplace(rec.id, rec);

            const synthetic::scene s = world.catalog.scene_for(rec);
            const auto rendered = synthetic::render(s, world.catalog.camera_for(rec), 150.0);
            frame f;
            f.id = rec.id;
            f.timestamp = 1000.0 * t + p;
            f.sequence = t;
            f.image = rendered.image;
            f.cloud = synthetic::simulate_lidar(s, rec.world_pose, spec.lidar, true);
            f.world_pose = rec.world_pose;
            f.calib = calib;
            f.calibration_ref = "cam0";
            world.frames.push_back(std::move(f));
        }
    }
    return world;
}

void write_world(const synthetic_world& world, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_dataset(dir, world.frames);
    world.catalog.save(dir / world_file);
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [a, b] : world.alias_pairs) {
        pairs.push_back({{"place", a}, {"alias", b}});
    }
    std::ofstream os(dir / aliases_file, std::ios::trunc);
    if (!os) {
        throw error(error_category::io, "cannot write " + (dir / aliases_file).string());
    }
    os << nlohmann::json{{"pairs", pairs}}.dump(2) << '\n';
}

std::vector<std::pair<int, int>> read_aliases(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw error(error_category::io, "cannot open " + path.string());
    }
    try {
        const auto doc = nlohmann::json::parse(is);
        std::vector<std::pair<int, int>> out;
        for (const auto& p : doc.at("pairs")) {
            out.emplace_back(p.at("place").get<int>(), p.at("alias").get<int>());
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw error(error_category::format, "bad alias file " + path.string() + ": " + e.what());
    }
}

} // namespace mpr::pipeline
