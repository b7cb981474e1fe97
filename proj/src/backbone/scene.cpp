#include "mpr/backbone/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "mpr/core/error.hpp"

namespace mpr::synthetic {

using nlohmann::json;

namespace {

constexpr double hit_epsilon = 1e-9;

std::uint8_t to_byte(const double value) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
}

Eigen::Matrix3d yaw_rotation(const double yaw) {
    return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

std::optional<ray_hit> intersect_box(const box& b, const Eigen::Vector3d& origin, const Eigen::Vector3d& direction) {
    const Eigen::Matrix3d to_local = yaw_rotation(-b.yaw);
    const Eigen::Vector3d p = to_local * (origin - b.center);
    const Eigen::Vector3d d = to_local * direction;
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    int axis = -1;
    double sign = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double h = b.half_extent[k];
        if (std::abs(d[k]) < 1e-15) {
            if (std::abs(p[k]) > h) {
                return std::nullopt;
            }
            continue;
        }
        double t1 = (-h - p[k]) / d[k];
        double t2 = (h - p[k]) / d[k];
        double face = -1.0;
        if (t1 > t2) {
            std::swap(t1, t2);
            face = 1.0;
        }
        if (t1 > t_near) {
            t_near = t1;
            axis = k;
            sign = face;
        }
        t_far = std::min(t_far, t2);
    }
    if (axis < 0 || t_near > t_far || t_near <= hit_epsilon) {
        return std::nullopt;
    }
    Eigen::Vector3d local_normal = Eigen::Vector3d::Zero();
    local_normal[axis] = sign;
    ray_hit hit;
    hit.t = t_near;
    hit.normal = yaw_rotation(b.yaw) * local_normal;
    hit.point = origin + t_near * direction;
    return hit;
}

std::array<double, 3> shade_box(const box& b, const ray_hit& hit) {
    static const Eigen::Vector3d light = Eigen::Vector3d(0.4, 0.3, 0.85).normalized();
    const double shade = 0.55 + 0.45 * std::max(0.0, hit.normal.dot(light));
    const Eigen::Vector3d local = yaw_rotation(-b.yaw) * (hit.point - b.center) + b.half_extent;
    const long cells = static_cast<long>(std::floor(local.x() + 1e-9)) + static_cast<long>(std::floor(local.y() + 1e-9)) +
                       static_cast<long>(std::floor(local.z() + 1e-9));
    const double checker = (cells % 2 == 0) ? 1.0 : 0.7;
    return {b.color[0] * shade * checker, b.color[1] * shade * checker, b.color[2] * shade * checker};
}

json pose_to_json(const pose& p) {
    const auto& q = p.heading;
    return {{"position", {p.position.x(), p.position.y(), p.position.z()}},
            {"quaternion", {q.w(), q.x(), q.y(), q.z()}}};
}

pose pose_from_json(const json& j) {
    pose p;
    const auto& pos = j.at("position");
    const auto& q = j.at("quaternion");
    p.position = {pos.at(0).get<double>(), pos.at(1).get<double>(), pos.at(2).get<double>()};
    p.heading = Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                   q.at(3).get<double>());
    return p;
}

json box_to_json(const box& b) {
    return {{"center", {b.center.x(), b.center.y(), b.center.z()}},
            {"half_extent", {b.half_extent.x(), b.half_extent.y(), b.half_extent.z()}},
            {"yaw", b.yaw},
            {"color", {b.color[0], b.color[1], b.color[2]}}};
}

box box_from_json(const json& j) {
    box b;
    const auto& c = j.at("center");
    const auto& h = j.at("half_extent");
    const auto& col = j.at("color");
    b.center = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
    b.half_extent = {h.at(0).get<double>(), h.at(1).get<double>(), h.at(2).get<double>()};
    b.yaw = j.at("yaw").get<double>();
    b.color = {col.at(0).get<std::uint8_t>(), col.at(1).get<std::uint8_t>(), col.at(2).get<std::uint8_t>()};
    return b;
}

template <typename M>
json matrix_to_json(const M& m) {
    json out = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) {
            out.push_back(m(r, c));
        }
    }
    return out;
}

template <typename M>
M matrix_from_json(const json& j) {
    M m;
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) {
            m(r, c) = j.at(static_cast<std::size_t>(r * m.cols() + c)).template get<double>();
        }
    }
    return m;
}

} // namespace

std::optional<ray_hit> cast_ray(const scene& s, const Eigen::Vector3d& origin, const Eigen::Vector3d& direction,
                                const double max_t) {
    std::optional<ray_hit> best;
    if (direction.z() < -1e-12 && origin.z() > 0.0) {
        const double t = -origin.z() / direction.z();
        if (t > hit_epsilon && t <= max_t) {
            ray_hit hit;
            hit.t = t;
            hit.object = ground_id;
            hit.normal = Eigen::Vector3d::UnitZ();
            hit.point = origin + t * direction;
            hit.point.z() = 0.0;
            best = hit;
        }
    }
    const auto consider = [&](const std::vector<box>& boxes, const int first_id) {
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            auto hit = intersect_box(boxes[i], origin, direction);
            if (hit && hit->t <= max_t && (!best || hit->t < best->t)) {
                hit->object = first_id + static_cast<int>(i);
                best = hit;
            }
        }
    };
    consider(s.boxes, first_box_id);
    consider(s.occluders, first_occluder_id);
    return best;
}

Eigen::Vector3d camera_model::origin_world() const {
    const Eigen::Vector3d origin_sensor = -calib.rotation().transpose() * calib.translation();
    return world_pose.heading * origin_sensor + world_pose.position;
}

Eigen::Vector3d camera_model::ray_world(const double u, const double v) const {
    const Eigen::Vector3d d_cam = calib.intrinsics.inverse() * Eigen::Vector3d(u, v, 1.0);
    return world_pose.heading * (calib.rotation().transpose() * d_cam);
}

Eigen::Vector3d camera_model::world_to_camera(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d sensor = world_pose.heading.conjugate() * (p - world_pose.position);
    return calib.rotation() * sensor + calib.translation();
}

Eigen::Vector3d camera_model::world_direction_to_camera(const Eigen::Vector3d& d) const {
    return calib.rotation() * (world_pose.heading.conjugate() * d);
}

render_output render(const scene& s, const camera_model& camera, const double far_depth) {
    const int h = camera.size.height;
    const int w = camera.size.width;
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(h) * w * 3);
    render_output out;
    out.depth.resize(h, w);
    out.object_id.resize(h, w);
    const Eigen::Vector3d origin = camera.origin_world();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Eigen::Vector3d dir = camera.ray_world(x, y);
            const auto hit = cast_ray(s, origin, dir, far_depth);
            std::array<double, 3> color{};
            if (!hit) {
                const double fy = static_cast<double>(y) / h;
                color = {120.0 + 60.0 * fy, 170.0 + 40.0 * fy, 235.0};
                out.depth(y, x) = far_depth;
                out.object_id(y, x) = sky_id;
            } else {
                if (hit->object == ground_id) {
                    const long cells = static_cast<long>(std::floor(hit->point.x() / 4.0)) +
                                       static_cast<long>(std::floor(hit->point.y() / 4.0));
                    const double g = (cells % 2 == 0) ? 105.0 : 97.0;
                    color = {g, g, g - 6.0};
                } else if (hit->object >= first_occluder_id) {
                    color = shade_box(s.occluders[static_cast<std::size_t>(hit->object - first_occluder_id)], *hit);
                } else {
                    color = shade_box(s.boxes[static_cast<std::size_t>(hit->object - first_box_id)], *hit);
                }
                out.depth(y, x) = hit->t;
                out.object_id(y, x) = hit->object;
            }
            const auto base = (static_cast<std::size_t>(y) * w + x) * 3;
            rgb[base] = to_byte(color[0]);
            rgb[base + 1] = to_byte(color[1]);
            rgb[base + 2] = to_byte(color[2]);
        }
    }
    out.image = camera_image(h, w, std::move(rgb));
    return out;
}

point_cloud simulate_lidar(const scene& s, const pose& sensor_pose, const lidar_config& config, const bool quantize) {
    std::vector<Eigen::Vector3d> pts;
    std::vector<float> intensity;
    const int azimuths = static_cast<int>(std::lround(360.0 / config.azimuth_step_deg));
    for (int b = 0; b < config.beams; ++b) {
        const double frac = config.beams > 1 ? static_cast<double>(b) / (config.beams - 1) : 0.0;
        const double el =
            (config.min_elevation_deg + frac * (config.max_elevation_deg - config.min_elevation_deg)) *
            std::numbers::pi / 180.0;
        for (int a = 0; a < azimuths; ++a) {
            const double az = a * config.azimuth_step_deg * std::numbers::pi / 180.0;
            const Eigen::Vector3d dir_sensor(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
            const Eigen::Vector3d dir_world = sensor_pose.heading * dir_sensor;
            const auto hit = cast_ray(s, sensor_pose.position, dir_world, config.max_range_m);
            if (!hit) {
                continue;
            }
            Eigen::Vector3d p = hit->t * dir_sensor;
            if (quantize) {
                const Eigen::Vector3f stored = p.cast<float>();
                p = stored.cast<double>();
            }
            pts.push_back(p);
            intensity.push_back(hit->object == ground_id ? 0.3f : 0.7f);
        }
    }
    point_cloud cloud;
    cloud.points.resize(3, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        cloud.points.col(static_cast<Eigen::Index>(i)) = pts[i];
    }
    cloud.intensity = std::move(intensity);
    return cloud;
}

Eigen::Matrix4d default_extrinsics() {
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    t.topLeftCorner<3, 3>() << 0, -1, 0, 0, 0, -1, 1, 0, 0;
    return t;
}

calibration make_calibration(const image_size size, const double focal_px) {
    calibration c;
    c.intrinsics << focal_px, 0, (size.width - 1) / 2.0, 0, focal_px, (size.height - 1) / 2.0, 0, 0, 1;
    c.extrinsics = default_extrinsics();
    return c;
}

const frame_record* scene_catalog::find(const frame_id_t id) const {
    const auto it = frames.find(id);
    return it == frames.end() ? nullptr : &it->second;
}

scene scene_catalog::scene_for(const frame_record& f) const {
    scene s = places.at(static_cast<std::size_t>(f.place)).geometry;
    s.occluders = f.occluders;
    return s;
}

camera_model scene_catalog::camera_for(const frame_record& f) const { return {f.world_pose, f.calib, f.size}; }

std::string scene_catalog::to_json_text() const {
    json jp = json::array();
    for (const auto& p : places) {
        json boxes = json::array();
        for (const auto& b : p.geometry.boxes) {
            boxes.push_back(box_to_json(b));
        }
        jp.push_back({{"index", p.index},
                      {"anchor", pose_to_json(p.anchor)},
                      {"appearance_seed", p.appearance_seed},
                      {"alias_seed", p.alias_seed},
                      {"alias_of", p.alias_of},
                      {"boxes", boxes}});
    }
    json jf = json::array();
    for (const auto& [id, f] : frames) {
        json occ = json::array();
        for (const auto& b : f.occluders) {
            occ.push_back(box_to_json(b));
        }
        jf.push_back({{"frame_id", id},
                      {"place", f.place},
                      {"pose", pose_to_json(f.world_pose)},
                      {"intrinsics", matrix_to_json(f.calib.intrinsics)},
                      {"extrinsics", matrix_to_json(f.calib.extrinsics)},
                      {"height", f.size.height},
                      {"width", f.size.width},
                      {"occluders", occ}});
    }
    json doc = {{"format", "mpr-world/1"},
                {"alias_appearance_noise", alias_appearance_noise},
                {"places", jp},
                {"frames", jf}};
    return doc.dump(1);
}

scene_catalog scene_catalog::from_json_text(const std::string& text) {
    scene_catalog c;
    try {
        const json doc = json::parse(text);
        if (doc.value("format", std::string{}) != "mpr-world/1") {
            throw error(error_category::format, "world file must declare format mpr-world/1");
        }
        c.alias_appearance_noise = doc.at("alias_appearance_noise").get<double>();
        for (const auto& jp : doc.at("places")) {
            place_record p;
            p.index = jp.at("index").get<int>();
            p.anchor = pose_from_json(jp.at("anchor"));
            p.appearance_seed = jp.at("appearance_seed").get<std::uint64_t>();
            p.alias_seed = jp.at("alias_seed").get<std::uint64_t>();
            p.alias_of = jp.at("alias_of").get<int>();
            for (const auto& jb : jp.at("boxes")) {
                p.geometry.boxes.push_back(box_from_json(jb));
            }
            c.places.push_back(std::move(p));
        }
        for (const auto& jf : doc.at("frames")) {
            frame_record f;
            f.id = jf.at("frame_id").get<frame_id_t>();
            f.place = jf.at("place").get<int>();
            f.world_pose = pose_from_json(jf.at("pose"));
            f.calib.intrinsics = matrix_from_json<Eigen::Matrix3d>(jf.at("intrinsics"));
            f.calib.extrinsics = matrix_from_json<Eigen::Matrix4d>(jf.at("extrinsics"));
            f.size = {jf.at("height").get<int>(), jf.at("width").get<int>()};
            for (const auto& jb : jf.at("occluders")) {
                f.occluders.push_back(box_from_json(jb));
            }
            if (f.place < 0 || static_cast<std::size_t>(f.place) >= c.places.size()) {
                throw error(error_category::format, "world frame " + std::to_string(f.id) + " names unknown place");
            }
            c.frames.emplace(f.id, std::move(f));
        }
    } catch (const json::exception& e) {
        throw error(error_category::format, std::string("malformed world file: ") + e.what());
    }
    return c;
}

void scene_catalog::save(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) {
        throw error(error_category::io, "cannot write world file " + path.string());
    }
    os << to_json_text() << '\n';
}

scene_catalog scene_catalog::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw error(error_category::io, "missing world file " + path.string());
    }
    std::stringstream ss;
    ss << is.rdbuf();
    return from_json_text(ss.str());
}

} // namespace mpr::synthetic
