#include "mpr/core/dataset.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mpr/core/binary_io.hpp"
#include "mpr/core/error.hpp"
#include "mpr/core/image_io.hpp"

namespace mpr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* manifest_format = "mpr-manifest/1";
constexpr std::size_t cloud_record_bytes = 16;

std::string frame_tag(const frame_id_t id) { return "frame " + std::to_string(id) + ": "; }

Eigen::Matrix3d matrix3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 9) {
        throw error(error_category::format, "intrinsics must be a 9-element row-major array");
    }
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            m(r, c) = j.at(r * 3 + c).get<double>();
        }
    }
    return m;
}

Eigen::Matrix4d matrix4_from_json(const json& j) {
    if (!j.is_array() || j.size() != 16) {
        throw error(error_category::format, "extrinsics must be a 16-element row-major array");
    }
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            m(r, c) = j.at(r * 4 + c).get<double>();
        }
    }
    return m;
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

} // namespace

point_cloud read_cloud(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw error(error_category::io, "missing cloud file " + path.string());
    }
    const auto bytes = fs::file_size(path);
    if (bytes % cloud_record_bytes != 0) {
        throw error(error_category::format, "cloud file " + path.string() + " has " + std::to_string(bytes) +
                                                " bytes, not a multiple of the 16-byte record size");
    }
    const auto count = static_cast<Eigen::Index>(bytes / cloud_record_bytes);
    point_cloud cloud;
    cloud.points.resize(3, count);
    cloud.intensity.resize(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) {
        for (int k = 0; k < 3; ++k) {
            cloud.points(k, i) = binary::read_f32(is, "cloud record");
        }
        cloud.intensity[static_cast<std::size_t>(i)] = binary::read_f32(is, "cloud record");
    }
    return cloud;
}

void write_cloud(const fs::path& path, const point_cloud& cloud) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw error(error_category::io, "cannot write cloud file " + path.string());
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        binary::write_f32(os, static_cast<float>(cloud.points(0, col)));
        binary::write_f32(os, static_cast<float>(cloud.points(1, col)));
        binary::write_f32(os, static_cast<float>(cloud.points(2, col)));
        binary::write_f32(os, cloud.intensity.empty() ? 0.0f : cloud.intensity[i]);
    }
}

std::vector<frame> load_dataset(const fs::path& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) {
        throw error(error_category::io, "missing manifest " + manifest_path.string());
    }
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::exception& e) {
        throw error(error_category::format, "malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    if (doc.value("format", std::string{}) != manifest_format) {
        throw error(error_category::format, "malformed manifest header: expected format \"" +
                                                std::string(manifest_format) + "\"");
    }
    const fs::path root = manifest_path.parent_path();

    std::map<std::string, calibration> calibrations;
    try {
        for (const auto& [name, block] : doc.at("calibrations").items()) {
            calibration c;
            c.intrinsics = matrix3_from_json(block.at("intrinsics"));
            c.extrinsics = matrix4_from_json(block.at("extrinsics"));
            c.validate();
            calibrations.emplace(name, c);
        }
    } catch (const json::exception& e) {
        throw error(error_category::format, std::string("malformed calibration block: ") + e.what());
    }

    std::vector<frame> frames;
    std::set<frame_id_t> seen;
    std::map<int, double> last_timestamp;
    for (const auto& entry : doc.at("frames")) {
        frame f;
        try {
            f.id = entry.at("frame_id").get<frame_id_t>();
        } catch (const json::exception& e) {
            throw error(error_category::format, std::string("frame entry without a valid frame_id: ") + e.what());
        }
        const std::string tag = frame_tag(f.id);
        try {
            f.timestamp = entry.at("timestamp").get<double>();
            f.sequence = entry.value("sequence", 0);
            const auto& pos = entry.at("position");
            const auto& quat = entry.at("quaternion");
            if (pos.size() != 3 || quat.size() != 4) {
                throw error(error_category::format, tag + "position needs 3 values and quaternion 4 (wxyz)");
            }
            f.world_pose.position = {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()};
            f.world_pose.heading =
                Eigen::Quaterniond(quat[0].get<double>(), quat[1].get<double>(), quat[2].get<double>(),
                                   quat[3].get<double>());
            f.calibration_ref = entry.at("calibration").get<std::string>();
        } catch (const json::exception& e) {
            throw error(error_category::format, tag + "malformed entry: " + e.what());
        }
        if (!seen.insert(f.id).second) {
            throw error(error_category::format, tag + "duplicate frame_id");
        }
        const auto calib = calibrations.find(f.calibration_ref);
        if (calib == calibrations.end()) {
            throw error(error_category::format, tag + "unknown calibration \"" + f.calibration_ref + "\"");
        }
        f.calib = calib->second;
        try {
            f.world_pose.validate();
            f.image = read_png(root / entry.at("image").get<std::string>());
            f.cloud = read_cloud(root / entry.at("cloud").get<std::string>());
            f.cloud.validate();
        } catch (const error& e) {
            throw error(e.category(), tag + e.what());
        }
        if (auto it = last_timestamp.find(f.sequence); it != last_timestamp.end() && f.timestamp < it->second) {
            throw error(error_category::format, tag + "timestamp decreases within sequence " +
                                                    std::to_string(f.sequence));
        }
        last_timestamp[f.sequence] = f.timestamp;
        frames.push_back(std::move(f));
    }
    return frames;
}

void save_dataset(const fs::path& root, const std::vector<frame>& frames, const std::string& manifest_name) {
    fs::create_directories(root / "images");
    fs::create_directories(root / "clouds");

    json calibs = json::object();
    std::vector<std::pair<calibration, std::string>> known;
    json entries = json::array();
    for (const auto& f : frames) {
        std::string ref;
        for (const auto& [c, name] : known) {
            if (c == f.calib) {
                ref = name;
                break;
            }
        }
        if (ref.empty()) {
            ref = f.calibration_ref.empty() ? "calib" + std::to_string(known.size()) : f.calibration_ref;
            known.emplace_back(f.calib, ref);
            calibs[ref] = {{"intrinsics", matrix_to_json(f.calib.intrinsics)},
                           {"extrinsics", matrix_to_json(f.calib.extrinsics)}};
        }
        const std::string image_rel = "images/" + std::to_string(f.id) + ".png";
        const std::string cloud_rel = "clouds/" + std::to_string(f.id) + ".bin";
        write_png(root / image_rel, f.image);
        write_cloud(root / cloud_rel, f.cloud);
        const auto& q = f.world_pose.heading;
        entries.push_back({{"frame_id", f.id},
                           {"timestamp", f.timestamp},
                           {"sequence", f.sequence},
                           {"image", image_rel},
                           {"cloud", cloud_rel},
                           {"position", {f.world_pose.position.x(), f.world_pose.position.y(),
                                         f.world_pose.position.z()}},
                           {"quaternion", {q.w(), q.x(), q.y(), q.z()}},
                           {"calibration", ref}});
    }
    json doc = {{"format", manifest_format}, {"calibrations", calibs}, {"frames", entries}};
    std::ofstream os(root / manifest_name);
    if (!os) {
        throw error(error_category::io, "cannot write manifest under " + root.string());
    }
    os << doc.dump(1) << '\n';
}

std::vector<frame> select_sequence(const std::vector<frame>& frames, const int sequence) {
    std::vector<frame> out;
    for (const auto& f : frames) {
        if (f.sequence == sequence) {
            out.push_back(f);
        }
    }
    return out;
}

sha256_digest dataset_hash(const std::vector<frame>& frames) {
    sha256_hasher h;
    h.update("mpr-dataset");
    for (const auto& f : frames) {
        h.update_pod(f.id);
        h.update_pod(f.timestamp);
        h.update_pod(f.sequence);
        h.update(std::span<const std::uint8_t>(f.image.pixels()));
        for (Eigen::Index i = 0; i < f.cloud.points.size(); ++i) {
            h.update_pod(f.cloud.points.data()[i]);
        }
        for (int k = 0; k < 3; ++k) {
            h.update_pod(f.world_pose.position[k]);
        }
        for (int k = 0; k < 4; ++k) {
            h.update_pod(f.world_pose.heading.coeffs()[k]);
        }
        for (int k = 0; k < 9; ++k) {
            h.update_pod(f.calib.intrinsics.data()[k]);
        }
        for (int k = 0; k < 16; ++k) {
            h.update_pod(f.calib.extrinsics.data()[k]);
        }
    }
    return h.finish();
}

} // namespace mpr
