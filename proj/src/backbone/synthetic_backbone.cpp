#include "mpr/backbone/synthetic_backbone.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "mpr/core/error.hpp"
#include "mpr/core/random.hpp"

namespace mpr {

namespace {

constexpr int segment_min_area = 16;

Eigen::MatrixXd gaussian_matrix(const Eigen::Index rows, const Eigen::Index cols, const std::uint64_t seed) {
    rng gen(seed);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            m(r, c) = gen.normal();
        }
    }
    return m;
}

double yaw_of(const Eigen::Quaterniond& q) {
    const Eigen::Vector3d fwd = q * Eigen::Vector3d::UnitX();
    return std::atan2(fwd.y(), fwd.x());
}

double wrap_angle(double a) {
    while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
    while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

relative_depth_map normalise_depth(grid_d depth) {
    std::vector<double> values(depth.data(), depth.data() + depth.size());
    const double m = median(std::move(values));
    return {depth / m};
}

} // namespace

synthetic_backbone::synthetic_backbone(synthetic_backbone_config config,
                                       std::shared_ptr<const synthetic::scene_catalog> catalog)
    : config_(config), catalog_(std::move(catalog)) {
    if (config_.patch_stride <= 0 || config_.embed_channels <= 0) {
        throw error(error_category::config, "synthetic backbone needs positive patch_stride and embed_channels");
    }
}

const synthetic::frame_record* synthetic_backbone::known(const image_view& view) const {
    if (!catalog_) {
        return nullptr;
    }
    const auto* f = catalog_->find(view.frame_id);
    if (f == nullptr || f->size.height != view.pixels().height() || f->size.width != view.pixels().width()) {
        return nullptr;
    }
    return f;
}

std::shared_ptr<const synthetic::render_output> synthetic_backbone::rendered(const synthetic::frame_record& f) const {
    {
        const std::lock_guard lock(render_mutex_);
        if (const auto it = renders_.find(f.id); it != renders_.end()) {
            return it->second;
        }
    }
    auto r = std::make_shared<const synthetic::render_output>(
        synthetic::render(catalog_->scene_for(f), catalog_->camera_for(f), config_.far_depth_m));
    const std::lock_guard lock(render_mutex_);
    if (renders_.emplace(f.id, r).second) {
        render_order_.push_back(f.id);
        if (render_order_.size() > 256) {
            renders_.erase(render_order_.front());
            render_order_.pop_front();
        }
    }
    return r;
}

embedding_output synthetic_backbone::embed(const image_view& view) const {
    if (const auto* f = known(view)) {
        return embed_known(*f, view.pixels());
    }
    return embed_image_only(view);
}

embedding_output synthetic_backbone::embed_known(const synthetic::frame_record& f, const camera_image& image) const {
    const int h = image.height();
    const int w = image.width();
    const int stride = config_.patch_stride;
    const int rows = token_extent(h, stride);
    const int cols = token_extent(w, stride);
    const Eigen::Index c = config_.embed_channels;
    const Eigen::Index t = static_cast<Eigen::Index>(rows) * cols;

    const auto& place = catalog_->places.at(static_cast<std::size_t>(f.place));
    Eigen::MatrixXd tokens = gaussian_matrix(c, t, mix64(place.appearance_seed, 0xA11CE));
    if (place.alias_seed != 0) {
        tokens += catalog_->alias_appearance_noise * gaussian_matrix(c, t, mix64(place.alias_seed, 0xA11A5));
    }

    const Eigen::Vector3d offset = place.anchor.heading.conjugate() * (f.world_pose.position - place.anchor.position);
    const double dyaw_deg =
        wrap_angle(yaw_of(f.world_pose.heading) - yaw_of(place.anchor.heading)) * 180.0 / std::numbers::pi;
    const double coords[3] = {offset.x(), offset.y(), dyaw_deg / 2.0};
    for (int k = 0; k < 3; ++k) {
        tokens += config_.pose_sensitivity * coords[k] * gaussian_matrix(c, t, mix64(config_.seed, 0xB0 + k));
    }
    tokens += config_.embedding_noise * gaussian_matrix(c, t, mix64(config_.seed, f.id, 0x4E015E));

    const auto render_ptr = rendered(f);
    const auto& rendered = *render_ptr;

    if (!f.occluders.empty()) {
        for (int tr = 0; tr < rows; ++tr) {
            for (int tc = 0; tc < cols; ++tc) {
                int covered = 0;
                int total = 0;
                for (int y = tr * stride; y < std::min(h, (tr + 1) * stride); ++y) {
                    for (int x = tc * stride; x < std::min(w, (tc + 1) * stride); ++x) {
                        covered += rendered.object_id(y, x) >= synthetic::first_occluder_id;
                        ++total;
                    }
                }
                if (2 * covered > total) {
                    const Eigen::Index token = static_cast<Eigen::Index>(tr) * cols + tc;
                    tokens.col(token) = gaussian_matrix(c, 1, mix64(config_.seed, f.id, 0x0CC0 + token));
                }
            }
        }
    }

    embedding_output out;
    out.embedding = {std::move(tokens), rows, cols, stride};
    out.relative_depth = normalise_depth(rendered.depth);
    return out;
}

embedding_output synthetic_backbone::embed_image_only(const image_view& view) const {
    const auto& image = view.pixels();
    const int h = image.height();
    const int w = image.width();
    const int stride = config_.patch_stride;
    const int rows = token_extent(h, stride);
    const int cols = token_extent(w, stride);
    constexpr int features = 7;
    const Eigen::MatrixXd projection = gaussian_matrix(config_.embed_channels, features, mix64(config_.seed, 0x1A6E));

    Eigen::MatrixXd tokens(config_.embed_channels, static_cast<Eigen::Index>(rows) * cols);
    for (int tr = 0; tr < rows; ++tr) {
        for (int tc = 0; tc < cols; ++tc) {
            Eigen::VectorXd f = Eigen::VectorXd::Zero(features);
            double sum_g = 0.0;
            double sum_g2 = 0.0;
            int n = 0;
            for (int y = tr * stride; y < std::min(h, (tr + 1) * stride); ++y) {
                for (int x = tc * stride; x < std::min(w, (tc + 1) * stride); ++x) {
                    for (int k = 0; k < 3; ++k) {
                        f[k] += image.at(x, y, k) / 255.0;
                    }
                    const double g = image.gray(x, y);
                    sum_g += g;
                    sum_g2 += g * g;
                    f[4] += std::abs(image.gray(std::min(x + 1, w - 1), y) - g) / 64.0;
                    f[5] += std::abs(image.gray(x, std::min(y + 1, h - 1)) - g) / 64.0;
                    ++n;
                }
            }
            f.head<3>() /= n;
            const double mean_g = sum_g / n;
            f[3] = std::sqrt(std::max(0.0, sum_g2 / n - mean_g * mean_g)) / 64.0;
            f[4] /= n;
            f[5] /= n;
            f[6] = 1.0;
            tokens.col(static_cast<Eigen::Index>(tr) * cols + tc) = (projection * f).array().tanh().matrix();
        }
    }

    grid_d depth(h, w);
    for (int y = 0; y < h; ++y) {
        depth.row(y).setConstant(1.0 + 2.0 * (1.0 - static_cast<double>(y) / (h - 1)));
    }
    embedding_output out;
    out.embedding = {std::move(tokens), rows, cols, stride};
    out.relative_depth = normalise_depth(std::move(depth));
    return out;
}

track_result synthetic_backbone::track(const image_view& query, const image_view& candidate,
                                       const keypoint_set& keypoints) const {
    check_keypoints(keypoints, query.pixels());
    const auto* q = known(query);
    const auto* c = known(candidate);
    if (q != nullptr && c != nullptr) {
        return track_known(*q, *c, keypoints);
    }
    return track_image_only(query, candidate, keypoints);
}

track_result synthetic_backbone::track_known(const synthetic::frame_record& q, const synthetic::frame_record& c,
                                             const keypoint_set& keypoints) const {
    const synthetic::scene sq = catalog_->scene_for(q);
    const auto cam_q = catalog_->camera_for(q);
    const auto cam_c = catalog_->camera_for(c);
    const double far = config_.far_depth_m;
    const auto rq_ptr = rendered(q);
    const auto rc_ptr = rendered(c);
    const auto& rq = *rq_ptr;
    const auto& rc = *rc_ptr;

    const double distance = q.world_pose.distance_to(c.world_pose);
    const double factor = std::exp(-distance / config_.confidence_distance_scale_m);
    const std::uint64_t pair_seed = mix64(config_.seed, q.id, c.id);

    const int hq = q.size.height;
    const int wq = q.size.width;
    const int hc = c.size.height;
    const int wc = c.size.width;
    const Eigen::Matrix3d& kq = q.calib.intrinsics;
    const Eigen::Vector3d origin_c = cam_c.origin_world();

    const auto project_q = [&](const Eigen::Vector3d& p_cam, int& x, int& y) {
        const Eigen::Vector3d h = kq * p_cam;
        const double u = h.x() / h.z();
        const double v = h.y() / h.z();
        if (!(u > -0.5 && v > -0.5 && u < wq - 0.5 && v < hq - 0.5)) {
            return false;
        }
        x = std::clamp(static_cast<int>(std::lround(u)), 0, wq - 1);
        y = std::clamp(static_cast<int>(std::lround(v)), 0, hq - 1);
        return true;
    };

    track_result out;
    out.confidence_map.resize(hc, wc);
    for (int y = 0; y < hc; ++y) {
        for (int x = 0; x < wc; ++x) {
            const Eigen::Vector3d dir = cam_c.ray_world(x, y);
            bool visible = false;
            int qx = 0;
            int qy = 0;
            if (rc.object_id(y, x) == synthetic::sky_id) {
                const Eigen::Vector3d d_q = cam_q.world_direction_to_camera(dir);
                visible = d_q.z() > 1e-9 && project_q(d_q, qx, qy) && rq.object_id(qy, qx) == synthetic::sky_id;
            } else {
                const Eigen::Vector3d p_q = cam_q.world_to_camera(origin_c + rc.depth(y, x) * dir);
                if (p_q.z() > 1e-9 && project_q(p_q, qx, qy) && rq.object_id(qy, qx) != synthetic::sky_id) {
                    visible = std::abs(rq.depth(qy, qx) - p_q.z()) <= 0.05 * p_q.z() + 0.05;
                }
            }
            const std::uint64_t bits = mix64(pair_seed, static_cast<std::uint64_t>(y) * wc + x);
            const double noise = config_.confidence_noise * (2.0 * unit_from_bits(bits) - 1.0);
            out.confidence_map(y, x) = std::clamp((visible ? factor : 0.0) + noise, 0.0, 1.0);
        }
    }

    const Eigen::Vector3d origin_q = cam_q.origin_world();
    const Eigen::Matrix3d& kc = c.calib.intrinsics;
    out.predicted_points.reserve(keypoints.size());
    for (const auto& kp : keypoints.points) {
        const Eigen::Vector3d dir = cam_q.ray_world(kp.x(), kp.y());
        const auto hit = synthetic::cast_ray(sq, origin_q, dir, far);
        const Eigen::Vector3d p_c =
            hit ? cam_c.world_to_camera(hit->point) : cam_c.world_direction_to_camera(dir);
        Eigen::Vector2d predicted = kp;
        if (p_c.z() > 1e-9) {
            const Eigen::Vector3d h = kc * p_c;
            predicted = {h.x() / h.z(), h.y() / h.z()};
        }
        predicted.x() = std::clamp(predicted.x(), 0.0, static_cast<double>(wc - 1));
        predicted.y() = std::clamp(predicted.y(), 0.0, static_cast<double>(hc - 1));
        out.predicted_points.push_back(predicted);
    }
    sample_track_confidences(out);
    return out;
}

track_result synthetic_backbone::track_image_only(const image_view& query, const image_view& candidate,
                                                  const keypoint_set& keypoints) const {
    const auto& iq = query.pixels();
    const auto& ic = candidate.pixels();
    if (iq.height() != ic.height() || iq.width() != ic.width()) {
        throw error(error_category::provider,
                    "image-only tracking needs equally sized images (frames unknown to the world catalog)");
    }
    track_result out;
    out.confidence_map.resize(ic.height(), ic.width());
    for (int y = 0; y < ic.height(); ++y) {
        for (int x = 0; x < ic.width(); ++x) {
            out.confidence_map(y, x) = std::exp(-std::abs(iq.gray(x, y) - ic.gray(x, y)) / 16.0);
        }
    }
    out.predicted_points = keypoints.points;
    sample_track_confidences(out);
    return out;
}

segment_mask_set synthetic_backbone::segment(const image_view& view) const {
    const auto& image = view.pixels();
    const int h = image.height();
    const int w = image.width();
    segment_mask_set out;

    if (const auto* f = known(view)) {
        const auto render_ptr = rendered(*f);
        const auto& rendered = *render_ptr;
        std::map<int, binary_mask> by_id;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                auto [it, inserted] = by_id.try_emplace(rendered.object_id(y, x), h, w);
                it->second.set(x, y);
            }
        }
        for (auto& [id, mask] : by_id) {
            out.masks.push_back(std::move(mask));
        }
        return out;
    }

    // Connected components of identical colour.
    std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
    std::vector<int> stack;
    int next = 0;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            if (label[static_cast<std::size_t>(y0) * w + x0] >= 0) {
                continue;
            }
            binary_mask mask(h, w);
            int area = 0;
            stack.assign(1, y0 * w + x0);
            label[static_cast<std::size_t>(y0) * w + x0] = next;
            while (!stack.empty()) {
                const int idx = stack.back();
                stack.pop_back();
                const int x = idx % w;
                const int y = idx / w;
                mask.set(x, y);
                ++area;
                const int nbr[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
                for (const auto& n : nbr) {
                    if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) {
                        continue;
                    }
                    auto& l = label[static_cast<std::size_t>(n[1]) * w + n[0]];
                    if (l >= 0) {
                        continue;
                    }
                    bool same = true;
                    for (int k = 0; k < 3; ++k) {
                        same = same && image.at(n[0], n[1], k) == image.at(x, y, k);
                    }
                    if (same) {
                        l = next;
                        stack.push_back(n[1] * w + n[0]);
                    }
                }
            }
            ++next;
            if (area >= segment_min_area) {
                out.masks.push_back(std::move(mask));
            }
        }
    }
    return out;
}

sha256_digest synthetic_backbone::state_checksum() const {
    sha256_hasher h;
    h.update("synthetic-backbone");
    h.update_pod(config_.seed);
    h.update_pod(config_.patch_stride);
    h.update_pod(config_.embed_channels);
    h.update_pod(config_.pose_sensitivity);
    h.update_pod(config_.embedding_noise);
    h.update_pod(config_.far_depth_m);
    h.update_pod(config_.confidence_distance_scale_m);
    h.update_pod(config_.confidence_noise);
    if (catalog_) {
        h.update(catalog_->to_json_text());
    }
    return h.finish();
}

} // namespace mpr
