#include "mpr/backbone/fixture_backbone.hpp"

#include "mpr/core/error.hpp"

namespace mpr {

namespace fs = std::filesystem;

std::string fixture_name(const frame_id_t id, const std::string& kind) {
    return std::to_string(id) + "." + kind + ".mprt";
}

std::string fixture_pair_name(const frame_id_t query, const frame_id_t candidate, const std::string& kind) {
    return std::to_string(query) + "-" + std::to_string(candidate) + "." + kind + ".mprt";
}

tensor to_tensor(const visual_embedding& e) {
    tensor t;
    t.dims = {static_cast<std::uint32_t>(e.channels()), static_cast<std::uint32_t>(e.token_rows),
              static_cast<std::uint32_t>(e.token_cols)};
    t.data.reserve(t.element_count());
    for (Eigen::Index c = 0; c < e.tokens.rows(); ++c) {
        for (Eigen::Index k = 0; k < e.tokens.cols(); ++k) {
            t.data.push_back(static_cast<float>(e.tokens(c, k)));
        }
    }
    return t;
}

tensor to_tensor(const grid_d& g) {
    tensor t;
    t.dims = {1, static_cast<std::uint32_t>(g.rows()), static_cast<std::uint32_t>(g.cols())};
    t.data.reserve(t.element_count());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        t.data.push_back(static_cast<float>(g.data()[i]));
    }
    return t;
}

tensor to_tensor(const segment_mask_set& masks, const int height, const int width) {
    tensor t;
    t.dims = {static_cast<std::uint32_t>(masks.masks.size()), static_cast<std::uint32_t>(height),
              static_cast<std::uint32_t>(width)};
    t.data.reserve(t.element_count());
    for (const auto& m : masks.masks) {
        for (const auto b : m.bits) {
            t.data.push_back(b ? 1.0f : 0.0f);
        }
    }
    return t;
}

tensor to_tensor(const std::vector<Eigen::Vector2d>& points) {
    tensor t;
    t.dims = {static_cast<std::uint32_t>(points.size()), 2};
    for (const auto& p : points) {
        t.data.push_back(static_cast<float>(p.x()));
        t.data.push_back(static_cast<float>(p.y()));
    }
    return t;
}

namespace {

grid_d grid_from_tensor(const tensor& t, const std::string& what) {
    if (t.dims[0] != 1) {
        throw error(error_category::format, what + " must have a leading dimension of 1");
    }
    grid_d g(t.dims[1], t.dims[2]);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        g.data()[i] = t.data[static_cast<std::size_t>(i)];
    }
    return g;
}

void check_size(const grid_d& g, const camera_image& image, const std::string& what) {
    if (g.rows() != image.height() || g.cols() != image.width()) {
        throw error(error_category::dimension, what + " does not match the image size");
    }
}

} // namespace

fixture_backbone::fixture_backbone(fs::path directory, const int patch_stride)
    : directory_(std::move(directory)), patch_stride_(patch_stride) {}

std::shared_ptr<const tensor> fixture_backbone::load(const std::string& name, const std::size_t rank) const {
    {
        std::shared_lock lock(cache_mutex_);
        if (const auto it = cache_.find(name); it != cache_.end()) {
            return it->second;
        }
    }
    const fs::path path = directory_ / name;
    if (!fs::exists(path)) {
        throw error(error_category::provider, "fixture file missing: " + path.string());
    }
    auto loaded = std::make_shared<const tensor>(read_tensor_file(path, rank));
    std::unique_lock lock(cache_mutex_);
    return cache_.try_emplace(name, std::move(loaded)).first->second;
}

std::size_t fixture_backbone::cached_files() const {
    std::shared_lock lock(cache_mutex_);
    return cache_.size();
}

embedding_output fixture_backbone::embed(const image_view& view) const {
    const auto& image = view.pixels();
    const auto emb = load(fixture_name(view.frame_id, "emb"), 3);
    const auto rdepth = load(fixture_name(view.frame_id, "rdepth"), 3);

    embedding_output out;
    auto& e = out.embedding;
    e.patch_stride = patch_stride_;
    e.token_rows = static_cast<int>(emb->dims[1]);
    e.token_cols = static_cast<int>(emb->dims[2]);
    if (e.token_rows != token_extent(image.height(), patch_stride_) ||
        e.token_cols != token_extent(image.width(), patch_stride_)) {
        throw error(error_category::dimension, "fixture embedding grid does not match ceil(H/stride) x ceil(W/stride)");
    }
    e.tokens.resize(emb->dims[0], static_cast<Eigen::Index>(e.token_rows) * e.token_cols);
    std::size_t i = 0;
    for (Eigen::Index c = 0; c < e.tokens.rows(); ++c) {
        for (Eigen::Index k = 0; k < e.tokens.cols(); ++k) {
            e.tokens(c, k) = emb->data[i++];
        }
    }
    out.relative_depth.values = grid_from_tensor(*rdepth, "relative depth fixture");
    check_size(out.relative_depth.values, image, "relative depth fixture");
    if (!(out.relative_depth.values.array() > 0.0).all() || !out.relative_depth.values.allFinite()) {
        throw error(error_category::format, "relative depth fixture must be positive and finite");
    }
    return out;
}

track_result fixture_backbone::track(const image_view& query, const image_view& candidate,
                                     const keypoint_set& keypoints) const {
    check_keypoints(keypoints, query.pixels());
    const auto pts = load(fixture_pair_name(query.frame_id, candidate.frame_id, "track_pts"), 2);
    const auto conf = load(fixture_pair_name(query.frame_id, candidate.frame_id, "track_conf"), 3);
    if (pts->dims[0] != keypoints.size() || pts->dims[1] != 2) {
        throw error(error_category::dimension, "fixture track points do not match the keypoint count");
    }
    track_result out;
    out.predicted_points.reserve(keypoints.size());
    for (std::size_t a = 0; a < keypoints.size(); ++a) {
        out.predicted_points.emplace_back(pts->data[2 * a], pts->data[2 * a + 1]);
    }
    out.confidence_map = grid_from_tensor(*conf, "track confidence fixture");
    check_size(out.confidence_map, candidate.pixels(), "track confidence fixture");
    out.confidence_map = out.confidence_map.cwiseMax(0.0).cwiseMin(1.0);
    sample_track_confidences(out);
    return out;
}

segment_mask_set fixture_backbone::segment(const image_view& view) const {
    const auto& image = view.pixels();
    const auto masks = load(fixture_name(view.frame_id, "mask"), 3);
    if (masks->dims[1] != static_cast<std::uint32_t>(image.height()) ||
        masks->dims[2] != static_cast<std::uint32_t>(image.width())) {
        throw error(error_category::dimension, "mask fixture does not match the image size");
    }
    segment_mask_set out;
    const std::size_t plane = static_cast<std::size_t>(image.height()) * image.width();
    for (std::uint32_t m = 0; m < masks->dims[0]; ++m) {
        binary_mask mask(image.height(), image.width());
        for (std::size_t i = 0; i < plane; ++i) {
            mask.bits[i] = masks->data[m * plane + i] != 0.0f ? 1 : 0;
        }
        out.masks.push_back(std::move(mask));
    }
    return out;
}

sha256_digest fixture_backbone::state_checksum() const {
    sha256_hasher h;
    h.update("fixture-backbone");
    h.update(directory_.string());
    h.update_pod(patch_stride_);
    return h.finish();
}

recording_backbone::recording_backbone(const backbone& inner, fs::path directory)
    : inner_(inner), directory_(std::move(directory)) {
    fs::create_directories(directory_);
}

embedding_output recording_backbone::embed(const image_view& view) const {
    auto out = inner_.embed(view);
    std::lock_guard lock(write_mutex_);
    write_tensor_file(directory_ / fixture_name(view.frame_id, "emb"), to_tensor(out.embedding));
    write_tensor_file(directory_ / fixture_name(view.frame_id, "rdepth"), to_tensor(out.relative_depth.values));
    return out;
}

track_result recording_backbone::track(const image_view& query, const image_view& candidate,
                                       const keypoint_set& keypoints) const {
    auto out = inner_.track(query, candidate, keypoints);
    std::lock_guard lock(write_mutex_);
    write_tensor_file(directory_ / fixture_pair_name(query.frame_id, candidate.frame_id, "track_pts"),
                      to_tensor(out.predicted_points));
    write_tensor_file(directory_ / fixture_pair_name(query.frame_id, candidate.frame_id, "track_conf"),
                      to_tensor(out.confidence_map));
    return out;
}

segment_mask_set recording_backbone::segment(const image_view& view) const {
    auto out = inner_.segment(view);
    std::lock_guard lock(write_mutex_);
    write_tensor_file(directory_ / fixture_name(view.frame_id, "mask"),
                      to_tensor(out, view.pixels().height(), view.pixels().width()));
    return out;
}

} // namespace mpr
