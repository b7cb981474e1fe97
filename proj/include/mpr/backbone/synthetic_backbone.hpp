#pragma once

#include <deque>
#include <map>
#include <memory>
#include <mutex>

#include "mpr/backbone/backbone.hpp"
#include "mpr/backbone/scene.hpp"

namespace mpr {

struct synthetic_backbone_config {
    std::uint64_t seed = 0;
    int patch_stride = 16;
    int embed_channels = 32;
    /// Embedding shift per meter of position offset (and per 2 degrees of
    /// heading offset) from the place anchor.
    double pose_sensitivity = 0.15;
    double embedding_noise = 0.05;
    double far_depth_m = 150.0;
    double confidence_distance_scale_m = 5.0;
    double confidence_noise = 0.005;
};

/// Deterministic stand-in for the foundation model. Frames known to the
/// scene catalog get ground-truth driven outputs: embeddings from a per-place
/// appearance latent plus pose perturbation and seeded noise, relative depth
/// rendered from the scene and divided by its median, and tracking confidence
/// exp(-pose distance / scale) times co-visibility plus seeded noise. Frames
/// the catalog does not know fall back to image-only heuristics.
class synthetic_backbone final : public backbone {
public:
    explicit synthetic_backbone(synthetic_backbone_config config = {},
                                std::shared_ptr<const synthetic::scene_catalog> catalog = nullptr);

    embedding_output embed(const image_view& view) const override;
    track_result track(const image_view& query, const image_view& candidate,
                       const keypoint_set& keypoints) const override;
    segment_mask_set segment(const image_view& view) const override;

    int patch_stride() const override { return config_.patch_stride; }
    sha256_digest state_checksum() const override;

    const synthetic_backbone_config& config() const noexcept { return config_; }
    const synthetic::scene_catalog* catalog() const noexcept { return catalog_.get(); }

private:
    const synthetic::frame_record* known(const image_view& view) const;
    /// Rendered scene of a catalog frame; a bounded cache of recent renders.
    std::shared_ptr<const synthetic::render_output> rendered(const synthetic::frame_record& f) const;

    embedding_output embed_known(const synthetic::frame_record& f, const camera_image& image) const;
    embedding_output embed_image_only(const image_view& view) const;
    track_result track_known(const synthetic::frame_record& q, const synthetic::frame_record& c,
                             const keypoint_set& keypoints) const;
    track_result track_image_only(const image_view& query, const image_view& candidate,
                                  const keypoint_set& keypoints) const;

    synthetic_backbone_config config_;
    std::shared_ptr<const synthetic::scene_catalog> catalog_;
    mutable std::mutex render_mutex_;
    mutable std::map<frame_id_t, std::shared_ptr<const synthetic::render_output>> renders_;
    mutable std::deque<frame_id_t> render_order_;
};

} // namespace mpr
