#pragma once

#include <vector>

#include "mpr/core/grid.hpp"
#include "mpr/core/hash.hpp"
#include "mpr/core/types.hpp"

namespace mpr {

/// C x H' x W' token grid stored as a C x (H' * W') matrix; token index is
/// row * W' + col.
struct visual_embedding {
    Eigen::MatrixXd tokens;
    int token_rows = 0;
    int token_cols = 0;
    int patch_stride = 16;

    int channels() const { return static_cast<int>(tokens.rows()); }
};

/// Positive, unitless, scale-free depth over the full image.
struct relative_depth_map {
    grid_d values;
};

struct keypoint_set {
    std::vector<Eigen::Vector2d> points;
    /// Detector response per point; empty when the source gives none.
    std::vector<double> scores;

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }
};

struct track_result {
    std::vector<Eigen::Vector2d> predicted_points;
    /// Candidate-image confidence map with values in [0, 1].
    grid_d confidence_map;
    /// Confidence map sampled bilinearly at each predicted point.
    std::vector<double> sampled_confidences;
};

struct segment_mask_set {
    std::vector<binary_mask> masks;
};

struct embedding_output {
    visual_embedding embedding;
    relative_depth_map relative_depth;
};

/// Non-owning reference to an image plus the identity of the frame it came
/// from; fixture-backed providers key their files on the frame id.
struct image_view {
    frame_id_t frame_id = 0;
    const camera_image* image = nullptr;

    static image_view of(const frame& f) { return {f.id, &f.image}; }
    const camera_image& pixels() const { return *image; }
};

/// Every foundation-model capability the pipeline consumes. Implementations
/// are pure functions of (inputs, seed or fixture) and safe to call
/// concurrently.
class backbone {
public:
    virtual ~backbone() = default;

    virtual embedding_output embed(const image_view& view) const = 0;
    virtual track_result track(const image_view& query, const image_view& candidate,
                               const keypoint_set& keypoints) const = 0;
    virtual segment_mask_set segment(const image_view& view) const = 0;

    virtual int patch_stride() const = 0;
    /// Digest of every piece of provider state; used to verify the backbone
    /// stays frozen.
    virtual sha256_digest state_checksum() const = 0;
};

inline int token_extent(const int pixels, const int stride) { return (pixels + stride - 1) / stride; }

/// Fills sampled_confidences from the map and clamps them to [0, 1].
void sample_track_confidences(track_result& result);

/// Throws when any keypoint is outside the image or the set is empty.
void check_keypoints(const keypoint_set& keypoints, const camera_image& image);

} // namespace mpr
