#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

#include "mpr/backbone/backbone.hpp"
#include "mpr/backbone/tensor_file.hpp"

namespace mpr {

/// File names of fixture tensors. Per-frame kinds are `<frame_id>.<kind>.mprt`
/// (emb, rdepth, mask); tracking kinds are keyed by the frame pair,
/// `<query_id>-<candidate_id>.<kind>.mprt` (track_pts, track_conf).
std::string fixture_name(frame_id_t id, const std::string& kind);
std::string fixture_pair_name(frame_id_t query, frame_id_t candidate, const std::string& kind);

tensor to_tensor(const visual_embedding& e);
tensor to_tensor(const grid_d& g);
tensor to_tensor(const segment_mask_set& masks, int height, int width);
tensor to_tensor(const std::vector<Eigen::Vector2d>& points);

/// Replays backbone outputs stored as MPRT1 tensors. Reads are cached; the
/// cache is safe under concurrent readers.
class fixture_backbone final : public backbone {
public:
    fixture_backbone(std::filesystem::path directory, int patch_stride = 16);

    embedding_output embed(const image_view& view) const override;
    track_result track(const image_view& query, const image_view& candidate,
                       const keypoint_set& keypoints) const override;
    segment_mask_set segment(const image_view& view) const override;

    int patch_stride() const override { return patch_stride_; }
    sha256_digest state_checksum() const override;

    std::size_t cached_files() const;

private:
    std::shared_ptr<const tensor> load(const std::string& name, std::size_t rank) const;

    std::filesystem::path directory_;
    int patch_stride_;
    mutable std::shared_mutex cache_mutex_;
    mutable std::map<std::string, std::shared_ptr<const tensor>> cache_;
};

/// Forwards to another provider and writes each result as a fixture file.
class recording_backbone final : public backbone {
public:
    recording_backbone(const backbone& inner, std::filesystem::path directory);

    embedding_output embed(const image_view& view) const override;
    track_result track(const image_view& query, const image_view& candidate,
                       const keypoint_set& keypoints) const override;
    segment_mask_set segment(const image_view& view) const override;

    int patch_stride() const override { return inner_.patch_stride(); }
    sha256_digest state_checksum() const override { return inner_.state_checksum(); }

private:
    const backbone& inner_;
    std::filesystem::path directory_;
    mutable std::mutex write_mutex_;
};

} // namespace mpr
