#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mpr/backbone/backbone.hpp"
#include "mpr/index/database.hpp"
#include "mpr/rerank/tca.hpp"

namespace mpr::rerank {

struct keypoint_extraction {
    keypoint_set keypoints;
    /// Region the detector searched.
    binary_mask region;
    std::size_t masks_total = 0;
    std::size_t masks_kept = 0;
    /// The retained mask union was empty and the whole image was searched.
    bool fallback = false;
};

/// Drops masks larger than mask_area_fraction of the image, then runs FAST
/// inside the union of the remaining ones.
keypoint_extraction extract_query_keypoints(const image_view& query, const backbone& provider,
                                            const tca_config& config = {});

/// Tracks the keypoints into the candidate and aggregates the confidences.
/// An empty keypoint set yields the floor score without calling the tracker.
rerank_score score_candidate(const image_view& query, const image_view& candidate, const keypoint_set& keypoints,
                             const backbone& provider, const tca_config& config = {},
                             track_result* track_out = nullptr);

struct ranked_candidate {
    index::candidate candidate;
    /// 1-based rank in the retrieval list.
    std::size_t original_rank = 0;
    std::size_t new_rank = 0;
    rerank_score score;
    bool failed = false;
    std::string failure;
    std::optional<track_result> track;
};

struct rerank_result {
    frame_id_t query = 0;
    keypoint_extraction extraction;
    std::vector<ranked_candidate> ranked;

    index::candidate_list order() const;
};

using frame_lookup = std::function<const frame*(frame_id_t)>;

/// Sorted by s_total descending, ties by original rank; candidates whose
/// scoring failed follow in their original order.
rerank_result rerank_candidates(const frame& query, const index::candidate_list& candidates,
                                const frame_lookup& lookup, const backbone& provider, const tca_config& config = {},
                                bool keep_tracks = false);

/// Orders precomputed scores the same way rerank_candidates does; failed
/// entries are those with `failed` set.
void sort_ranked(std::vector<ranked_candidate>& ranked);

} // namespace mpr::rerank
