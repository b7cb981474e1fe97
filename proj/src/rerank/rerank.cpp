#include "mpr/rerank/rerank.hpp"

#include <algorithm>

#include "mpr/backbone/fast.hpp"
#include "mpr/core/error.hpp"

namespace mpr::rerank {

keypoint_extraction extract_query_keypoints(const image_view& query, const backbone& provider,
                                            const tca_config& config) {
    const camera_image& image = query.pixels();
    const segment_mask_set masks = provider.segment(query);
    const double limit = config.mask_area_fraction * image.height() * image.width();
    keypoint_extraction out;
    out.region = binary_mask(image.height(), image.width());
    out.masks_total = masks.masks.size();
    bool any = false;
    for (const auto& m : masks.masks) {
        if (m.height != image.height() || m.width != image.width()) {
            throw error(error_category::provider, "segment mask size does not match the image");
        }
        if (static_cast<double>(m.area()) > limit) {
            continue;
        }
        ++out.masks_kept;
        for (std::size_t i = 0; i < m.bits.size(); ++i) {
            if (m.bits[i] != 0) {
                out.region.bits[i] = 1;
                any = true;
            }
        }
    }
    if (!any) {
        out.fallback = true;
        out.region = binary_mask(image.height(), image.width(), true);
    }
    fast_config fc;
    fc.threshold = config.fast_threshold;
    fc.max_points = static_cast<std::size_t>(config.max_keypoints);
    out.keypoints = fast_detector(fc).detect(image, out.region);
    return out;
}

rerank_score score_candidate(const image_view& query, const image_view& candidate, const keypoint_set& keypoints,
                             const backbone& provider, const tca_config& config, track_result* track_out) {
    if (candidate.image == nullptr || candidate.pixels().empty()) {
        throw error(error_category::invalid_argument, "candidate image is empty");
    }
    if (keypoints.empty()) {
        return floor_score(nullptr, config);
    }
    track_result tr = provider.track(query, candidate, keypoints);
    if (tr.sampled_confidences.size() != keypoints.size()) {
        throw error(error_category::provider, "tracker returned " + std::to_string(tr.sampled_confidences.size()) +
                                                  " confidences for " + std::to_string(keypoints.size()) +
                                                  " keypoints");
    }
    const rerank_score s = tca_score(tr.sampled_confidences, tr.confidence_map, config);
    if (track_out != nullptr) {
        *track_out = std::move(tr);
    }
    return s;
}

index::candidate_list rerank_result::order() const {
    index::candidate_list out;
    out.reserve(ranked.size());
    for (const auto& r : ranked) {
        out.push_back(r.candidate);
    }
    return out;
}

void sort_ranked(std::vector<ranked_candidate>& ranked) {
    std::stable_sort(ranked.begin(), ranked.end(), [](const ranked_candidate& a, const ranked_candidate& b) {
        if (a.failed != b.failed) {
            return !a.failed;
        }
        if (!a.failed && a.score.s_total != b.score.s_total) {
            return a.score.s_total > b.score.s_total;
        }
        return a.original_rank < b.original_rank;
    });
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        ranked[i].new_rank = i + 1;
    }
}

rerank_result rerank_candidates(const frame& query, const index::candidate_list& candidates,
                                const frame_lookup& lookup, const backbone& provider, const tca_config& config,
                                const bool keep_tracks) {
    config.validate();
    rerank_result out;
    out.query = query.id;
    const image_view qv = image_view::of(query);
    out.extraction = extract_query_keypoints(qv, provider, config);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        ranked_candidate rc;
        rc.candidate = candidates[i];
        rc.original_rank = i + 1;
        try {
            const frame* cf = lookup(candidates[i].frame_id);
            if (cf == nullptr) {
                throw error(error_category::invalid_argument,
                            "candidate frame " + std::to_string(candidates[i].frame_id) + " not found");
            }
            track_result tr;
            rc.score = score_candidate(qv, image_view::of(*cf), out.extraction.keypoints, provider, config,
                                       keep_tracks ? &tr : nullptr);
            if (keep_tracks && !rc.score.floor) {
                rc.track = std::move(tr);
            }
        } catch (const error& e) {
            rc.failed = true;
            rc.failure = std::string(to_string(e.category())) + ": " + e.what();
            rc.score = {};
        }
        out.ranked.push_back(std::move(rc));
    }
    sort_ranked(out.ranked);
    return out;
}

} // namespace mpr::rerank
