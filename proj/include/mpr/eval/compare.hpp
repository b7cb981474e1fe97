#pragma once

#include <filesystem>
#include <vector>

#include "mpr/eval/recall.hpp"
#include "mpr/rerank/rerank.hpp"
#include "mpr/retrieval/grm.hpp"

namespace mpr::eval {

struct eval_config {
    double radius_m = 9.0;
    std::vector<int> ks = {1, 5, 10, 20};
    std::size_t retrieval_k = 30;
    std::uint64_t exclusion_window = 0;
    /// Traversal indexed as the database and traversal used as queries.
    int database_sequence = 0;
    int query_sequence = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static eval_config from_json(const nlohmann::json& j);
};

struct rank_change {
    frame_id_t query = 0;
    /// 1-based rank of the first correct candidate, 0 when none.
    std::size_t before = 0;
    std::size_t after = 0;
    bool answerable = true;
};

struct comparison {
    recall_report retrieval;
    recall_report reranked;
    std::vector<rank_change> changes;
    /// Answerable queries whose first correct match moved to rank 1 from a lower rank.
    std::size_t moved_to_first = 0;
    /// Answerable queries whose first correct match left rank 1.
    std::size_t moved_from_first = 0;
    std::vector<rerank::rerank_result> reports;

    nlohmann::json summary() const;
};

/// Pairs two arms over identical candidate sets.
comparison compare_results(const std::vector<query_result>& retrieval, const std::vector<query_result>& reranked,
                           const eval_config& config);

/// Retrieves the candidates for each query once, then scores both arms.
comparison compare_pipelines(const std::vector<frame>& queries, const index::descriptor_database& db,
                             retrieval::grm& net, const backbone& provider, const rerank::frame_lookup& lookup,
                             const eval_config& config, const rerank::tca_config& tca = {},
                             const depth::densify_config& densify = {}, bool keep_tracks = false);

/// "k,recall,arm" rows for both arms.
void write_recall_csv(const std::filesystem::path& path, const comparison& c);
/// "query,answerable,first_correct_retrieval,first_correct_reranked" rows.
void write_detail_csv(const std::filesystem::path& path, const comparison& c);

} // namespace mpr::eval
