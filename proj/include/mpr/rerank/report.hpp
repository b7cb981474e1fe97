#pragma once

#include <filesystem>
#include <vector>

#include "json.hpp"

#include "mpr/rerank/rerank.hpp"

namespace mpr::rerank {

/// One record per query. Track points and confidences are included only when
/// the result kept them.
nlohmann::json to_json(const rerank_result& result);
rerank_result result_from_json(const nlohmann::json& j);

/// Retrieval-only record: candidates keep their order and carry no scores.
rerank_result passthrough(frame_id_t query, const index::candidate_list& candidates);

void write_report(const std::filesystem::path& path, const std::vector<rerank_result>& results);
std::vector<rerank_result> read_report(const std::filesystem::path& path);

} // namespace mpr::rerank
