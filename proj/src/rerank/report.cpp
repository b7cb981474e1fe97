#include "mpr/rerank/report.hpp"

#include <algorithm>
#include <fstream>

#include "mpr/core/error.hpp"

namespace mpr::rerank {

nlohmann::json to_json(const rerank_result& result) {
    nlohmann::json j;
    j["query"] = result.query;
    j["fallback"] = result.extraction.fallback;
    j["keypoint_count"] = result.extraction.keypoints.size();
    const bool with_tracks = std::any_of(result.ranked.begin(), result.ranked.end(),
                                         [](const ranked_candidate& r) { return r.track.has_value(); });
    if (with_tracks) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : result.extraction.keypoints.points) {
            pts.push_back({p.x(), p.y()});
        }
        j["keypoints"] = std::move(pts);
    }
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& r : result.ranked) {
        nlohmann::json c = {{"frame_id", r.candidate.frame_id},
                            {"original_rank", r.original_rank},
                            {"new_rank", r.new_rank},
                            {"distance", r.candidate.distance},
                            {"position", {r.candidate.position.x(), r.candidate.position.y(), r.candidate.position.z()}},
                            {"s_med", r.score.s_med},
                            {"s_high", r.score.s_high},
                            {"s_cons", r.score.s_cons},
                            {"s_total", r.score.s_total},
                            {"n_keypoints", r.score.n_keypoints},
                            {"floor", r.score.floor},
                            {"failed", r.failed}};
        if (r.failed) {
            c["failure"] = r.failure;
        }
        if (r.track) {
            nlohmann::json pts = nlohmann::json::array();
            for (const auto& p : r.track->predicted_points) {
                pts.push_back({p.x(), p.y()});
            }
            c["track"] = {{"points", std::move(pts)}, {"confidences", r.track->sampled_confidences}};
        }
        cands.push_back(std::move(c));
    }
    j["candidates"] = std::move(cands);
    return j;
}

rerank_result result_from_json(const nlohmann::json& j) {
    try {
        rerank_result out;
        out.query = j.at("query").get<frame_id_t>();
        out.extraction.fallback = j.at("fallback").get<bool>();
        if (j.contains("keypoints")) {
            for (const auto& p : j.at("keypoints")) {
                out.extraction.keypoints.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
            }
        }
        for (const auto& c : j.at("candidates")) {
            ranked_candidate r;
            r.candidate.frame_id = c.at("frame_id").get<frame_id_t>();
            r.candidate.distance = c.at("distance").get<double>();
            const auto& pos = c.at("position");
            r.candidate.position = {pos.at(0).get<double>(), pos.at(1).get<double>(), pos.at(2).get<double>()};
            r.original_rank = c.at("original_rank").get<std::size_t>();
            r.new_rank = c.at("new_rank").get<std::size_t>();
            r.score.s_med = c.at("s_med").get<double>();
            r.score.s_high = c.at("s_high").get<double>();
            r.score.s_cons = c.at("s_cons").get<double>();
            r.score.s_total = c.at("s_total").get<double>();
            r.score.n_keypoints = c.at("n_keypoints").get<std::size_t>();
            r.score.floor = c.at("floor").get<bool>();
            r.failed = c.at("failed").get<bool>();
            if (c.contains("failure")) {
                r.failure = c.at("failure").get<std::string>();
            }
            if (c.contains("track")) {
                track_result tr;
                for (const auto& p : c.at("track").at("points")) {
                    tr.predicted_points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
                }
                tr.sampled_confidences = c.at("track").at("confidences").get<std::vector<double>>();
                r.track = std::move(tr);
            }
            out.ranked.push_back(std::move(r));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw error(error_category::format, std::string("bad report record: ") + e.what());
    }
}

rerank_result passthrough(const frame_id_t query, const index::candidate_list& candidates) {
    rerank_result out;
    out.query = query;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        ranked_candidate r;
        r.candidate = candidates[i];
        r.original_rank = i + 1;
        r.new_rank = i + 1;
        out.ranked.push_back(std::move(r));
    }
    return out;
}

void write_report(const std::filesystem::path& path, const std::vector<rerank_result>& results) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw error(error_category::io, "cannot write report " + path.string());
    }
    for (const auto& r : results) {
        os << to_json(r).dump() << '\n';
    }
}

std::vector<rerank_result> read_report(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw error(error_category::io, "cannot open report " + path.string());
    }
    std::vector<rerank_result> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        try {
            out.push_back(result_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw error(error_category::format, "bad report line in " + path.string() + ": " + e.what());
        }
    }
    return out;
}

} // namespace mpr::rerank
