#include "mpr/eval/compare.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

#include "mpr/core/error.hpp"

namespace mpr::eval {

void eval_config::validate() const {
    if (!(radius_m > 0.0) || retrieval_k < 1) {
        throw error(error_category::config, "evaluation needs radius_m > 0 and retrieval_k >= 1");
    }
    for (const int k : ks) {
        if (k < 1) {
            throw error(error_category::config, "evaluation ranks must be positive");
        }
    }
}

nlohmann::json eval_config::to_json() const {
    return {{"radius_m", radius_m}, {"ks", ks}, {"retrieval_k", retrieval_k}, {"exclusion_window", exclusion_window},
            {"database_sequence", database_sequence}, {"query_sequence", query_sequence}};
}

eval_config eval_config::from_json(const nlohmann::json& j) {
    eval_config c;
    for (const auto& [key, value] : j.items()) {
        if (key == "radius_m") {
            c.radius_m = value.get<double>();
        } else if (key == "ks") {
            c.ks = value.get<std::vector<int>>();
        } else if (key == "retrieval_k") {
            c.retrieval_k = value.get<std::size_t>();
        } else if (key == "exclusion_window") {
            c.exclusion_window = value.get<std::uint64_t>();
        } else if (key == "database_sequence") {
            c.database_sequence = value.get<int>();
        } else if (key == "query_sequence") {
            c.query_sequence = value.get<int>();
        } else {
            throw error(error_category::config, "evaluation: unknown key " + key);
        }
    }
    c.validate();
    return c;
}

nlohmann::json comparison::summary() const {
    return {{"retrieval", retrieval.to_json()},
            {"reranked", reranked.to_json()},
            {"moved_to_first", moved_to_first},
            {"moved_from_first", moved_from_first}};
}

comparison compare_results(const std::vector<query_result>& retrieval, const std::vector<query_result>& reranked,
                           const eval_config& config) {
    if (retrieval.size() != reranked.size()) {
        throw error(error_category::invalid_argument, "arms have different query counts");
    }
    comparison out;
    out.retrieval = average_recall(retrieval, config.radius_m, config.ks);
    out.reranked = average_recall(reranked, config.radius_m, config.ks);
    for (std::size_t i = 0; i < retrieval.size(); ++i) {
        rank_change ch;
        ch.query = retrieval[i].query;
        ch.answerable = retrieval[i].answerable;
        ch.before = first_correct_rank(retrieval[i], config.radius_m);
        ch.after = first_correct_rank(reranked[i], config.radius_m);
        if (ch.answerable && ch.after == 1 && ch.before > 1) {
            ++out.moved_to_first;
        }
        if (ch.answerable && ch.before == 1 && ch.after != 1) {
            ++out.moved_from_first;
        }
        out.changes.push_back(ch);
    }
    return out;
}

comparison compare_pipelines(const std::vector<frame>& queries, const index::descriptor_database& db,
                             retrieval::grm& net, const backbone& provider, const rerank::frame_lookup& lookup,
                             const eval_config& config, const rerank::tca_config& tca,
                             const depth::densify_config& densify, const bool keep_tracks) {
    config.validate();
    std::vector<query_result> base;
    std::vector<query_result> reranked;
    std::vector<rerank::rerank_result> reports;
    for (const auto& q : queries) {
        query_result r;
        r.query = q.id;
        r.position = q.world_pose.position;
        r.answerable = is_answerable(db, q.id, r.position, config.radius_m, config.exclusion_window);
        const global_descriptor d = retrieval::describe(q, provider, net, densify);
        r.candidates = retrieve(db, d.values, q.id, config.retrieval_k, config.exclusion_window);
        rerank::rerank_result rr = rerank::rerank_candidates(q, r.candidates, lookup, provider, tca, keep_tracks);
        query_result after = r;
        after.candidates = rr.order();
        base.push_back(std::move(r));
        reranked.push_back(std::move(after));
        reports.push_back(std::move(rr));
        spdlog::debug("query {} done", q.id);
    }
    comparison out = compare_results(base, reranked, config);
    out.reports = std::move(reports);
    return out;
}

void write_recall_csv(const std::filesystem::path& path, const comparison& c) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw error(error_category::io, "cannot write " + path.string());
    }
    os << "k,recall,arm\n";
    char buf[64];
    const auto rows = [&](const recall_report& r, const char* arm) {
        for (std::size_t i = 0; i < r.ks.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.6f", r.recall[i]);
            os << r.ks[i] << ',' << buf << ',' << arm << '\n';
        }
    };
    rows(c.retrieval, "retrieval");
    rows(c.reranked, "reranked");
}

void write_detail_csv(const std::filesystem::path& path, const comparison& c) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw error(error_category::io, "cannot write " + path.string());
    }
    os << "query,answerable,first_correct_retrieval,first_correct_reranked\n";
    for (const auto& ch : c.changes) {
        os << ch.query << ',' << (ch.answerable ? 1 : 0) << ',' << ch.before << ',' << ch.after << '\n';
    }
}

} // namespace mpr::eval
