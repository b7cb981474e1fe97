#include "mpr/eval/recall.hpp"

#include <algorithm>

#include "mpr/core/error.hpp"

namespace mpr::eval {

namespace {

bool excluded(const frame_id_t a, const frame_id_t b, const std::uint64_t window) {
    if (window == 0) {
        return false;
    }
    return (a > b ? a - b : b - a) <= window;
}

} // namespace

double recall_report::at(const int k) const {
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] == k) {
            return recall[i];
        }
    }
    throw error(error_category::invalid_argument, "recall at " + std::to_string(k) + " was not computed");
}

nlohmann::json recall_report::to_json() const {
    nlohmann::json r = nlohmann::json::object();
    for (std::size_t i = 0; i < ks.size(); ++i) {
        r[std::to_string(ks[i])] = recall[i];
    }
    return {{"recall", r}, {"query_count", query_count}, {"excluded", excluded}, {"radius_m", radius_m}};
}

std::size_t first_correct_rank(const query_result& result, const double radius_m) {
    for (std::size_t i = 0; i < result.candidates.size(); ++i) {
        if ((result.candidates[i].position - result.position).norm() <= radius_m) {
            return i + 1;
        }
    }
    return 0;
}

recall_report average_recall(const std::vector<query_result>& results, const double radius_m,
                             const std::vector<int>& ks) {
    recall_report out;
    out.radius_m = radius_m;
    out.ks = ks;
    std::sort(out.ks.begin(), out.ks.end());
    out.ks.erase(std::unique(out.ks.begin(), out.ks.end()), out.ks.end());
    if (!out.ks.empty() && out.ks.front() < 1) {
        throw error(error_category::invalid_argument, "recall ranks must be positive");
    }
    out.successes.assign(out.ks.size(), 0);
    for (const auto& r : results) {
        if (!r.answerable) {
            ++out.excluded;
            continue;
        }
        ++out.query_count;
        const std::size_t rank = first_correct_rank(r, radius_m);
        for (std::size_t i = 0; i < out.ks.size(); ++i) {
            if (rank != 0 && rank <= static_cast<std::size_t>(out.ks[i])) {
                ++out.successes[i];
            }
        }
    }
    for (const std::size_t s : out.successes) {
        out.recall.push_back(out.query_count == 0 ? 0.0
                                                  : static_cast<double>(s) / static_cast<double>(out.query_count));
    }
    return out;
}

bool is_answerable(const index::descriptor_database& db, const frame_id_t query, const Eigen::Vector3d& position,
                   const double radius_m, const std::uint64_t exclusion_window) {
    for (std::size_t i = 0; i < db.size(); ++i) {
        if (!excluded(db.frame_id(i), query, exclusion_window) && (db.position(i) - position).norm() <= radius_m) {
            return true;
        }
    }
    return false;
}

index::candidate_list retrieve(const index::descriptor_database& db, const Eigen::VectorXd& probe,
                               const frame_id_t query, const std::size_t k, const std::uint64_t exclusion_window) {
    if (exclusion_window == 0) {
        return db.query(probe, k);
    }
    index::candidate_list all = db.query(probe, db.size());
    index::candidate_list out;
    for (const auto& c : all) {
        if (out.size() == k) {
            break;
        }
        if (!excluded(c.frame_id, query, exclusion_window)) {
            out.push_back(c);
        }
    }
    return out;
}

} // namespace mpr::eval
