#pragma once

#include <vector>

#include "json.hpp"

#include "mpr/index/database.hpp"

namespace mpr::eval {

struct recall_report {
    std::vector<int> ks;
    std::vector<double> recall;
    std::vector<std::size_t> successes;
    /// Answerable queries counted in the denominator.
    std::size_t query_count = 0;
    /// Queries without any database frame inside the radius.
    std::size_t excluded = 0;
    double radius_m = 9.0;

    double at(int k) const;
    nlohmann::json to_json() const;
};

struct query_result {
    frame_id_t query = 0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    index::candidate_list candidates;
    bool answerable = true;
};

/// A query succeeds at k when one of its first k candidates lies within
/// radius_m (inclusive) of the query. Unanswerable queries are left out.
recall_report average_recall(const std::vector<query_result>& results, double radius_m = 9.0,
                             const std::vector<int>& ks = {1, 5, 10, 20});

/// 1-based rank of the first candidate within the radius, 0 when none.
std::size_t first_correct_rank(const query_result& result, double radius_m);

/// Whether a database frame outside the exclusion window lies within the radius.
bool is_answerable(const index::descriptor_database& db, frame_id_t query, const Eigen::Vector3d& position,
                   double radius_m, std::uint64_t exclusion_window = 0);

/// Nearest k after dropping entries whose frame id is within the exclusion
/// window of the query id (window 0 drops nothing).
index::candidate_list retrieve(const index::descriptor_database& db, const Eigen::VectorXd& probe, frame_id_t query,
                               std::size_t k, std::uint64_t exclusion_window = 0);

} // namespace mpr::eval
