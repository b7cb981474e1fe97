#pragma once

#include <cstdint>
#include <vector>

#include "mpr/core/types.hpp"

namespace mpr::training {

struct mining_config {
    double positive_m = 9.0;
    double negative_m = 18.0;
    int n_pos = 2;
    int n_neg = 6;

    void validate() const;
};

struct training_tuple {
    frame_id_t query = 0;
    std::vector<frame_id_t> positives;
    std::vector<frame_id_t> negatives;

    bool operator==(const training_tuple&) const = default;
};

struct located_frame {
    frame_id_t id = 0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

struct mining_result {
    std::vector<training_tuple> tuples;
    /// Queries without enough positives or negatives.
    std::size_t skipped = 0;
};

/// Positives lie within positive_m of the query (inclusive), negatives
/// strictly beyond negative_m. Members are drawn uniformly without replacement.
mining_result mine_tuples(const std::vector<located_frame>& frames, const mining_config& config, std::uint64_t seed);
mining_result mine_tuples(const std::vector<frame>& frames, const mining_config& config, std::uint64_t seed);

} // namespace mpr::training
