#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace mpr::training {

enum class loss_variant {
    /// One hinge over N_pos * (beta + max positive distance) minus the sum of negative distances.
    paper,
    /// Hardest negative against the closest positive, hinged once.
    conventional,
};

loss_variant parse_loss_variant(const std::string& text);
std::string to_string(loss_variant v);

struct loss_value {
    double value = 0.0;
    /// paper: N_pos * (beta + max d_pos); conventional: beta + min d_pos.
    double positive_term = 0.0;
    /// paper: sum of d_neg; conventional: min d_neg.
    double negative_term = 0.0;
};

struct loss_gradient {
    Eigen::VectorXd query;
    std::vector<Eigen::VectorXd> positives;
    std::vector<Eigen::VectorXd> negatives;
};

/// Euclidean distance based lazy triplet loss. Fills `grad` with the
/// (sub)gradient when given; distance-zero pairs and the clamped branch
/// contribute zero, max ties go to the lowest index.
loss_value lazy_triplet_loss(const Eigen::VectorXd& query, const std::vector<Eigen::VectorXd>& positives,
                             const std::vector<Eigen::VectorXd>& negatives, double beta = 0.5,
                             loss_variant variant = loss_variant::paper, loss_gradient* grad = nullptr);

} // namespace mpr::training
