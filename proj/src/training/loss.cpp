#include "mpr/training/loss.hpp"

#include "mpr/core/error.hpp"

namespace mpr::training {

namespace {

/// Adds w * d(q, x) to the gradients of q and x.
void add_distance_grad(const Eigen::VectorXd& q, const Eigen::VectorXd& x, const double d, const double w,
                       Eigen::VectorXd& gq, Eigen::VectorXd& gx) {
    if (d == 0.0) {
        return;
    }
    const Eigen::VectorXd u = (q - x) / d;
    gq += w * u;
    gx -= w * u;
}

} // namespace

loss_variant parse_loss_variant(const std::string& text) {
    if (text == "paper") {
        return loss_variant::paper;
    }
    if (text == "conventional") {
        return loss_variant::conventional;
    }
    throw error(error_category::config, "unknown loss variant " + text);
}

std::string to_string(const loss_variant v) { return v == loss_variant::paper ? "paper" : "conventional"; }

loss_value lazy_triplet_loss(const Eigen::VectorXd& query, const std::vector<Eigen::VectorXd>& positives,
                             const std::vector<Eigen::VectorXd>& negatives, const double beta,
                             const loss_variant variant, loss_gradient* grad) {
    if (positives.empty() || negatives.empty()) {
        throw error(error_category::invalid_argument, "loss needs at least one positive and one negative");
    }
    const auto check = [&](const Eigen::VectorXd& v) {
        if (v.size() != query.size()) {
            throw error(error_category::dimension, "descriptor length " + std::to_string(v.size()) +
                                                       " does not match query length " +
                                                       std::to_string(query.size()));
        }
    };
    std::vector<double> dp;
    std::vector<double> dn;
    for (const auto& p : positives) {
        check(p);
        dp.push_back((query - p).norm());
    }
    for (const auto& n : negatives) {
        check(n);
        dn.push_back((query - n).norm());
    }
    if (grad != nullptr) {
        grad->query = Eigen::VectorXd::Zero(query.size());
        grad->positives.assign(positives.size(), Eigen::VectorXd::Zero(query.size()));
        grad->negatives.assign(negatives.size(), Eigen::VectorXd::Zero(query.size()));
    }

    loss_value out;
    if (variant == loss_variant::paper) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < dp.size(); ++i) {
            if (dp[i] > dp[arg]) {
                arg = i;
            }
        }
        const double n_pos = static_cast<double>(positives.size());
        out.positive_term = n_pos * (beta + dp[arg]);
        for (const double d : dn) {
            out.negative_term += d;
        }
        const double raw = out.positive_term - out.negative_term;
        out.value = raw > 0.0 ? raw : 0.0;
        if (grad != nullptr && raw > 0.0) {
            add_distance_grad(query, positives[arg], dp[arg], n_pos, grad->query, grad->positives[arg]);
            for (std::size_t j = 0; j < negatives.size(); ++j) {
                add_distance_grad(query, negatives[j], dn[j], -1.0, grad->query, grad->negatives[j]);
            }
        }
        return out;
    }

    std::size_t best_pos = 0;
    for (std::size_t i = 1; i < dp.size(); ++i) {
        if (dp[i] < dp[best_pos]) {
            best_pos = i;
        }
    }
    std::size_t hard_neg = 0;
    for (std::size_t j = 1; j < dn.size(); ++j) {
        if (dn[j] < dn[hard_neg]) {
            hard_neg = j;
        }
    }
    out.positive_term = beta + dp[best_pos];
    out.negative_term = dn[hard_neg];
    const double raw = out.positive_term - out.negative_term;
    out.value = raw > 0.0 ? raw : 0.0;
    if (grad != nullptr && raw > 0.0) {
        add_distance_grad(query, positives[best_pos], dp[best_pos], 1.0, grad->query, grad->positives[best_pos]);
        add_distance_grad(query, negatives[hard_neg], dn[hard_neg], -1.0, grad->query, grad->negatives[hard_neg]);
    }
    return out;
}

} // namespace mpr::training
