#include "mpr/nn/adam.hpp"

#include <cmath>

#include "mpr/core/error.hpp"

namespace mpr::nn {

adam::adam(const parameter_set& params, adam_config config) : config_(config) {
    for (const auto& e : params) {
        m_.push_back(matrix::Zero(e.value.rows(), e.value.cols()));
        v_.push_back(matrix::Zero(e.value.rows(), e.value.cols()));
    }
}

void adam::step(parameter_set& params) {
    if (params.size() != m_.size()) {
        throw error(error_category::invalid_argument, "adam: parameter set changed shape");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& e = params.at(i);
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * e.grad;
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * e.grad.cwiseAbs2();
        e.value.array() -= config_.learning_rate * (m_[i].array() / c1) /
                           ((v_[i].array() / c2).sqrt() + config_.epsilon);
    }
}

} // namespace mpr::nn
