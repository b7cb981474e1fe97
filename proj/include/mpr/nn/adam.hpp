#pragma once

#include <cstdint>
#include <vector>

#include "mpr/nn/parameters.hpp"

namespace mpr::nn {

struct adam_config {
    double learning_rate = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class adam {
public:
    explicit adam(const parameter_set& params, adam_config config = {});

    /// One update from the gradients currently stored in params.
    void step(parameter_set& params);

    std::uint64_t steps() const noexcept { return t_; }
    const adam_config& config() const noexcept { return config_; }

private:
    adam_config config_;
    std::vector<matrix> m_;
    std::vector<matrix> v_;
    std::uint64_t t_ = 0;
};

} // namespace mpr::nn
