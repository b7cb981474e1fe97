#include "mpr/rerank/tca.hpp"

#include <cmath>

#include "mpr/core/error.hpp"

namespace mpr::rerank {

namespace {

double consistency(const grid_d& map, const double s_med, const tca_config& config) {
    const double n = static_cast<double>(map.size());
    const double mean = map.sum() / n;
    const double var = (map.array() - mean).square().sum() / n;
    if (config.cons_requires_floor && s_med < 0.05) {
        return 0.0;
    }
    return std::tanh(config.alpha / (std::sqrt(var) + config.epsilon));
}

double map_median(const grid_d& map) { return median(std::vector<double>(map.data(), map.data() + map.size())); }

} // namespace

void tca_config::validate() const {
    const auto fail = [](const std::string& what) { throw error(error_category::config, "tca: " + what); };
    if (!(tau > 0.0 && tau < 1.0)) {
        fail("tau must lie in (0, 1)");
    }
    if (!(alpha > 0.0) || !(epsilon > 0.0)) {
        fail("alpha and epsilon must be positive");
    }
    if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0 || std::abs(lambda1 + lambda2 + lambda3 - 1.0) > 1e-9) {
        fail("weights must be non-negative and sum to 1");
    }
    if (!(mask_area_fraction >= 0.0 && mask_area_fraction <= 1.0)) {
        fail("mask_area_fraction must lie in [0, 1]");
    }
    if (max_keypoints < 1 || fast_threshold < 0) {
        fail("max_keypoints must be positive");
    }
}

nlohmann::json tca_config::to_json() const {
    return {{"tau", tau},
            {"alpha", alpha},
            {"epsilon", epsilon},
            {"lambda", {lambda1, lambda2, lambda3}},
            {"mask_area_fraction", mask_area_fraction},
            {"max_keypoints", max_keypoints},
            {"fast_threshold", fast_threshold},
            {"cons_requires_floor", cons_requires_floor}};
}

tca_config tca_config::from_json(const nlohmann::json& j) {
    tca_config c;
    for (const auto& [key, value] : j.items()) {
        if (key == "tau") {
            c.tau = value.get<double>();
        } else if (key == "alpha") {
            c.alpha = value.get<double>();
        } else if (key == "epsilon") {
            c.epsilon = value.get<double>();
        } else if (key == "lambda") {
            const auto l = value.get<std::vector<double>>();
            if (l.size() != 3) {
                throw error(error_category::config, "tca: lambda needs three weights");
            }
            c.lambda1 = l[0];
            c.lambda2 = l[1];
            c.lambda3 = l[2];
        } else if (key == "mask_area_fraction") {
            c.mask_area_fraction = value.get<double>();
        } else if (key == "max_keypoints") {
            c.max_keypoints = value.get<int>();
        } else if (key == "fast_threshold") {
            c.fast_threshold = value.get<int>();
        } else if (key == "cons_requires_floor") {
            c.cons_requires_floor = value.get<bool>();
        } else {
            throw error(error_category::config, "tca: unknown key " + key);
        }
    }
    c.validate();
    return c;
}

rerank_score tca_score(const std::vector<double>& confidences, const grid_d& map, const tca_config& config) {
    if (confidences.empty()) {
        throw error(error_category::invalid_argument, "tca needs at least one sampled confidence");
    }
    if (map.size() == 0) {
        throw error(error_category::invalid_argument, "tca needs a non-empty confidence map");
    }
    for (const double u : confidences) {
        if (!(u >= 0.0 && u <= 1.0)) {
            throw error(error_category::invalid_argument, "sampled confidence outside [0, 1]");
        }
    }
    if (!map.allFinite() || map.minCoeff() < 0.0 || map.maxCoeff() > 1.0) {
        throw error(error_category::invalid_argument, "confidence map values outside [0, 1]");
    }
    rerank_score s;
    s.n_keypoints = confidences.size();
    s.s_med = map_median(map);
    std::size_t high = 0;
    for (const double u : confidences) {
        if (u > config.tau) {
            ++high;
        }
    }
    s.s_high = static_cast<double>(high) / static_cast<double>(confidences.size());
    s.s_cons = consistency(map, s.s_med, config);
    s.s_total = config.lambda1 * s.s_med + config.lambda2 * s.s_high + config.lambda3 * s.s_cons;
    return s;
}

rerank_score floor_score(const grid_d* map, const tca_config& config) {
    rerank_score s;
    s.floor = true;
    if (map != nullptr && map->size() > 0) {
        s.s_cons = consistency(*map, map_median(*map), config);
    }
    s.s_total = config.lambda3 * s.s_cons;
    return s;
}

} // namespace mpr::rerank
