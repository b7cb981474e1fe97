#include "mpr/pipeline/config.hpp"

#include <fstream>

#include "mpr/core/error.hpp"

namespace mpr::pipeline {

namespace {

nlohmann::json synthetic_to_json(const synthetic_backbone_config& c) {
    return {{"seed", c.seed},
            {"patch_stride", c.patch_stride},
            {"embed_channels", c.embed_channels},
            {"pose_sensitivity", c.pose_sensitivity},
            {"embedding_noise", c.embedding_noise},
            {"far_depth_m", c.far_depth_m},
            {"confidence_distance_scale_m", c.confidence_distance_scale_m},
            {"confidence_noise", c.confidence_noise}};
}

synthetic_backbone_config synthetic_from_json(const nlohmann::json& j) {
    synthetic_backbone_config c;
    for (const auto& [key, value] : j.items()) {
        if (key == "seed") {
            c.seed = value.get<std::uint64_t>();
        } else if (key == "patch_stride") {
            c.patch_stride = value.get<int>();
        } else if (key == "embed_channels") {
            c.embed_channels = value.get<int>();
        } else if (key == "pose_sensitivity") {
            c.pose_sensitivity = value.get<double>();
        } else if (key == "embedding_noise") {
            c.embedding_noise = value.get<double>();
        } else if (key == "far_depth_m") {
            c.far_depth_m = value.get<double>();
        } else if (key == "confidence_distance_scale_m") {
            c.confidence_distance_scale_m = value.get<double>();
        } else if (key == "confidence_noise") {
            c.confidence_noise = value.get<double>();
        } else {
            throw error(error_category::config, "provider.synthetic: unknown key " + key);
        }
    }
    return c;
}

} // namespace

provider_kind parse_provider_kind(const std::string& text) {
    if (text == "synthetic") {
        return provider_kind::synthetic;
    }
    if (text == "fixture") {
        return provider_kind::fixture;
    }
    throw error(error_category::config, "unknown provider " + text + " (expected synthetic or fixture)");
}

std::string to_string(const provider_kind kind) { return kind == provider_kind::synthetic ? "synthetic" : "fixture"; }

world_spec pipeline_config::default_eval_world() { return {}; }

world_spec pipeline_config::default_training_world() {
    world_spec w;
    w.places = 50;
    w.traversals = 3;
    w.seed = 1;
    return w;
}

void pipeline_config::apply_seed(const std::uint64_t seed) {
    provider.synthetic.seed = seed;
    network.seed = seed;
    training.seed = seed;
    synth.seed = seed;
    training_world.seed = seed + 1;
}

void pipeline_config::validate() const {
    network.validate();
    training.validate();
    rerank.validate();
    evaluation.validate();
    synth.validate(training.mining.negative_m);
    training_world.validate(training.mining.negative_m);
    if (provider.synthetic.patch_stride != network.patch_stride ||
        provider.synthetic.embed_channels != network.embed_channels) {
        throw error(error_category::config, "provider patch_stride and embed_channels must match the network");
    }
}

nlohmann::json pipeline_config::to_json() const {
    return {{"provider",
             {{"kind", to_string(provider.kind)},
              {"fixture_dir", provider.fixture_dir},
              {"synthetic", synthetic_to_json(provider.synthetic)}}},
            {"network", network.to_json()},
            {"training", training.to_json()},
            {"densify", {{"trimmed_refit", densify.trimmed_refit}, {"min_depth_m", densify.min_depth_m}}},
            {"rerank", rerank.to_json()},
            {"evaluation", evaluation.to_json()},
            {"synth", synth.to_json()},
            {"training_world", training_world.to_json()}};
}

pipeline_config pipeline_config::from_json(const nlohmann::json& overrides) {
    pipeline_config c;
    try {
        if (!overrides.is_object()) {
            throw error(error_category::config, "config must be a JSON object");
        }
        nlohmann::json j = c.to_json();
        j.merge_patch(overrides);
        for (const auto& [key, value] : j.items()) {
            if (key == "provider") {
                for (const auto& [k, v] : value.items()) {
                    if (k == "kind") {
                        c.provider.kind = parse_provider_kind(v.get<std::string>());
                    } else if (k == "fixture_dir") {
                        c.provider.fixture_dir = v.get<std::string>();
                    } else if (k == "synthetic") {
                        c.provider.synthetic = synthetic_from_json(v);
                    } else {
                        throw error(error_category::config, "provider: unknown key " + k);
                    }
                }
            } else if (key == "network") {
                c.network = retrieval::grm_config::from_json(value);
            } else if (key == "training") {
                c.training = training::training_config::from_json(value);
            } else if (key == "densify") {
                for (const auto& [k, v] : value.items()) {
                    if (k == "trimmed_refit") {
                        c.densify.trimmed_refit = v.get<bool>();
                    } else if (k == "min_depth_m") {
                        c.densify.min_depth_m = v.get<double>();
                    } else {
                        throw error(error_category::config, "densify: unknown key " + k);
                    }
                }
            } else if (key == "rerank") {
                c.rerank = rerank::tca_config::from_json(value);
            } else if (key == "evaluation") {
                c.evaluation = eval::eval_config::from_json(value);
            } else if (key == "synth") {
                c.synth = world_spec::from_json(value);
            } else if (key == "training_world") {
                c.training_world = world_spec::from_json(value);
            } else {
                throw error(error_category::config, "unknown key " + key);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw error(error_category::config, std::string("bad config value: ") + e.what());
    }
    c.validate();
    return c;
}

pipeline_config pipeline_config::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw error(error_category::io, "cannot open config " + path.string());
    }
    try {
        return from_json(nlohmann::json::parse(is));
    } catch (const nlohmann::json::parse_error& e) {
        throw error(error_category::config, "config " + path.string() + " is not valid JSON: " + e.what());
    }
}

sha256_digest pipeline_config::hash() const { return sha256(to_json().dump()); }

} // namespace mpr::pipeline
