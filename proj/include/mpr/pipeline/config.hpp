#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "mpr/backbone/synthetic_backbone.hpp"
#include "mpr/depth/densification.hpp"
#include "mpr/eval/compare.hpp"
#include "mpr/pipeline/synth.hpp"
#include "mpr/rerank/tca.hpp"
#include "mpr/retrieval/grm.hpp"
#include "mpr/training/trainer.hpp"

namespace mpr::pipeline {

enum class provider_kind { synthetic, fixture };

provider_kind parse_provider_kind(const std::string& text);
std::string to_string(provider_kind kind);

struct provider_config {
    provider_kind kind = provider_kind::synthetic;
    /// Fixture directory; relative paths resolve against the dataset directory.
    std::string fixture_dir = "fixtures";
    synthetic_backbone_config synthetic;
};

/// Every module's configuration. Unknown keys are rejected when parsing.
struct pipeline_config {
    provider_config provider;
    retrieval::grm_config network;
    training::training_config training;
    depth::densify_config densify;
    rerank::tca_config rerank;
    eval::eval_config evaluation;
    /// Evaluation world.
    world_spec synth = default_eval_world();
    /// Separate world the network is trained on.
    world_spec training_world = default_training_world();

    static world_spec default_eval_world();
    static world_spec default_training_world();

    /// Sets every seed from one value.
    void apply_seed(std::uint64_t seed);
    void validate() const;

    nlohmann::json to_json() const;
    static pipeline_config from_json(const nlohmann::json& j);
    static pipeline_config load(const std::filesystem::path& path);
    sha256_digest hash() const;
};

} // namespace mpr::pipeline
