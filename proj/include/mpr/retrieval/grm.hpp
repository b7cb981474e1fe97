#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "mpr/backbone/backbone.hpp"
#include "mpr/depth/densification.hpp"
#include "mpr/nn/tape.hpp"

namespace mpr::retrieval {

using nn::matrix;

struct grm_config {
    int embed_channels = 32;
    int token_width = 64;
    int heads = 4;
    int clusters = 8;
    int mlp_hidden = 256;
    int descriptor_dim = 256;
    int patch_stride = 16;
    /// Adds fixed sinusoidal encodings to the tokens before attention.
    bool positional_encoding = false;
    /// Metric depth is divided by this before the lidar convs.
    double depth_scale_m = 20.0;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static grm_config from_json(const nlohmann::json& j);
    sha256_digest hash() const;
};

enum class modality { vision, lidar };

struct modality_tokens {
    /// T x E
    matrix tokens;
    modality tag = modality::vision;
};

struct modality_descriptor {
    Eigen::VectorXd values;
    modality tag = modality::vision;
};

/// Network inputs for one frame. The backbone is frozen, so these can be
/// computed once and reused across epochs.
struct grm_input {
    /// C x (H' * W')
    matrix embedding;
    int token_rows = 0;
    int token_cols = 0;
    /// Metric depth, 1 x (H * W) in row-major pixel order.
    matrix depth;
    int height = 0;
    int width = 0;
};

grm_input make_input(const embedding_output& embedded, const depth::dense_metric_depth& depth);

/// Runs the backbone and the depth densification for one frame.
grm_input prepare_input(const frame& f, const backbone& provider, const depth::densify_config& densify = {});

struct attention_trace {
    /// One T x T weight matrix per head.
    std::vector<matrix> weights;
};

struct netvlad_trace {
    /// T x K soft assignments.
    matrix assignment;
    /// K x E residual sums before intra-normalization.
    matrix vlad_raw;
    matrix vlad_normalized;
};

class grm {
public:
    explicit grm(grm_config config = {});

    const grm_config& config() const noexcept { return config_; }
    nn::parameter_set& params() noexcept { return params_; }
    const nn::parameter_set& params() const noexcept { return params_; }

    /// T x E tokens from the embedding grid.
    nn::var vision_tokens(nn::tape& t, const matrix& embedding, int token_rows, int token_cols);
    /// T x E tokens from a 1 x (H * W) metric depth map.
    nn::var lidar_tokens(nn::tape& t, const matrix& depth, int height, int width);
    /// Queries and keys from self, values from other; `block` is "vision" or "lidar".
    nn::var inter_attend(nn::tape& t, nn::var self, nn::var other, const std::string& block,
                         attention_trace* trace = nullptr);
    nn::var intra_attend(nn::tape& t, nn::var tokens, const std::string& block, attention_trace* trace = nullptr);
    /// 1 x D unit vector.
    nn::var aggregate(nn::tape& t, nn::var tokens, const std::string& block, netvlad_trace* trace = nullptr);
    /// 1 x 2D unit vector.
    nn::var describe(nn::tape& t, const grm_input& input);

    Eigen::VectorXd describe(const grm_input& input);

    std::size_t parameter_count() const { return params_.scalar_count(); }

private:
    nn::var attention(nn::tape& t, nn::var queries_from, nn::var values_from, const std::string& prefix,
                      attention_trace* trace);
    nn::var conv3x3(nn::tape& t, nn::var x, const std::string& name, int channels, int height, int width,
                    int stride);
    nn::var positional(nn::tape& t, nn::var tokens, int rows, int cols);
    int lidar_layers() const;

    grm_config config_;
    nn::parameter_set params_;
};

modality_tokens extract_vision_tokens(const visual_embedding& emb, grm& net);
modality_tokens extract_lidar_tokens(const depth::dense_metric_depth& depth, grm& net);
modality_tokens inter_attend(const modality_tokens& self, const modality_tokens& other, grm& net,
                             attention_trace* trace = nullptr);
modality_tokens intra_attend(const modality_tokens& tokens, grm& net, attention_trace* trace = nullptr);
modality_descriptor aggregate_netvlad(const modality_tokens& tokens, grm& net, netvlad_trace* trace = nullptr);
global_descriptor describe(const frame& f, const backbone& provider, grm& net,
                           const depth::densify_config& densify = {});

} // namespace mpr::retrieval
