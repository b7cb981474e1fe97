#include "mpr/retrieval/grm.hpp"

#include <bit>
#include <cmath>

#include "mpr/core/error.hpp"
#include "mpr/core/random.hpp"

namespace mpr::retrieval {

namespace {

const char* block_of(const modality tag) { return tag == modality::vision ? "vision" : "lidar"; }

} // namespace

void grm_config::validate() const {
    const auto fail = [](const std::string& what) { throw error(error_category::config, "grm: " + what); };
    if (embed_channels < 1 || token_width < 1 || heads < 1 || clusters < 1 || mlp_hidden < 1 ||
        descriptor_dim < 1) {
        fail("all widths must be positive");
    }
    if (token_width % heads != 0) {
        fail("token_width must be divisible by heads");
    }
    if (patch_stride < 2 || !std::has_single_bit(static_cast<unsigned>(patch_stride))) {
        fail("patch_stride must be a power of two >= 2");
    }
    if (!(depth_scale_m > 0.0)) {
        fail("depth_scale_m must be positive");
    }
}

nlohmann::json grm_config::to_json() const {
    return {{"embed_channels", embed_channels}, {"token_width", token_width},
            {"heads", heads},                   {"clusters", clusters},
            {"mlp_hidden", mlp_hidden},         {"descriptor_dim", descriptor_dim},
            {"patch_stride", patch_stride},     {"positional_encoding", positional_encoding},
            {"depth_scale_m", depth_scale_m},   {"seed", seed}};
}

grm_config grm_config::from_json(const nlohmann::json& j) {
    grm_config c;
    for (const auto& [key, value] : j.items()) {
        if (key == "embed_channels") {
            c.embed_channels = value.get<int>();
        } else if (key == "token_width") {
            c.token_width = value.get<int>();
        } else if (key == "heads") {
            c.heads = value.get<int>();
        } else if (key == "clusters") {
            c.clusters = value.get<int>();
        } else if (key == "mlp_hidden") {
            c.mlp_hidden = value.get<int>();
        } else if (key == "descriptor_dim") {
            c.descriptor_dim = value.get<int>();
        } else if (key == "patch_stride") {
            c.patch_stride = value.get<int>();
        } else if (key == "positional_encoding") {
            c.positional_encoding = value.get<bool>();
        } else if (key == "depth_scale_m") {
            c.depth_scale_m = value.get<double>();
        } else if (key == "seed") {
            c.seed = value.get<std::uint64_t>();
        } else {
            throw error(error_category::config, "grm: unknown key " + key);
        }
    }
    c.validate();
    return c;
}

sha256_digest grm_config::hash() const { return sha256(to_json().dump()); }

grm_input make_input(const embedding_output& embedded, const depth::dense_metric_depth& depth) {
    grm_input in;
    in.embedding = embedded.embedding.tokens;
    in.token_rows = embedded.embedding.token_rows;
    in.token_cols = embedded.embedding.token_cols;
    in.height = static_cast<int>(depth.values.rows());
    in.width = static_cast<int>(depth.values.cols());
    in.depth = Eigen::Map<const matrix>(depth.values.data(), 1, depth.values.size());
    return in;
}

grm_input prepare_input(const frame& f, const backbone& provider, const depth::densify_config& densify) {
    const embedding_output embedded = provider.embed(image_view::of(f));
    const auto metric = depth::estimate_metric_depth(embedded.relative_depth, f.cloud, f.calib, densify);
    return make_input(embedded, metric);
}

grm::grm(grm_config config) : config_(config) {
    config_.validate();
    rng gen(mix64(config_.seed, 0x6E7));
    const auto weight = [&](const std::string& name, const int rows, const int cols) {
        matrix w(rows, cols);
        const double s = 1.0 / std::sqrt(static_cast<double>(cols));
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            w.data()[i] = s * gen.normal();
        }
        params_.add(name, std::move(w));
    };
    const auto zeros = [&](const std::string& name, const int rows, const int cols) {
        params_.add(name, matrix::Zero(rows, cols));
    };
    const int c = config_.embed_channels;
    const int e = config_.token_width;

    weight("vision.conv1.w", e, c * 9);
    zeros("vision.conv1.b", e, 1);
    weight("vision.conv2.w", e, e * 9);
    zeros("vision.conv2.b", e, 1);

    int in_channels = 1;
    for (int i = 0; i < lidar_layers(); ++i) {
        const int out_channels = i + 1 == lidar_layers() ? e : std::min(e, 8 << i);
        weight("lidar.conv" + std::to_string(i + 1) + ".w", out_channels, in_channels * 9);
        zeros("lidar.conv" + std::to_string(i + 1) + ".b", out_channels, 1);
        in_channels = out_channels;
    }

    const auto attention_params = [&](const std::string& prefix) {
        for (const char* m : {"q", "k", "v", "o"}) {
            weight(prefix + ".w" + m, e, e);
            zeros(prefix + ".b" + m, 1, e);
        }
    };
    const auto layer_norm = [&](const std::string& prefix) {
        params_.add(prefix + ".g", matrix::Ones(1, e));
        zeros(prefix + ".b", 1, e);
    };
    for (const std::string block : {"vision", "lidar"}) {
        layer_norm("inter." + block + ".ln_q");
        layer_norm("inter." + block + ".ln_v");
        attention_params("inter." + block);
    }
    for (const std::string block : {"vision", "lidar"}) {
        layer_norm("intra." + block + ".ln");
        attention_params("intra." + block);
    }
    for (const std::string block : {"vision", "lidar"}) {
        const std::string p = "vlad." + block;
        weight(p + ".assign.w", config_.clusters, e);
        zeros(p + ".assign.b", 1, config_.clusters);
        weight(p + ".centers", config_.clusters, e);
        weight(p + ".mlp1.w", config_.mlp_hidden, config_.clusters * e);
        zeros(p + ".mlp1.b", 1, config_.mlp_hidden);
        weight(p + ".mlp2.w", config_.descriptor_dim, config_.mlp_hidden);
        zeros(p + ".mlp2.b", 1, config_.descriptor_dim);
    }
}

int grm::lidar_layers() const { return std::countr_zero(static_cast<unsigned>(config_.patch_stride)); }

nn::var grm::conv3x3(nn::tape& t, const nn::var x, const std::string& name, const int channels, const int height,
                     const int width, const int stride) {
    const nn::var cols = nn::im2col3x3(x, channels, height, width, stride);
    const nn::var y = nn::matmul(t.parameter(params_, name + ".w"), cols);
    return nn::gelu(nn::add_col(y, t.parameter(params_, name + ".b")));
}

nn::var grm::vision_tokens(nn::tape& t, const matrix& embedding, const int token_rows, const int token_cols) {
    if (embedding.rows() != config_.embed_channels ||
        embedding.cols() != static_cast<Eigen::Index>(token_rows) * token_cols || token_rows < 1 || token_cols < 1) {
        throw error(error_category::dimension,
                    "vision tokens: embedding is " + std::to_string(embedding.rows()) + "x" +
                        std::to_string(embedding.cols()) + ", expected " + std::to_string(config_.embed_channels) +
                        "x" + std::to_string(token_rows * token_cols));
    }
    nn::var x = t.constant(embedding);
    x = conv3x3(t, x, "vision.conv1", config_.embed_channels, token_rows, token_cols, 1);
    x = conv3x3(t, x, "vision.conv2", config_.token_width, token_rows, token_cols, 1);
    return nn::transpose(x);
}

nn::var grm::lidar_tokens(nn::tape& t, const matrix& depth, const int height, const int width) {
    if (depth.rows() != 1 || depth.cols() != static_cast<Eigen::Index>(height) * width || height < 1 || width < 1) {
        throw error(error_category::dimension, "lidar tokens: depth map shape mismatch");
    }
    nn::var x = t.constant(depth / config_.depth_scale_m);
    int channels = 1;
    int h = height;
    int w = width;
    for (int i = 0; i < lidar_layers(); ++i) {
        const std::string name = "lidar.conv" + std::to_string(i + 1);
        x = conv3x3(t, x, name, channels, h, w, 2);
        channels = static_cast<int>(params_.value(name + ".w").rows());
        h = static_cast<int>(nn::conv_out_extent(h, 2));
        w = static_cast<int>(nn::conv_out_extent(w, 2));
    }
    return nn::transpose(x);
}

nn::var grm::attention(nn::tape& t, const nn::var queries_from, const nn::var values_from, const std::string& prefix,
                       attention_trace* trace) {
    const auto p = [&](const std::string& n) { return t.parameter(params_, prefix + "." + n); };
    const nn::var q = nn::add_row(nn::matmul_bt(queries_from, p("wq")), p("bq"));
    const nn::var k = nn::add_row(nn::matmul_bt(queries_from, p("wk")), p("bk"));
    const nn::var v = nn::add_row(nn::matmul_bt(values_from, p("wv")), p("bv"));
    const int dh = config_.token_width / config_.heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<nn::var> heads;
    for (int h = 0; h < config_.heads; ++h) {
        const nn::var qh = nn::col_block(q, h * dh, dh);
        const nn::var kh = nn::col_block(k, h * dh, dh);
        const nn::var vh = nn::col_block(v, h * dh, dh);
        const nn::var weights = nn::softmax_rows(nn::scale(nn::matmul_bt(qh, kh), inv_sqrt));
        if (trace != nullptr) {
            trace->weights.push_back(weights.value());
        }
        heads.push_back(nn::matmul(weights, vh));
    }
    return nn::add_row(nn::matmul_bt(nn::hcat(heads), p("wo")), p("bo"));
}

nn::var grm::inter_attend(nn::tape& t, const nn::var self, const nn::var other, const std::string& block,
                          attention_trace* trace) {
    if (self.rows() != other.rows() || self.cols() != other.cols() || self.cols() != config_.token_width) {
        throw error(error_category::dimension, "inter attention needs equal token counts, got " +
                                                   std::to_string(self.rows()) + " and " +
                                                   std::to_string(other.rows()));
    }
    const std::string p = "inter." + block;
    const nn::var qk = nn::layer_norm_rows(self, t.parameter(params_, p + ".ln_q.g"), t.parameter(params_, p + ".ln_q.b"));
    const nn::var vs =
        nn::layer_norm_rows(other, t.parameter(params_, p + ".ln_v.g"), t.parameter(params_, p + ".ln_v.b"));
    return nn::add(self, attention(t, qk, vs, p, trace));
}

nn::var grm::intra_attend(nn::tape& t, const nn::var tokens, const std::string& block, attention_trace* trace) {
    if (tokens.cols() != config_.token_width) {
        throw error(error_category::dimension, "intra attention token width mismatch");
    }
    const std::string p = "intra." + block;
    const nn::var x = nn::layer_norm_rows(tokens, t.parameter(params_, p + ".ln.g"), t.parameter(params_, p + ".ln.b"));
    return nn::add(tokens, attention(t, x, x, p, trace));
}

nn::var grm::aggregate(nn::tape& t, const nn::var tokens, const std::string& block, netvlad_trace* trace) {
    if (tokens.cols() != config_.token_width) {
        throw error(error_category::dimension, "netvlad token width mismatch");
    }
    const std::string p = "vlad." + block;
    const auto param = [&](const std::string& n) { return t.parameter(params_, p + "." + n); };
    const nn::var assignment = nn::softmax_rows(nn::add_row(nn::matmul_bt(tokens, param("assign.w")), param("assign.b")));
    const nn::var weighted = nn::matmul(nn::transpose(assignment), tokens);
    const nn::var vlad = nn::sub(weighted, nn::scale_rows(param("centers"), nn::col_sums(assignment)));
    const nn::var normalized = nn::l2_normalize_rows(vlad);
    if (trace != nullptr) {
        trace->assignment = assignment.value();
        trace->vlad_raw = vlad.value();
        trace->vlad_normalized = normalized.value();
    }
    const nn::var hidden = nn::gelu(nn::add_row(nn::matmul_bt(nn::flatten(normalized), param("mlp1.w")), param("mlp1.b")));
    const nn::var out = nn::add_row(nn::matmul_bt(hidden, param("mlp2.w")), param("mlp2.b"));
    return nn::l2_normalize_rows(out);
}

nn::var grm::positional(nn::tape& t, const nn::var tokens, const int rows, const int cols) {
    const int e = config_.token_width;
    matrix pe(static_cast<Eigen::Index>(rows) * cols, e);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            for (int i = 0; i < e; ++i) {
                const int half = e / 2;
                const bool use_row = i < half;
                const int j = use_row ? i : i - half;
                const double pos = use_row ? r : c;
                const double freq = std::pow(10000.0, -2.0 * (j / 2) / std::max(1, half));
                pe(r * cols + c, i) = j % 2 == 0 ? std::sin(pos * freq) : std::cos(pos * freq);
            }
        }
    }
    return nn::add(tokens, t.constant(std::move(pe)));
}

nn::var grm::describe(nn::tape& t, const grm_input& input) {
    nn::var fv = vision_tokens(t, input.embedding, input.token_rows, input.token_cols);
    nn::var fl = lidar_tokens(t, input.depth, input.height, input.width);
    if (fv.rows() != fl.rows()) {
        throw error(error_category::dimension, "vision grid has " + std::to_string(fv.rows()) +
                                                   " tokens, lidar grid has " + std::to_string(fl.rows()));
    }
    if (config_.positional_encoding) {
        fv = positional(t, fv, input.token_rows, input.token_cols);
        fl = positional(t, fl, input.token_rows, input.token_cols);
    }
    const nn::var iv = inter_attend(t, fv, fl, "vision");
    const nn::var il = inter_attend(t, fl, fv, "lidar");
    const nn::var dv = aggregate(t, intra_attend(t, iv, "vision"), "vision");
    const nn::var dl = aggregate(t, intra_attend(t, il, "lidar"), "lidar");
    return nn::l2_normalize_rows(nn::hcat({dv, dl}));
}

Eigen::VectorXd grm::describe(const grm_input& input) {
    nn::tape t;
    return describe(t, input).value().row(0).transpose();
}

modality_tokens extract_vision_tokens(const visual_embedding& emb, grm& net) {
    nn::tape t;
    return {net.vision_tokens(t, emb.tokens, emb.token_rows, emb.token_cols).value(), modality::vision};
}

modality_tokens extract_lidar_tokens(const depth::dense_metric_depth& depth, grm& net) {
    nn::tape t;
    const matrix flat = Eigen::Map<const matrix>(depth.values.data(), 1, depth.values.size());
    return {net.lidar_tokens(t, flat, static_cast<int>(depth.values.rows()), static_cast<int>(depth.values.cols()))
                .value(),
            modality::lidar};
}

modality_tokens inter_attend(const modality_tokens& self, const modality_tokens& other, grm& net,
                             attention_trace* trace) {
    nn::tape t;
    return {net.inter_attend(t, t.constant(self.tokens), t.constant(other.tokens), block_of(self.tag), trace).value(),
            self.tag};
}

modality_tokens intra_attend(const modality_tokens& tokens, grm& net, attention_trace* trace) {
    nn::tape t;
    return {net.intra_attend(t, t.constant(tokens.tokens), block_of(tokens.tag), trace).value(), tokens.tag};
}

modality_descriptor aggregate_netvlad(const modality_tokens& tokens, grm& net, netvlad_trace* trace) {
    nn::tape t;
    return {net.aggregate(t, t.constant(tokens.tokens), block_of(tokens.tag), trace).value().row(0).transpose(),
            tokens.tag};
}

global_descriptor describe(const frame& f, const backbone& provider, grm& net, const depth::densify_config& densify) {
    global_descriptor d;
    d.values = net.describe(prepare_input(f, provider, densify));
    d.frame_id = f.id;
    d.position = f.world_pose.position;
    return d;
}

} // namespace mpr::retrieval
