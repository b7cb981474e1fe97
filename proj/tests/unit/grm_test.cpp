#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "mpr/core/error.hpp"
#include "mpr/core/random.hpp"
#include "mpr/retrieval/checkpoint.hpp"
#include "mpr/retrieval/grm.hpp"

#include "test_util.hpp"

using namespace mpr;
using namespace mpr::retrieval;

namespace {

grm_config small_config() {
    grm_config c;
    c.embed_channels = 8;
    c.token_width = 16;
    c.heads = 2;
    c.clusters = 4;
    c.mlp_hidden = 12;
    c.descriptor_dim = 8;
    c.patch_stride = 4;
    return c;
}

matrix random_matrix(rng& r, Eigen::Index rows, Eigen::Index cols) {
    matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = r.normal();
    }
    return m;
}

void randomize_biases(grm& net, std::uint64_t seed) {
    rng r(seed);
    for (auto& e : net.params()) {
        if (e.name.find(".b") != std::string::npos) {
            e.value = 0.3 * random_matrix(r, e.value.rows(), e.value.cols());
        }
    }
}

} // namespace

TEST(grm, vision_token_shape_and_zero_input) {
    grm_config c;
    c.embed_channels = 32;
    c.token_width = 64;
    grm net(c);
    visual_embedding emb;
    emb.token_rows = 4;
    emb.token_cols = 4;
    emb.tokens = matrix::Zero(32, 16);
    const auto tokens = extract_vision_tokens(emb, net);
    EXPECT_EQ(tokens.tokens.rows(), 16);
    EXPECT_EQ(tokens.tokens.cols(), 64);
    EXPECT_TRUE(tokens.tokens.isZero(0.0));
    emb.tokens = matrix::Zero(31, 16);
    EXPECT_THROW(extract_vision_tokens(emb, net), error);
}

TEST(grm, lidar_constant_depth_interior_tokens_equal) {
    grm_config c = small_config();
    c.patch_stride = 16;
    grm net(c);
    randomize_biases(net, 4);
    depth::dense_metric_depth d;
    d.values = grid_d::Constant(128, 128, 12.5);
    const auto tokens = extract_lidar_tokens(d, net);
    ASSERT_EQ(tokens.tokens.rows(), 64);
    // Interior tokens are those whose receptive field never touches the zero padding.
    const auto row = [&](int r, int col) { return tokens.tokens.row(r * 8 + col); };
    for (int r = 2; r < 7; ++r) {
        for (int col = 2; col < 7; ++col) {
            EXPECT_LT((row(r, col) - row(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
    depth::dense_metric_depth small;
    small.values = grid_d::Constant(64, 64, 3.0);
    EXPECT_EQ(extract_lidar_tokens(small, net).tokens.rows(), 16);
}

TEST(grm, inter_attend_zero_other_passes_self) {
    grm net(small_config());
    rng r(1);
    const modality_tokens self{random_matrix(r, 6, 16), modality::vision};
    const modality_tokens other{matrix::Zero(6, 16), modality::lidar};
    const auto out = inter_attend(self, other, net);
    EXPECT_LT((out.tokens - self.tokens).cwiseAbs().maxCoeff(), 1e-15);
    const modality_tokens short_other{matrix::Zero(5, 16), modality::lidar};
    EXPECT_THROW(inter_attend(self, short_other, net), error);
}

TEST(grm, inter_attend_single_token) {
    grm net(small_config());
    randomize_biases(net, 2);
    rng r(2);
    const modality_tokens self{random_matrix(r, 1, 16), modality::vision};
    const modality_tokens other{random_matrix(r, 1, 16), modality::lidar};
    attention_trace trace;
    const auto out = inter_attend(self, other, net, &trace);
    for (const auto& w : trace.weights) {
        EXPECT_EQ(w(0, 0), 1.0);
    }
    // Oracle: layer-normalized other through the value and output projections.
    const auto& p = net.params();
    const Eigen::RowVectorXd x = other.tokens.row(0);
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    const Eigen::RowVectorXd ln = ((x.array() - mean) / std::sqrt(var + 1e-5)).matrix().cwiseProduct(
                                      p.value("inter.vision.ln_v.g")) +
                                  p.value("inter.vision.ln_v.b");
    const Eigen::RowVectorXd v = ln * p.value("inter.vision.wv").transpose() + p.value("inter.vision.bv");
    const Eigen::RowVectorXd want =
        self.tokens.row(0) + v * p.value("inter.vision.wo").transpose() + p.value("inter.vision.bo");
    EXPECT_LT((out.tokens.row(0) - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(grm, attention_rows_sum_to_one) {
    grm net(small_config());
    rng r(3);
    const modality_tokens a{3.0 * random_matrix(r, 9, 16), modality::lidar};
    const modality_tokens b{random_matrix(r, 9, 16), modality::vision};
    attention_trace inter;
    inter_attend(a, b, net, &inter);
    attention_trace intra;
    intra_attend(a, net, &intra);
    ASSERT_EQ(inter.weights.size(), 2u);
    ASSERT_EQ(intra.weights.size(), 2u);
    for (const auto* trace : {&inter, &intra}) {
        for (const auto& w : trace->weights) {
            EXPECT_LT((w.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-6);
        }
    }
}

TEST(grm, intra_attend_identity_cases) {
    grm net(small_config());
    rng r(5);
    const modality_tokens one{random_matrix(r, 1, 16), modality::vision};
    const auto& p = net.params();
    const Eigen::RowVectorXd x = one.tokens.row(0);
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    const Eigen::RowVectorXd ln = (x.array() - mean) / std::sqrt(var + 1e-5);
    const Eigen::RowVectorXd want = x + (ln * p.value("intra.vision.wv").transpose()) *
                                            p.value("intra.vision.wo").transpose();
    EXPECT_LT((intra_attend(one, net).tokens.row(0) - want).cwiseAbs().maxCoeff(), 1e-12);

    net.params().value("intra.vision.wo").setZero();
    const modality_tokens many{random_matrix(r, 7, 16), modality::vision};
    EXPECT_EQ(intra_attend(many, net).tokens, many.tokens);
}

TEST(grm, intra_attend_permutation_equivariant) {
    grm net(small_config());
    randomize_biases(net, 6);
    rng r(6);
    for (int trial = 0; trial < 10; ++trial) {
        const modality_tokens in{random_matrix(r, 12, 16), modality::lidar};
        std::vector<int> perm(12);
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = 11; i > 0; --i) {
            std::swap(perm[i], perm[r.below(i + 1)]);
        }
        modality_tokens permuted = in;
        for (int i = 0; i < 12; ++i) {
            permuted.tokens.row(i) = in.tokens.row(perm[i]);
        }
        const auto out = intra_attend(in, net);
        const auto out_p = intra_attend(permuted, net);
        for (int i = 0; i < 12; ++i) {
            EXPECT_LT((out_p.tokens.row(i) - out.tokens.row(perm[i])).cwiseAbs().maxCoeff(), 1e-6);
        }
    }
}

TEST(grm, netvlad_duplication_homogeneity) {
    grm net(small_config());
    rng r(7);
    const modality_tokens in{random_matrix(r, 10, 16), modality::vision};
    modality_tokens twice{matrix(20, 16), modality::vision};
    twice.tokens << in.tokens, in.tokens;
    netvlad_trace a;
    netvlad_trace b;
    const auto da = aggregate_netvlad(in, net, &a);
    const auto db = aggregate_netvlad(twice, net, &b);
    EXPECT_LT((a.assignment.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-6);
    EXPECT_LT((b.vlad_raw - 2.0 * a.vlad_raw).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((b.vlad_normalized - a.vlad_normalized).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((da.values - db.values).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_EQ(da.values.size(), 8);
    EXPECT_NEAR(da.values.norm(), 1.0, 1e-9);
}

TEST(grm, describe_synthetic_frames) {
    auto w = make_small_world(3, 1);
    grm net;
    for (const auto& f : w.world.frames) {
        const auto d = describe(f, *w.provider, net);
        ASSERT_EQ(d.values.size(), 512);
        EXPECT_TRUE(d.values.allFinite());
        EXPECT_NEAR(d.values.norm(), 1.0, 1e-9);
        const auto again = describe(f, *w.provider, net);
        EXPECT_EQ(d.values, again.values);
    }
}

TEST(grm, scaled_depth_changes_descriptor) {
    auto w = make_small_world(1, 1);
    grm net;
    grm_input in = prepare_input(w.world.frames[0], *w.provider);
    const auto a = net.describe(in);
    in.depth *= 2.0;
    const auto b = net.describe(in);
    EXPECT_GT((a - b).norm(), 1e-6);
}

TEST(grm, seed_determines_initialization) {
    EXPECT_TRUE(grm(small_config()).params() == grm(small_config()).params());
    grm_config other = small_config();
    other.seed = 1;
    EXPECT_FALSE(grm(small_config()).params() == grm(other).params());
    EXPECT_GT(grm().parameter_count(), 0u);
}

TEST(checkpoint, round_trip_and_config_mismatch) {
    const auto dir = test_dir("checkpoint");
    grm net(small_config());
    randomize_biases(net, 9);
    save_checkpoint(dir / "a.mprw", net);
    const grm loaded = load_checkpoint(dir / "a.mprw", small_config());
    grm rounded = net;
    round_to_storage(rounded);
    EXPECT_TRUE(loaded.params() == rounded.params());
    save_checkpoint(dir / "b.mprw", loaded);
    EXPECT_EQ(file_digest(dir / "a.mprw"), file_digest(dir / "b.mprw"));

    grm_config other = small_config();
    other.clusters = 5;
    try {
        load_checkpoint(dir / "a.mprw", other);
        FAIL() << "expected a config mismatch";
    } catch (const error& e) {
        EXPECT_EQ(e.category(), error_category::config);
    }
    EXPECT_THROW(load_checkpoint(dir / "missing.mprw"), error);
}
