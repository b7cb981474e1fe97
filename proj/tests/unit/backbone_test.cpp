#include <algorithm>
#include <fstream>

#include <gtest/gtest.h>

#include "mpr/backbone/fast.hpp"
#include "mpr/backbone/fixture_backbone.hpp"
#include "mpr/backbone/synthetic_backbone.hpp"
#include "mpr/backbone/tensor_file.hpp"
#include "mpr/core/error.hpp"
#include "mpr/core/random.hpp"

#include "../support/oracles.hpp"
#include "test_util.hpp"

using namespace mpr;

namespace {

camera_image square_image() {
    camera_image img(64, 64, 0, 0, 0);
    for (int y = 20; y < 40; ++y) {
        for (int x = 20; x < 40; ++x) {
            img.set(x, y, 255, 255, 255);
        }
    }
    return img;
}

bool bitwise_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::equal(a.data(), a.data() + a.size(), b.data());
}

} // namespace

TEST(fast, uniform_image_has_no_corners) {
    const camera_image img(48, 48, 90, 90, 90);
    EXPECT_TRUE(detect_corners(img, binary_mask(48, 48, true), 256).empty());
}

TEST(fast, square_vertices) {
    const auto img = square_image();
    const auto corners = detect_corners(img, binary_mask(64, 64, true), 256);
    ASSERT_EQ(corners.size(), 4u);
    const std::vector<Eigen::Vector2d> vertices = {{20, 20}, {39, 20}, {20, 39}, {39, 39}};
    for (const auto& v : vertices) {
        const bool hit = std::any_of(corners.points.begin(), corners.points.end(),
                                     [&](const Eigen::Vector2d& p) { return (p - v).cwiseAbs().maxCoeff() <= 1.0; });
        EXPECT_TRUE(hit) << v.transpose();
    }
}

TEST(fast, max_points_keeps_highest_scores) {
    rng r(8);
    std::vector<std::uint8_t> px(64 * 64 * 3);
    for (auto& v : px) {
        v = static_cast<std::uint8_t>(r.below(256));
    }
    const camera_image img(64, 64, px);
    const auto all = detect_corners(img, binary_mask(64, 64, true), 100000);
    ASSERT_GE(all.size(), 10u);
    const auto top = detect_corners(img, binary_mask(64, 64, true), 2);
    ASSERT_EQ(top.size(), 2u);
    EXPECT_EQ(top.points[0], all.points[0]);
    EXPECT_EQ(top.points[1], all.points[1]);
    EXPECT_GE(top.scores[1], all.scores[2]);
}

TEST(fast, region_mask_limits_search) {
    const auto img = square_image();
    binary_mask left(64, 64);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 30; ++x) {
            left.set(x, y);
        }
    }
    const auto corners = detect_corners(img, left, 256);
    EXPECT_EQ(corners.size(), 2u);
    for (const auto& p : corners.points) {
        EXPECT_LT(p.x(), 30);
    }
    EXPECT_THROW(detect_corners(img, binary_mask(32, 32, true), 256), error);
}

TEST(fast, matches_oracle_on_textured_image) {
    rng r(21);
    std::vector<std::uint8_t> px(40 * 40 * 3);
    for (int i = 0; i < 40 * 40; ++i) {
        const auto v = static_cast<std::uint8_t>(r.below(4) * 60);
        px[i * 3] = px[i * 3 + 1] = px[i * 3 + 2] = v;
    }
    const camera_image img(40, 40, px);
    std::vector<int> gray(40 * 40);
    for (int i = 0; i < 40 * 40; ++i) {
        gray[i] = img.gray(i % 40, i / 40);
    }
    const auto want = oracle::fast_corners(gray, 40, 40, 20);
    const auto got = detect_corners(img, binary_mask(40, 40, true), 100000);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        EXPECT_EQ(got.points[i], Eigen::Vector2d(want[i].x, want[i].y));
    }
}

TEST(synthetic_backbone, deterministic_outputs) {
    auto w = make_small_world(2, 1);
    const auto& f = w.world.frames[0];
    const auto a = w.provider->embed(image_view::of(f));
    const auto b = w.provider->embed(image_view::of(f));
    EXPECT_TRUE(bitwise_equal(a.embedding.tokens, b.embedding.tokens));
    EXPECT_TRUE(bitwise_equal(a.relative_depth.values, b.relative_depth.values));

    const synthetic_backbone fresh({}, std::make_shared<synthetic::scene_catalog>(w.world.catalog));
    const auto c = fresh.embed(image_view::of(f));
    EXPECT_TRUE(bitwise_equal(a.embedding.tokens, c.embedding.tokens));
}

TEST(synthetic_backbone, token_grid_shape) {
    const synthetic_backbone provider;
    const camera_image img(64, 64, 10, 200, 30);
    const auto out = provider.embed({7, &img});
    EXPECT_EQ(out.embedding.token_rows, 4);
    EXPECT_EQ(out.embedding.token_cols, 4);
    EXPECT_EQ(out.embedding.tokens.cols(), 16);
    EXPECT_EQ(out.relative_depth.values.rows(), 64);
    EXPECT_TRUE((out.relative_depth.values.array() > 0.0).all());

    const camera_image odd(50, 70, 1, 2, 3);
    const auto o = provider.embed({8, &odd});
    EXPECT_EQ(o.embedding.token_rows, 4);
    EXPECT_EQ(o.embedding.token_cols, 5);
}

TEST(synthetic_backbone, self_track) {
    auto w = make_small_world(2, 1);
    const auto& f = w.world.frames[0];
    keypoint_set kp;
    kp.points = {{10.0, 10.0}, {64.0, 40.0}, {100.5, 80.25}};
    const auto t = w.provider->track(image_view::of(f), image_view::of(f), kp);
    ASSERT_EQ(t.predicted_points.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_LT((t.predicted_points[i] - kp.points[i]).norm(), 1e-9);
        EXPECT_GE(t.sampled_confidences[i], 0.99);
    }
    EXPECT_GE(t.confidence_map.minCoeff(), 0.0);
    EXPECT_LE(t.confidence_map.maxCoeff(), 1.0);
}

TEST(synthetic_backbone, far_candidate_low_confidence) {
    auto w = make_small_world(4, 1);
    const auto& q = w.world.frames[0];
    keypoint_set kp;
    for (int i = 0; i < 20; ++i) {
        kp.points.emplace_back(5.0 + 6.0 * i, 20.0 + 3.0 * i);
    }
    for (std::size_t c = 1; c < w.world.frames.size(); ++c) {
        const auto& cand = w.world.frames[c];
        ASSERT_GT(q.world_pose.distance_to(cand.world_pose), 18.0);
        const auto t = w.provider->track(image_view::of(q), image_view::of(cand), kp);
        double mean = 0.0;
        for (const double v : t.sampled_confidences) {
            mean += v;
        }
        EXPECT_LT(mean / static_cast<double>(kp.size()), 0.3);
    }
}

TEST(synthetic_backbone, keypoints_outside_image_rejected) {
    auto w = make_small_world(1, 1);
    const auto& f = w.world.frames[0];
    keypoint_set kp;
    kp.points = {{500.0, 1.0}};
    EXPECT_THROW(w.provider->track(image_view::of(f), image_view::of(f), kp), error);
}

TEST(synthetic_backbone, segmentation_sky_plus_two_boxes) {
    auto catalog = std::make_shared<synthetic::scene_catalog>();
    synthetic::place_record place;
    synthetic::box a;
    a.center = {12.0, 3.0, 1.5};
    a.half_extent = {1.0, 1.0, 1.5};
    synthetic::box b = a;
    b.center = {15.0, -4.0, 2.0};
    b.half_extent = {1.5, 1.0, 2.0};
    b.color = {40, 90, 160};
    place.geometry.boxes = {a, b};
    catalog->places.push_back(place);
    synthetic::frame_record rec;
    rec.id = 5;
    rec.size = {96, 128};
    rec.calib = synthetic::make_calibration(rec.size, 100.0);
    // Horizon low in the image, so the sky dominates.
    rec.calib.intrinsics(1, 2) = 75.0;
    rec.world_pose.position = {0.0, 0.0, 1.6};
    catalog->frames.emplace(rec.id, rec);
    const auto rendered = synthetic::render(catalog->scene_for(rec), catalog->camera_for(rec), 150.0);

    const synthetic_backbone provider({}, catalog);
    const auto masks = provider.segment({rec.id, &rendered.image});
    ASSERT_GE(masks.masks.size(), 3u);
    int largest = 0;
    for (const auto& m : masks.masks) {
        EXPECT_GT(m.area(), 0);
        largest = std::max(largest, m.area());
    }
    const auto& sky = masks.masks[0];
    EXPECT_TRUE(sky.at(64, 0));
    EXPECT_EQ(sky.area(), largest);
}

TEST(synthetic_backbone, blank_image_single_mask) {
    const synthetic_backbone provider;
    const camera_image img(32, 32, 128, 128, 128);
    const auto masks = provider.segment({99, &img});
    ASSERT_EQ(masks.masks.size(), 1u);
    EXPECT_EQ(masks.masks[0].area(), 32 * 32);
}

TEST(tensor_file, round_trip_and_rank_check) {
    const auto dir = test_dir("tensor_file");
    tensor t;
    t.dims = {2, 3};
    t.data = {1, 2, 3, 4, 5, 6.5f};
    write_tensor_file(dir / "t.mprt", t);
    EXPECT_EQ(read_tensor_file(dir / "t.mprt"), t);
    try {
        read_tensor_file(dir / "t.mprt", 3);
        FAIL() << "expected a rank error";
    } catch (const error& e) {
        EXPECT_NE(std::string(e.what()).find('3'), std::string::npos) << e.what();
    }
    std::ofstream(dir / "bad.mprt", std::ios::binary) << "MPRT9";
    EXPECT_THROW(read_tensor_file(dir / "bad.mprt"), error);
}

TEST(fixture_backbone, replays_recorded_outputs) {
    const auto dir = test_dir("fixtures");
    auto w = make_small_world(2, 1);
    const auto& q = w.world.frames[0];
    const auto& c = w.world.frames[1];
    keypoint_set kp;
    kp.points = {{12.0, 30.0}, {70.0, 50.0}};
    const recording_backbone rec(*w.provider, dir);
    const auto emb = rec.embed(image_view::of(q));
    const auto seg = rec.segment(image_view::of(q));
    const auto trk = rec.track(image_view::of(q), image_view::of(c), kp);

    const fixture_backbone fix(dir, 16);
    const auto emb2 = fix.embed(image_view::of(q));
    EXPECT_TRUE(emb2.embedding.tokens.isApprox(emb.embedding.tokens, 1e-6));
    EXPECT_EQ(fix.segment(image_view::of(q)).masks.size(), seg.masks.size());
    for (std::size_t i = 0; i < seg.masks.size(); ++i) {
        EXPECT_EQ(fix.segment(image_view::of(q)).masks[i], seg.masks[i]);
    }
    const auto trk2 = fix.track(image_view::of(q), image_view::of(c), kp);
    ASSERT_EQ(trk2.sampled_confidences.size(), trk.sampled_confidences.size());
    for (std::size_t i = 0; i < kp.size(); ++i) {
        EXPECT_NEAR(trk2.sampled_confidences[i], trk.sampled_confidences[i], 1e-6);
    }
    EXPECT_THROW(fix.embed(image_view::of(c)), error);
}
