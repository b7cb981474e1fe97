#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "mpr/core/dataset.hpp"
#include "mpr/core/error.hpp"
#include "mpr/core/geometry.hpp"
#include "mpr/core/grid.hpp"
#include "mpr/core/image_io.hpp"
#include "mpr/core/random.hpp"
#include "mpr/pipeline/synth.hpp"

#include "test_util.hpp"

using namespace mpr;

TEST(median, odd_and_even) {
    EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_DOUBLE_EQ(median({0.9, 0.8, 0.2, 0.6}), 0.7);
    EXPECT_THROW(median({}), error);
}

TEST(bilinear, interpolates_and_clamps) {
    grid_d g(2, 2);
    g << 0.0, 1.0, 2.0, 3.0;
    EXPECT_DOUBLE_EQ(sample_bilinear(g, 0.5, 0.5), 1.5);
    EXPECT_DOUBLE_EQ(sample_bilinear(g, 1.0, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(sample_bilinear(g, -4.0, 9.0), 2.0);
    const grid_d half = grid_d::Constant(5, 5, 0.5);
    EXPECT_DOUBLE_EQ(sample_bilinear(half, 2.0, 3.0), 0.5);
}

TEST(camera_image, rejects_small_or_inconsistent) {
    EXPECT_THROW(camera_image(8, 32, 0, 0, 0), error);
    EXPECT_THROW(camera_image(16, 16, std::vector<std::uint8_t>(10)), error);
    const camera_image img(16, 20, 10, 20, 30);
    EXPECT_EQ(img.gray(3, 4), (299 * 10 + 587 * 20 + 114 * 30 + 500) / 1000);
}

TEST(calibration, validates_rotation_and_focal) {
    calibration c;
    c.intrinsics(0, 0) = 100.0;
    c.intrinsics(1, 1) = 100.0;
    EXPECT_NO_THROW(c.validate());
    c.extrinsics(0, 0) = -1.0;
    EXPECT_THROW(c.validate(), error);
    calibration f;
    f.intrinsics(0, 0) = 0.0;
    EXPECT_THROW(f.validate(), error);
}

TEST(pose, quaternion_norm) {
    pose p;
    p.heading = Eigen::Quaterniond(1.0, 0.1, 0.0, 0.0);
    EXPECT_THROW(p.validate(), error);
    p.heading = heading_from_yaw(0.3);
    EXPECT_NO_THROW(p.validate());
}

TEST(projection, optical_axis_and_behind) {
    calibration c;
    c.intrinsics << 100.0, 0.0, 31.5, 0.0, 100.0, 23.5, 0.0, 0.0, 1.0;
    point_cloud cloud;
    cloud.points.resize(3, 2);
    cloud.points.col(0) << 0.0, 0.0, 10.0;
    cloud.points.col(1) << 0.0, 0.0, -3.0;
    const auto out = project_points(cloud, c, {48, 64});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_DOUBLE_EQ(out[0].pixel.x(), 31.5);
    EXPECT_DOUBLE_EQ(out[0].pixel.y(), 23.5);
    EXPECT_DOUBLE_EQ(out[0].depth, 10.0);
    EXPECT_EQ(out[0].point_index, 0u);
}

TEST(projection, back_projection_round_trip) {
    rng r(3);
    calibration c;
    c.intrinsics << 120.0, 0.0, 64.0, 0.0, 110.0, 48.0, 0.0, 0.0, 1.0;
    c.extrinsics.topLeftCorner<3, 3>() = Eigen::AngleAxisd(0.2, Eigen::Vector3d::UnitY()).toRotationMatrix();
    c.extrinsics.topRightCorner<3, 1>() << 0.1, -0.2, 0.3;
    point_cloud cloud;
    cloud.points.resize(3, 1000);
    for (int i = 0; i < 1000; ++i) {
        cloud.points.col(i) << r.uniform(-20, 20), r.uniform(-10, 10), r.uniform(-5, 60);
    }
    const Eigen::Matrix3Xd cam = to_camera_frame(cloud.points, c);
    const auto out = project_points(cloud, c, {96, 128});
    ASSERT_FALSE(out.empty());
    for (const auto& p : out) {
        const Eigen::Vector3d back = back_project(p.pixel, p.depth, c);
        EXPECT_LT((back - cam.col(static_cast<Eigen::Index>(p.point_index))).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(dataset, synthetic_round_trip) {
    const auto dir = test_dir("dataset_round_trip");
    pipeline::world_spec spec;
    spec.places = 3;
    spec.traversals = 1;
    const auto world = pipeline::generate_world(spec);
    pipeline::write_world(world, dir);
    const auto loaded = load_dataset(dir / "manifest.json");
    ASSERT_EQ(loaded.size(), world.frames.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        EXPECT_EQ(loaded[i], world.frames[i]) << "frame " << i;
    }
    EXPECT_EQ(dataset_hash(loaded), dataset_hash(world.frames));
}

TEST(dataset, truncated_cloud_names_frame) {
    const auto dir = test_dir("dataset_bad_cloud");
    pipeline::world_spec spec;
    spec.places = 2;
    spec.traversals = 1;
    pipeline::write_world(pipeline::generate_world(spec), dir);
    for (const auto& entry : std::filesystem::directory_iterator(dir / "clouds")) {
        std::ofstream(entry.path(), std::ios::binary | std::ios::app) << "xyz";
        break;
    }
    try {
        load_dataset(dir / "manifest.json");
        FAIL() << "expected an error";
    } catch (const error& e) {
        EXPECT_NE(std::string(e.what()).find("frame"), std::string::npos) << e.what();
    }
}

TEST(dataset, select_sequence) {
    pipeline::world_spec spec;
    spec.places = 3;
    spec.traversals = 2;
    const auto world = pipeline::generate_world(spec);
    const auto second = select_sequence(world.frames, 1);
    ASSERT_EQ(second.size(), 3u);
    for (const auto& f : second) {
        EXPECT_EQ(f.sequence, 1);
    }
}

TEST(png, round_trip) {
    const auto dir = test_dir("png");
    rng r(1);
    std::vector<std::uint8_t> px(16 * 24 * 3);
    for (auto& v : px) {
        v = static_cast<std::uint8_t>(r.below(256));
    }
    const camera_image img(16, 24, px);
    write_png(dir / "a.png", img);
    EXPECT_EQ(read_png(dir / "a.png"), img);
}
