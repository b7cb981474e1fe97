#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mpr/core/error.hpp"
#include "mpr/core/random.hpp"
#include "mpr/index/database.hpp"
#include "mpr/retrieval/checkpoint.hpp"

#include "../support/oracles.hpp"
#include "test_util.hpp"

using namespace mpr;
using namespace mpr::index;

namespace {

global_descriptor entry(frame_id_t id, Eigen::VectorXd values) {
    global_descriptor d;
    d.frame_id = id;
    d.values = std::move(values);
    d.position = Eigen::Vector3d(static_cast<double>(id), 0.0, 0.0);
    return d;
}

retrieval::grm_config tiny_network() {
    retrieval::grm_config c;
    c.token_width = 16;
    c.heads = 2;
    c.clusters = 4;
    c.mlp_hidden = 16;
    c.descriptor_dim = 8;
    return c;
}

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST(descriptor_database, two_entry_order_and_identity) {
    descriptor_database db(2);
    db.add(entry(5, Eigen::Vector2d(0.3, 0.0)));
    db.add(entry(9, Eigen::Vector2d(0.1, 0.0)));
    const auto out = db.query(Eigen::Vector2d::Zero(), 30);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].frame_id, 9u);
    EXPECT_NEAR(out[0].distance, 0.1, 1e-7);
    EXPECT_EQ(out[1].frame_id, 5u);
    const auto self = db.query(db.values(0), 1);
    EXPECT_EQ(self[0].frame_id, 5u);
    EXPECT_EQ(self[0].distance, 0.0);
}

TEST(descriptor_database, ties_by_frame_id) {
    descriptor_database db(2);
    db.add(entry(7, Eigen::Vector2d(1.0, 0.0)));
    db.add(entry(3, Eigen::Vector2d(0.0, 1.0)));
    db.add(entry(4, Eigen::Vector2d(-1.0, 0.0)));
    const auto out = db.query(Eigen::Vector2d::Zero(), 3);
    EXPECT_EQ(out[0].frame_id, 3u);
    EXPECT_EQ(out[1].frame_id, 4u);
    EXPECT_EQ(out[2].frame_id, 7u);
}

TEST(descriptor_database, errors) {
    descriptor_database db(3);
    EXPECT_THROW(db.add(entry(1, Eigen::Vector2d::Zero())), error);
    db.add(entry(1, Eigen::Vector3d::Zero()));
    EXPECT_THROW(db.add(entry(1, Eigen::Vector3d::Ones())), error);
    EXPECT_THROW(db.query(Eigen::Vector2d::Zero(), 1), error);
    std::istringstream junk("MPRDB9xxxx");
    EXPECT_THROW(descriptor_database::read(junk, "junk"), error);
}

TEST(descriptor_database, exact_nested_and_persistent) {
    rng r(13);
    const int dim = 32;
    descriptor_database db(dim);
    std::vector<Eigen::VectorXd> rows;
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd v(dim);
        for (int j = 0; j < dim; ++j) {
            v(j) = r.normal();
        }
        db.add(entry(static_cast<frame_id_t>(1000 - i), v));
        rows.push_back(db.values(static_cast<std::size_t>(i)));
    }
    const auto dir = test_dir("database");
    db.save(dir / "db.mprdb");
    const auto loaded = descriptor_database::load(dir / "db.mprdb");
    EXPECT_TRUE(loaded == db);
    for (int p = 0; p < 50; ++p) {
        Eigen::VectorXd probe(dim);
        for (int j = 0; j < dim; ++j) {
            probe(j) = r.normal();
        }
        const auto full = db.query(probe, 200);
        const auto want = oracle::knn(rows, probe, 200);
        ASSERT_EQ(full.size(), 200u);
        for (std::size_t i = 0; i < full.size(); ++i) {
            EXPECT_EQ(full[i].frame_id, db.frame_id(want[i].first));
        }
        const auto top = db.query(probe, 10);
        EXPECT_TRUE(std::equal(top.begin(), top.end(), full.begin()));
        EXPECT_EQ(loaded.query(probe, 30), db.query(probe, 30));
    }
}

TEST(build, frames_in_order_and_rebuild_identical) {
    auto w = make_small_world(10, 1);
    retrieval::grm net(tiny_network());
    const auto db = build(w.world.frames, net, *w.provider, {});
    ASSERT_EQ(db.size(), 10u);
    EXPECT_EQ(db.dimension(), 16u);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(db.frame_id(i), w.world.frames[i].id);
        EXPECT_EQ(db.position(i), w.world.frames[i].world_pose.position);
    }
    const auto dir = test_dir("database_build");
    db.save(dir / "a.mprdb");
    build(w.world.frames, net, *w.provider, {}).save(dir / "b.mprdb");
    EXPECT_EQ(file_bytes(dir / "a.mprdb"), file_bytes(dir / "b.mprdb"));

    const auto empty = build({}, net, *w.provider, {});
    EXPECT_TRUE(empty.empty());
    empty.save(dir / "empty.mprdb");
    EXPECT_TRUE(descriptor_database::load(dir / "empty.mprdb").empty());
}
