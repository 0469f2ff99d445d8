#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include "sceneloc/checkpoint.hpp"
#include "sceneloc/errors.hpp"
#include "sceneloc/network.hpp"
#include "sceneloc/scene_grid.hpp"
#include "sceneloc/world.hpp"
#include "test_util.hpp"

using namespace sceneloc;
using Vec6 = Eigen::Matrix<double, 6, 1>;

namespace {

SceneGrid corridor_grid(double heading) {
    const World w = build_corridor(200, 6);
    return rasterize(raycast_scan(w, Pose2{100, 0.5, heading}, LidarSpec{}));
}

Vec6 random_vec6(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Vec6 v;
    for (int i = 0; i < 6; ++i) v[i] = n(rng);
    return v;
}

}  // namespace

TEST(SceneGrid, RasterizeExamples) {
    const GridSpec spec;
    EXPECT_EQ(rasterize({}, spec).occupied_count(), 0);

    const std::vector<Eigen::Vector2d> origin{{0.0, 0.0}};
    const SceneGrid g = rasterize(origin, spec);
    EXPECT_EQ(g.occupied_count(), 1);
    EXPECT_EQ(g.at(25, 25), 1);

    // Half-width is 50 * 2.4 / 2 = 60 m.
    const std::vector<Eigen::Vector2d> outside{{60.1, 0.0}, {-60.1, 0.0}, {0.0, 60.0}};
    EXPECT_EQ(rasterize(outside, spec).occupied_count(), 0);
    const std::vector<Eigen::Vector2d> edge{{-60.0, -60.0}, {59.99, 59.99}};
    const SceneGrid e = rasterize(edge, spec);
    EXPECT_EQ(e.at(0, 0), 1);
    EXPECT_EQ(e.at(49, 49), 1);
}

TEST(SceneGrid, RowIsYColumnIsX) {
    const std::vector<Eigen::Vector2d> p{{10.0, 0.0}};
    const SceneGrid g = rasterize(p);
    EXPECT_EQ(g.at(25, 29), 1);  // floor((10 + 60) / 2.4) = 29
    for (std::uint8_t v : g.cells()) EXPECT_LE(v, 1);
}

TEST(InfoDescriptor, Examples) {
    InfoDescriptor d;
    d.a << 1, 0, 1, 0, 0, 1;
    EXPECT_TRUE(descriptor_to_info(d).isApprox(Eigen::Matrix3d::Identity()));
    d.a << 2, 0, 2, 0, 0, 2;
    EXPECT_TRUE(descriptor_to_info(d).isApprox(4 * Eigen::Matrix3d::Identity()));
    d.a << 1, 1, 1, 0, 0, 1;
    Eigen::Matrix3d expect;
    expect << 1, 1, 0, 1, 2, 0, 0, 0, 1;
    EXPECT_TRUE(descriptor_to_info(d).isApprox(expect));
    d.a << 1, 0, 0, 0, 0, 1;
    EXPECT_THROW(descriptor_to_info(d), InvalidArgument);
    d.a << -1, 0, 1, 0, 0, 1;
    EXPECT_THROW(descriptor_to_info(d), InvalidArgument);
}

TEST(InfoDescriptor, CholeskyRoundTrip) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> pos(0.05, 5.0), off(-3.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        InfoDescriptor d;
        d.a << pos(rng), off(rng), pos(rng), off(rng), off(rng), pos(rng);
        const Eigen::Matrix3d q = descriptor_to_info(d);
        EXPECT_EQ(q, q.transpose());
        const InfoDescriptor back = info_to_descriptor(q);
        EXPECT_LT((back.a - d.a).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Network, ArchitectureSize) {
    const Architecture a;
    // conv1: 8*1*25+8, conv2: 16*8*9+16, dense: 64*1936+64, head: 6*64+6
    EXPECT_EQ(a.parameter_count(), 208u + 1168u + 123968u + 390u);
    EXPECT_EQ(a.parameter_count(), 125734u);
    EXPECT_EQ(Architecture::linear(2, 3).parameter_count(), 6u * 6u + 6u);

    Architecture bad;
    bad.in_height = 3;
    EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Network, DefaultHeadGivesNominalInformation) {
    const NetParams p = init_params(Architecture{});
    const ForwardResult r = forward(p, SceneGrid(GridSpec{}));
    const Vec6 expect = (Vec6() << 20.0, 0.0, 20.0, 0.0, 0.0, 200.0).finished();
    EXPECT_LT((r.descriptor.a - expect).cwiseAbs().maxCoeff(), 1e-12);
    const InfoMatrix q = descriptor_to_info(r.descriptor);
    EXPECT_NEAR(q(0, 0), 400.0, 1e-9);
    EXPECT_NEAR(q(2, 2), 40000.0, 1e-7);

    // Zero head weights ignore the scene entirely.
    const ForwardResult c = forward(p, corridor_grid(0.3));
    EXPECT_EQ(c.descriptor.a, r.descriptor.a);
}

TEST(Network, Deterministic) {
    NetInit init;
    init.head_weight_scale = 1.0;
    const NetParams p = init_params(Architecture{}, init);
    const NetParams q = init_params(Architecture{}, init);
    EXPECT_EQ(p.theta, q.theta);
    const SceneGrid g = corridor_grid(0.2);
    EXPECT_EQ(forward(p, g).descriptor.a, forward(p, g).descriptor.a);
}

TEST(Network, GridSizeMismatch) {
    const NetParams p = init_params(Architecture{});
    EXPECT_THROW(forward(p, SceneGrid(GridSpec{10, 10, 1.0})), InvalidArgument);
}

TEST(Network, ZeroGradOutGivesZeroGradient) {
    NetInit init;
    init.head_weight_scale = 1.0;
    const NetParams p = init_params(Architecture{}, init);
    const ForwardResult r = forward(p, corridor_grid(0.0));
    for (double g : backward(p, r.cache, Vec6::Zero())) EXPECT_EQ(g, 0.0);
}

TEST(Network, LinearLayerGradientIsOuterProduct) {
    const Architecture arch = Architecture::linear(3, 3);
    NetInit init;
    init.head_weight_scale = 1.0;
    const NetParams p = init_params(arch, init);
    SceneGrid g(GridSpec{3, 3, 1.0});
    g.set(0, 1, 1);
    g.set(2, 2, 1);
    const ForwardResult r = forward(p, g);
    Vec6 go = Vec6::Zero();
    go[1] = 1.5;  // off-diagonal output, no exp
    const std::vector<double> grad = backward(p, r.cache, go);
    const auto& in = r.cache.input;
    for (int o = 0; o < 6; ++o) {
        for (int i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(grad[o * 9 + i], go[o] * in[i]);
        EXPECT_DOUBLE_EQ(grad[54 + o], go[o]);
    }
}

TEST(Network, BackwardMatchesFiniteDifferences) {
    NetInit init;
    init.head_weight_scale = 1.0;
    init.seed = 5;
    NetParams p = init_params(Architecture{}, init);
    const SceneGrid g = corridor_grid(0.4);
    std::mt19937_64 rng(22);
    const Vec6 w = random_vec6(rng);
    const ForwardResult r = forward(p, g);
    const std::vector<double> grad = backward(p, r.cache, w);

    std::uniform_int_distribution<std::size_t> pick(0, p.theta.size() - 1);
    const double h = 1e-5;
    int checked = 0;
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const std::size_t i = pick(rng);
        const double orig = p.theta[i];
        p.theta[i] = orig + h;
        const double fp = forward(p, g).descriptor.a.dot(w);
        p.theta[i] = orig - h;
        const double fm = forward(p, g).descriptor.a.dot(w);
        p.theta[i] = orig;
        const double fd = (fp - fm) / (2 * h);
        const double err = std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
        worst = std::max(worst, err);
        ++checked;
    }
    EXPECT_EQ(checked, 100);
    EXPECT_LE(worst, 1e-4);
}

TEST(Checkpoint, RoundTripBitExact) {
    NetInit init;
    init.head_weight_scale = 0.3;
    const NetParams p = init_params(Architecture{}, init);
    const std::string bytes = encode_checkpoint(p);
    EXPECT_EQ(bytes.substr(0, 8), "SLNETCK1");
    const NetParams q = decode_checkpoint(bytes);
    EXPECT_EQ(q.arch, p.arch);
    EXPECT_EQ(q.theta, p.theta);
    EXPECT_EQ(encode_checkpoint(q), bytes);

    const auto path = std::filesystem::temp_directory_path() / "sceneloc_ckpt_test.bin";
    save_checkpoint(p, path);
    EXPECT_EQ(load_checkpoint(path).theta, p.theta);
    std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruptFiles) {
    const NetParams p = init_params(Architecture::linear(2, 2));
    const std::string bytes = encode_checkpoint(p);
    std::string bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_checkpoint(bad), DataError);
    bad = bytes;
    bad[8] = 2;  // version
    EXPECT_THROW(decode_checkpoint(bad), DataError);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), DataError);
    EXPECT_THROW(decode_checkpoint(bytes + "x"), DataError);
    EXPECT_THROW(load_checkpoint("/nonexistent/model.bin"), DataError);
}
