#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "sceneloc/baselines.hpp"
#include "sceneloc/errors.hpp"
#include "sceneloc/evaluation.hpp"

using namespace sceneloc;

namespace {

std::vector<Pose2> integrate(const Pose2& start, const std::vector<Pose2>& steps) {
    std::vector<Pose2> out{start};
    for (const Pose2& s : steps) out.push_back(compose(out.back(), s));
    return out;
}

Dataset corridor_dataset(std::uint64_t seed, double length, bool quiet) {
    Scenario sc;
    sc.length = length;
    SimConfig cfg;
    cfg.seed = seed;
    if (quiet) {
        cfg.lidar.range_sigma = 0.0;
        cfg.dr_sigma_x = cfg.dr_sigma_y = cfg.dr_sigma_theta = 0.0;
        cfg.injection = InjectionSpec{0.0, 0.0, 0.0};
        cfg.gps_sigma = cfg.gps_sigma_theta = 0.0;
    }
    return simulate_run(build_world(sc), build_path(sc), cfg);
}

}  // namespace

TEST(Aggregate, LinearInterpolationQuartiles) {
    const Aggregate a = aggregate({4, 1, 3, 2});
    EXPECT_DOUBLE_EQ(a.mean, 2.5);
    EXPECT_DOUBLE_EQ(a.median, 2.5);
    EXPECT_DOUBLE_EQ(a.q1, 1.75);
    EXPECT_DOUBLE_EQ(a.q3, 3.25);
    const Aggregate one = aggregate({7});
    EXPECT_EQ(one.q1, 7.0);
    EXPECT_EQ(one.q3, 7.0);
    EXPECT_THROW(aggregate({}), InvalidArgument);
}

TEST(SegmentErrors, PerfectEstimateHasZeroError) {
    const std::vector<Pose2> truth = integrate(Pose2{2, 3, 0.4}, std::vector<Pose2>(120, Pose2{1, 0, 0.01}));
    const SegmentStats s = segment_errors(truth, truth, 40.0);
    EXPECT_EQ(s.dist_err.size(), 3u);
    for (double e : s.dist_err) EXPECT_NEAR(e, 0.0, 1e-9);
    for (double e : s.heading_err) EXPECT_NEAR(e, 0.0, 1e-12);
}

TEST(SegmentErrors, LateralDriftOracle) {
    const double d = 0.01;
    const auto truth = integrate(Pose2{}, std::vector<Pose2>(100, Pose2{1, 0, 0}));
    const auto est = integrate(Pose2{}, std::vector<Pose2>(100, Pose2{1, d, 0}));
    const SegmentStats s = segment_errors(est, truth, 40.0);
    ASSERT_EQ(s.dist_err.size(), 2u);
    for (double e : s.dist_err) EXPECT_NEAR(e, 40 * d, 1e-12);
}

TEST(SegmentErrors, HeadingDriftOracle) {
    // n unit steps turning by eps: the end point is the geometric sum of e^{i j eps}.
    const double eps = 0.002;
    const int n = 40;
    const auto truth = integrate(Pose2{}, std::vector<Pose2>(80, Pose2{1, 0, 0}));
    const auto est = integrate(Pose2{}, std::vector<Pose2>(80, Pose2{1, 0, eps}));
    const std::complex<double> w = std::polar(1.0, eps);
    const std::complex<double> end = (1.0 - std::pow(w, n)) / (1.0 - w);
    const double expect = std::abs(end - std::complex<double>(n, 0));
    const SegmentStats s = segment_errors(est, truth, 40.0);
    ASSERT_EQ(s.dist_err.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_NEAR(s.dist_err[i], expect, 1e-9);
        EXPECT_NEAR(s.heading_err[i], n * eps, 1e-12);
    }
}

TEST(SegmentErrors, CountFollowsArcLength) {
    const auto truth = integrate(Pose2{}, std::vector<Pose2>(250, Pose2{1, 0, 0}));
    EXPECT_EQ(segment_errors(truth, truth, 100.0).dist_err.size(), 2u);
    EXPECT_EQ(segment_errors(truth, truth, 250.0).dist_err.size(), 1u);
    EXPECT_THROW(segment_errors(truth, truth, 251.0), DataError);
    std::vector<Pose2> shorter(truth.begin(), truth.end() - 1);
    EXPECT_THROW(segment_errors(shorter, truth, 10.0), DataError);
}

TEST(SegmentErrors, InvariantUnderRigidTransform) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n(0, 0.05);
    std::vector<Pose2> ts, es;
    for (int i = 0; i < 150; ++i) {
        ts.push_back(Pose2{1.0, n(rng), n(rng)});
        es.push_back(Pose2{1.0 + n(rng), n(rng), n(rng)});
    }
    const auto truth = integrate(Pose2{}, ts);
    const auto est = integrate(Pose2{0.3, -0.2, 0.1}, es);
    const SegmentStats base = segment_errors(est, truth, 30.0);
    const Pose2 tf{12.0, -7.0, 2.1};
    std::vector<Pose2> truth2, est2;
    for (const auto& p : truth) truth2.push_back(compose(tf, p));
    for (const auto& p : est) est2.push_back(compose(Pose2{-4, 9, -1.0}, p));
    const SegmentStats moved = segment_errors(est2, truth2, 30.0);
    ASSERT_EQ(base.dist_err.size(), moved.dist_err.size());
    for (std::size_t i = 0; i < base.dist_err.size(); ++i) {
        EXPECT_NEAR(base.dist_err[i], moved.dist_err[i], 1e-9);
        EXPECT_NEAR(base.heading_err[i], moved.heading_err[i], 1e-9);
    }
}

TEST(Evaluation, TrajectoriesFromReadings) {
    const Dataset ds = corridor_dataset(2, 60.0, false);
    const auto dr = dead_reckoning_trajectory(ds);
    const auto eso = eso_trajectory(ds);
    ASSERT_EQ(dr.size(), ds.frames.size());
    Pose2 g = ds.start, h = ds.start;
    for (std::size_t t = 1; t < ds.frames.size(); ++t) {
        g = compose(g, ds.frames[t].u);
        h = compose(h, ds.frames[t].z);
        EXPECT_EQ(dr[t], g);
        EXPECT_EQ(eso[t], h);
    }
}

TEST(Evaluation, NoiseFreeCompareIsExact) {
    const Dataset ds = corridor_dataset(1, 100.0, true);
    EvalOptions opt;
    const std::vector<std::string> methods{"dr_only", "eso_only", "fused_fixed", "fused_hessian"};
    const CompareResult r = compare_methods(ds, std::nullopt, std::nullopt, methods, opt);
    ASSERT_EQ(r.rows.size(), methods.size());
    for (std::size_t i = 0; i < methods.size(); ++i) {
        EXPECT_EQ(r.rows[i].method, methods[i]);
        EXPECT_EQ(r.rows[i].scale, 1.0);
        EXPECT_EQ(r.rows[i].trajectory.size(), ds.frames.size());
        EXPECT_EQ(r.rows[i].stats.dist_err.size(), 2u);
        EXPECT_LT(r.rows[i].stats.dist.mean, 1e-8);
        EXPECT_LT(r.rows[i].stats.heading.mean, 1e-8);
    }
    const std::string metrics = format_metrics(r);
    EXPECT_EQ(metrics.substr(0, std::string(kMetricsHeader).size()), kMetricsHeader);
    EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 5);
    const std::string traj = format_trajectories(r);
    EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), 1 + 5 * static_cast<long>(ds.frames.size()));
}

TEST(Evaluation, CompareRescalesOnCalibration) {
    const Dataset test = corridor_dataset(3, 100.0, false);
    const Dataset calib = corridor_dataset(2, 100.0, false);
    EvalOptions opt;
    const CompareResult r =
        compare_methods(test, calib, std::nullopt, {"dr_only", "fused_fixed", "fused_sampling"}, opt);
    ASSERT_EQ(r.rows.size(), 3u);
    EXPECT_EQ(r.rows[0].scale, 1.0);
    const auto grid = default_scale_grid();
    for (int i = 1; i < 3; ++i) EXPECT_NE(std::find(grid.begin(), grid.end(), r.rows[i].scale), grid.end());
    EXPECT_EQ(r.rows[0].trajectory, dead_reckoning_trajectory(test));
    EXPECT_THROW(compare_methods(test, calib, std::nullopt, {"fused_learned"}, opt), InvalidArgument);
    EXPECT_THROW(compare_methods(test, calib, std::nullopt, {"nope"}, opt), InvalidArgument);
}

TEST(Evaluation, FixedProviderScales) {
    const Dataset ds = corridor_dataset(1, 30.0, false);
    const BaselineInputs in = compute_baselines(ds, EvalOptions{}, false);
    const InfoMatrix q1 = baseline_provider("fused_fixed", in, 1.0)(1);
    const InfoMatrix q4 = baseline_provider("fused_fixed", in, 4.0)(1);
    EXPECT_NEAR(q1(0, 0), 400.0, 1e-9);
    EXPECT_NEAR(q1(2, 2), 40000.0, 1e-6);
    EXPECT_LT((q4 * 4.0 - q1).norm(), 1e-9);
    EXPECT_THROW(baseline_provider("dr_only", in, 1.0), InvalidArgument);
}
