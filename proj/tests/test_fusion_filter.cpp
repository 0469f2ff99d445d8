#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "sceneloc/errors.hpp"
#include "sceneloc/fusion_filter.hpp"
#include "test_util.hpp"

using namespace sceneloc;
using sceneloc::testing::random_spd;

namespace {

// Moment-form oracle: prior N(0, Omega_hat^-1) moved by u with noise R, then a
// direct observation z with covariance Qtilde^-1 (Kalman update, H = I).
struct Oracle {
    Eigen::Vector3d mean;
    Eigen::Matrix3d cov;
};

Oracle kalman_oracle(const Eigen::Matrix3d& omega_prev, double theta_prev, const Eigen::Vector3d& u,
                     const Eigen::Matrix3d& R, const Eigen::Vector3d& z, const Eigen::Matrix3d& qtilde) {
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    rot.topLeftCorner<2, 2>() = Eigen::Rotation2Dd(-theta_prev).toRotationMatrix();
    // Covariance rotates with the frame: Sigma_hat = M Sigma M^T.
    const Eigen::Matrix3d sigma_hat = rot * omega_prev.inverse() * rot.transpose();
    const Eigen::Matrix3d P = sigma_hat + R;
    const Eigen::Matrix3d Qcov = qtilde.inverse();
    const Eigen::Matrix3d K = P * (P + Qcov).inverse();
    return Oracle{u + K * (z - u), (Eigen::Matrix3d::Identity() - K) * P};
}

double rel_mat(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST(FusionFilter, InfoToMomentsExamples) {
    InfoState s;
    s.omega = Eigen::Matrix3d::Identity();
    s.xi = Eigen::Vector3d(1, 2, 0.1);
    Moments m = info_to_moments(s);
    EXPECT_NEAR(m.mean.x, 1, 1e-15);
    EXPECT_NEAR(m.mean.y, 2, 1e-15);
    EXPECT_NEAR(m.mean.theta, 0.1, 1e-15);
    EXPECT_TRUE(m.cov.isApprox(Eigen::Matrix3d::Identity()));

    s.omega = 4.0 * Eigen::Matrix3d::Identity();
    s.xi = Eigen::Vector3d(4, 0, 0);
    m = info_to_moments(s);
    EXPECT_NEAR(m.mean.x, 1.0, 1e-15);
    EXPECT_TRUE(m.cov.isApprox(0.25 * Eigen::Matrix3d::Identity()));

    s.omega.setZero();
    EXPECT_THROW(info_to_moments(s), SingularStateError);
}

TEST(FusionFilter, RotateInformationExamples) {
    InfoState s;
    s.omega = Eigen::Vector3d(4, 1, 1).asDiagonal();
    s.xi = Eigen::Vector3d(1, 2, 3);

    InfoState r = rotate_information(s, Pose2{0.5, 0.2, 0.0});
    EXPECT_TRUE(r.omega.isApprox(s.omega));
    EXPECT_EQ(r.xi, Eigen::Vector3d::Zero());

    r = rotate_information(s, Pose2{0, 0, std::numbers::pi / 2});
    const Eigen::Matrix3d expect = Eigen::Vector3d(1, 4, 1).asDiagonal();
    EXPECT_LT((r.omega - expect).norm(), 1e-12);

    s.omega = Eigen::Matrix3d::Identity();
    r = rotate_information(s, Pose2{0, 0, 1.234});
    EXPECT_LT((r.omega - Eigen::Matrix3d::Identity()).norm(), 1e-15);
}

TEST(FusionFilter, RotateInformationPreservesEigenvalues) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ang(-4, 4);
    for (int i = 0; i < 200; ++i) {
        InfoState s;
        s.omega = random_spd(rng);
        const InfoState r = rotate_information(s, Pose2{0, 0, ang(rng)});
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> a(s.omega), b(r.omega);
        EXPECT_LT((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_EQ(r.omega, r.omega.transpose());
    }
}

TEST(FusionFilter, ZeroInformationPassesPrediction) {
    std::mt19937_64 rng(4);
    InfoState s;
    s.omega = random_spd(rng);
    const Pose2 u{0.9, 0.1, 0.05};
    const FuseResult r = rpf_step(s, Pose2{0, 0, 0.3}, u, random_spd(rng, 0.01, 0.1), Pose2{5, 5, 1},
                                  InfoMatrix::Zero());
    EXPECT_NEAR(r.mean.x, u.x, 1e-12);
    EXPECT_NEAR(r.mean.y, u.y, 1e-12);
    EXPECT_NEAR(r.mean.theta, u.theta, 1e-12);
}

TEST(FusionFilter, IsotropicAverageLimit) {
    // Prior variance eps -> 0 leaves P = R = sigma^2 I, the same as the
    // measurement covariance, so the posterior is the midpoint.
    const double sigma2 = 0.04;
    const Pose2 u{1.0, 0.0, 0.1}, z{1.2, 0.4, -0.1};
    const InfoMatrix q = Eigen::Matrix3d::Identity() / sigma2;
    const NoiseCov R = sigma2 * Eigen::Matrix3d::Identity();
    InfoState s;
    s.omega = Eigen::Matrix3d::Identity() / 1e-12;
    FuseResult r = rpf_step(s, Pose2{}, u, R, z, q);
    EXPECT_NEAR(r.mean.x, 1.1, 1e-9);
    EXPECT_NEAR(r.mean.y, 0.2, 1e-9);
    EXPECT_NEAR(r.mean.theta, 0.0, 1e-9);

    // With a huge prior variance the prediction carries no weight and the
    // measurement wins.
    s.omega = Eigen::Matrix3d::Identity() * 1e-9;
    r = rpf_step(s, Pose2{}, u, R, z, q);
    EXPECT_NEAR(r.mean.x, z.x, 1e-6);
    EXPECT_NEAR(r.mean.y, z.y, 1e-6);
}

TEST(FusionFilter, MatchesKalmanOracle) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uu(-1, 1), th(-0.3, 0.3), prev(-3, 3);
    for (int i = 0; i < 1000; ++i) {
        InfoState s;
        s.omega = random_spd(rng, 1.0, 100.0);
        const double theta_prev = prev(rng);
        const Pose2 u{uu(rng), uu(rng), th(rng)}, z{uu(rng), uu(rng), th(rng)};
        const NoiseCov R = random_spd(rng, 0.01, 1.0);
        const InfoMatrix q = random_spd(rng, 0.5, 50.0);
        const RpfTrace t = rpf_step_traced(s, Pose2{0, 0, theta_prev}, u, R,
                                           std::vector<Observation>{{z, q}});
        const Oracle o = kalman_oracle(s.omega, theta_prev, u.vector(), R, z.vector(), q);
        for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(t.mu[k] - o.mean[k]), 1e-9 * std::max(1.0, o.mean.norm()));
        EXPECT_LT(rel_mat(t.omega.inverse(), o.cov), 1e-9);
    }
}

TEST(FusionFilter, WeylMonotoneAndSymmetric) {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 200; ++i) {
        InfoState s;
        s.omega = random_spd(rng);
        const RpfTrace t = rpf_step_traced(s, Pose2{0, 0, 0.4}, Pose2{1, 0, 0}, random_spd(rng, 0.01, 1),
                                           std::vector<Observation>{{Pose2{1, 0.1, 0}, random_spd(rng, 0.0, 5)}});
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> a(t.omega_bar), b(t.omega);
        for (int k = 0; k < 3; ++k) EXPECT_GE(b.eigenvalues()[k], a.eigenvalues()[k] - 1e-9 * a.eigenvalues()[k]);
        EXPECT_EQ(t.omega, t.omega.transpose());
        EXPECT_EQ(t.omega_bar, t.omega_bar.transpose());
    }
}

TEST(FusionFilter, MultiReductions) {
    std::mt19937_64 rng(7);
    InfoState s;
    s.omega = random_spd(rng);
    const Pose2 mp{0, 0, 0.2}, u{1.0, 0.2, 0.1}, z{1.1, 0.1, 0.05};
    const NoiseCov R = random_spd(rng, 0.01, 0.1);
    const InfoMatrix q = random_spd(rng);

    const FuseResult none = rpf_step_multi(s, mp, u, R, {});
    EXPECT_NEAR(none.mean.x, u.x, 1e-12);
    EXPECT_NEAR(none.mean.y, u.y, 1e-12);
    EXPECT_NEAR(none.mean.theta, u.theta, 1e-12);

    const FuseResult one = rpf_step_multi(s, mp, u, R, std::vector<Observation>{{z, q}});
    const FuseResult single = rpf_step(s, mp, u, R, z, q);
    EXPECT_EQ(one.mean, single.mean);
    EXPECT_EQ(one.state.omega, single.state.omega);
    EXPECT_EQ(one.state.xi, single.state.xi);

    const FuseResult two = rpf_step_multi(s, mp, u, R, std::vector<Observation>{{z, q}, {z, q}});
    const FuseResult doubled = rpf_step(s, mp, u, R, z, 2.0 * q);
    EXPECT_NEAR(two.mean.x, doubled.mean.x, 1e-12);
    EXPECT_NEAR(two.mean.y, doubled.mean.y, 1e-12);
    EXPECT_NEAR(two.mean.theta, doubled.mean.theta, 1e-12);
    EXPECT_LT((two.state.omega - doubled.state.omega).norm(), 1e-9);
}

TEST(FusionFilter, GuardedInverseJitter) {
    bool jit = false;
    const Eigen::Matrix3d inv = guarded_inverse(Eigen::Vector3d(1, 1, 0).asDiagonal(), &jit);
    EXPECT_TRUE(jit);
    EXPECT_NEAR(inv(2, 2), 1e10, 1e-2);
    guarded_inverse(Eigen::Matrix3d::Identity(), &jit);
    EXPECT_FALSE(jit);

    // A singular previous state is still usable thanks to the jitter.
    const FuseResult r = rpf_step(InfoState{}, Pose2{}, Pose2{1, 0, 0}, 0.01 * Eigen::Matrix3d::Identity(),
                                  Pose2{1, 0, 0}, Eigen::Matrix3d::Identity());
    EXPECT_TRUE(r.mean.finite());
}

TEST(FusionFilter, InitialState) {
    const InfoState s = initial_info_state();
    EXPECT_TRUE(s.omega.isApprox(1e6 * Eigen::Matrix3d::Identity()));
    EXPECT_EQ(s.xi, Eigen::Vector3d::Zero());
    EXPECT_THROW(initial_info_state(0.0), InvalidArgument);
}

TEST(FusionFilter, TranslationScale) {
    EXPECT_EQ(translation_scale(Pose2{0, 0, 2}), 0.0);
    EXPECT_DOUBLE_EQ(translation_scale(Pose2{3, 4, 0}), 5.0);
    EXPECT_NEAR(translation_scale(Pose2{0.6, 0.8, 1.0}), 1.0, 1e-15);
}

TEST(FusionFilter, ScaleJacobianMatchesFiniteDifferences) {
    const Eigen::Vector3d x(0.8, -0.3, 0.05);
    const Eigen::Matrix3d G = scale_measurement_jacobian(x, 1.7);
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
        Eigen::Vector3d e = Eigen::Vector3d::Zero();
        e[j] = h;
        const Eigen::Vector3d fd = (scale_measurement(x + e, 1.7) - scale_measurement(x - e, 1.7)) / (2 * h);
        EXPECT_LT((fd - G.col(j)).norm(), 1e-8);
    }
}

TEST(FusionFilter, EifConsistentMeasurement) {
    std::mt19937_64 rng(8);
    InfoState s;
    s.omega = random_spd(rng);
    const Pose2 u{0.9, 0.2, 0.07};
    const NoiseCov R = random_spd(rng, 0.01, 0.1);
    const InfoMatrix q = random_spd(rng);

    // z = g(u) for an arbitrary target scale.
    const Pose2 z = Pose2::from_vector(scale_measurement(u.vector(), 1.0));
    FuseResult r = eif_step(s, Pose2{}, u, R, z, q);
    EXPECT_FALSE(r.prediction_only);
    EXPECT_NEAR(r.mean.x, u.x, 1e-9);
    EXPECT_NEAR(r.mean.y, u.y, 1e-9);
    EXPECT_NEAR(r.mean.theta, u.theta, 1e-9);

    // s(z) = s(u) and z = u: same answer as the plain step.
    r = eif_step(s, Pose2{}, u, R, u, q);
    const FuseResult plain = rpf_step(s, Pose2{}, u, R, u, q);
    EXPECT_NEAR(r.mean.x, plain.mean.x, 1e-9);
    EXPECT_NEAR(r.mean.y, plain.mean.y, 1e-9);
    EXPECT_NEAR(r.mean.theta, plain.mean.theta, 1e-9);
}

TEST(FusionFilter, EifDegenerateScaleFallsBack) {
    const Pose2 u{0, 0, 0.1};
    const FuseResult r = eif_step(initial_info_state(), Pose2{}, u, 0.01 * Eigen::Matrix3d::Identity(),
                                  Pose2{1, 0, 0}, Eigen::Matrix3d::Identity());
    EXPECT_TRUE(r.prediction_only);
    EXPECT_NEAR(r.mean.theta, 0.1, 1e-12);
    EXPECT_NEAR(r.mean.x, 0.0, 1e-12);
}

TEST(FusionFilter, FuserCarriesState) {
    RelativePoseFuser f;
    const NoiseCov R = 1e-4 * Eigen::Matrix3d::Identity();
    const Pose2 a = f.step(Pose2{1, 0, 0.1}, R, Pose2{1, 0, 0.1}, 1e4 * Eigen::Matrix3d::Identity());
    EXPECT_NEAR(a.x, 1.0, 1e-12);
    EXPECT_EQ(f.last_mean(), a);
    f.reset();
    EXPECT_EQ(f.last_mean(), Pose2::identity());
    EXPECT_TRUE(f.state().omega.isApprox(initial_info_state().omega));
}
