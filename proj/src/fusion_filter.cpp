#include "sceneloc/fusion_filter.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "sceneloc/errors.hpp"

namespace sceneloc {

namespace {

double min_eigenvalue(const Eigen::Matrix3d& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
}

// Rotation acting on (x, y, theta): rotates the translation part only.
Eigen::Matrix3d frame_rotation(double angle) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m.topLeftCorner<2, 2>() = rotation2(angle);
    return m;
}

struct Prediction {
    Eigen::Matrix3d rot;
    Eigen::Matrix3d omega_hat;
    Eigen::Matrix3d omega_hat_inv;
    Eigen::Matrix3d pred_cov;
    Eigen::Matrix3d omega_bar;
    Eigen::Vector3d xi_bar;
};

Prediction predict(const InfoState& s_prev, const Pose2& mu_prev, const Pose2& u,
                   const NoiseCov& R) {
    Prediction p;
    p.rot = frame_rotation(-mu_prev.theta);
    p.omega_hat = symmetrize(p.rot * s_prev.omega * p.rot.transpose());
    p.omega_hat_inv = guarded_inverse(p.omega_hat);
    p.pred_cov = p.omega_hat_inv + R;
    p.omega_bar = symmetrize(guarded_inverse(p.pred_cov));
    // The rotated information vector is zero, so only u contributes.
    p.xi_bar = p.omega_bar * u.vector();
    return p;
}

Eigen::Matrix3d checked_inverse(const Eigen::Matrix3d& omega) {
    if (!omega.allFinite()) throw SingularStateError("information matrix is not finite");
    if (!(min_eigenvalue(omega) > kMinEigenvalue)) {
        throw SingularStateError("information matrix is singular");
    }
    return omega.inverse();
}

}  // namespace

Eigen::Matrix3d symmetrize(const Eigen::Matrix3d& m) { return 0.5 * (m + m.transpose()); }

Eigen::Matrix3d guarded_inverse(const Eigen::Matrix3d& m, bool* jittered) {
    const bool jitter = !(min_eigenvalue(m) >= kMinEigenvalue);
    if (jittered) *jittered = jitter;
    if (jitter) return (m + kInversionJitter * Eigen::Matrix3d::Identity()).inverse();
    return m.inverse();
}

InfoState initial_info_state(double sigma0) {
    if (!(sigma0 > 0.0)) throw InvalidArgument("initial sigma must be positive");
    InfoState s;
    s.omega = Eigen::Matrix3d::Identity() / (sigma0 * sigma0);
    return s;
}

Moments info_to_moments(const InfoState& s) {
    const Eigen::Matrix3d cov = checked_inverse(s.omega);
    return Moments{Pose2::from_vector(cov * s.xi), symmetrize(cov)};
}

InfoState rotate_information(const InfoState& s, const Pose2& mu_prev) {
    const Eigen::Matrix3d rot = frame_rotation(-mu_prev.theta);
    InfoState out;
    out.omega = symmetrize(rot * s.omega * rot.transpose());
    return out;
}

RpfTrace rpf_step_traced(const InfoState& s_prev, const Pose2& mu_prev, const Pose2& u,
                         const NoiseCov& R, std::span<const Observation> obs) {
    const Prediction p = predict(s_prev, mu_prev, u, R);
    RpfTrace t;
    t.rot = p.rot;
    t.omega_hat = p.omega_hat;
    t.omega_hat_inv = p.omega_hat_inv;
    t.pred_cov = p.pred_cov;
    t.omega_bar = p.omega_bar;
    t.xi_bar = p.xi_bar;

    Eigen::Matrix3d omega = p.omega_bar;
    Eigen::Vector3d xi = p.xi_bar;
    for (const Observation& o : obs) {
        omega += o.info;
        xi += o.info * o.z.vector();
    }
    t.omega = symmetrize(omega);
    t.xi = xi;
    t.omega_inv = checked_inverse(t.omega);
    t.mu = t.omega_inv * t.xi;
    return t;
}

FuseResult rpf_step_multi(const InfoState& s_prev, const Pose2& mu_prev, const Pose2& u,
                          const NoiseCov& R, std::span<const Observation> obs) {
    const RpfTrace t = rpf_step_traced(s_prev, mu_prev, u, R, obs);
    return FuseResult{InfoState{t.xi, t.omega}, Pose2::from_vector(t.mu), false};
}

FuseResult rpf_step(const InfoState& s_prev, const Pose2& mu_prev, const Pose2& u,
                    const NoiseCov& R, const Pose2& z, const InfoMatrix& qtilde) {
    const Observation o{z, qtilde};
    return rpf_step_multi(s_prev, mu_prev, u, R, std::span<const Observation>(&o, 1));
}

double translation_scale(const Pose2& v) { return std::hypot(v.x, v.y); }

Eigen::Vector3d scale_measurement(const Eigen::Vector3d& x, double target_scale) {
    return target_scale * x / std::hypot(x[0], x[1]);
}

Eigen::Matrix3d scale_measurement_jacobian(const Eigen::Vector3d& x, double target_scale) {
    // g = c x / s(x);  dg/dx = (c / s) (I - x w^T / s^2),  w = (x, y, 0).
    const double s = std::hypot(x[0], x[1]);
    const Eigen::Vector3d w(x[0], x[1], 0.0);
    return (target_scale / s) * (Eigen::Matrix3d::Identity() - x * w.transpose() / (s * s));
}

FuseResult eif_step(const InfoState& s_prev, const Pose2& mu_prev, const Pose2& u,
                    const NoiseCov& R, const Pose2& z, const InfoMatrix& qtilde) {
    const Prediction p = predict(s_prev, mu_prev, u, R);
    const Eigen::Vector3d mu_bar = u.vector();

    FuseResult r;
    Eigen::Matrix3d omega = p.omega_bar;
    Eigen::Vector3d xi = p.xi_bar;
    if (translation_scale(u) > kScaleFloor) {
        const double target = translation_scale(z);
        const Eigen::Matrix3d G = scale_measurement_jacobian(mu_bar, target);
        const Eigen::Vector3d innovation =
            z.vector() - scale_measurement(mu_bar, target) + G * mu_bar;
        omega += G.transpose() * qtilde * G;
        xi += G.transpose() * qtilde * innovation;
    } else {
        r.prediction_only = true;
    }
    r.state.omega = symmetrize(omega);
    r.state.xi = xi;
    r.mean = Pose2::from_vector(checked_inverse(r.state.omega) * xi);
    return r;
}

RelativePoseFuser::RelativePoseFuser(double sigma0) : sigma0_(sigma0) { reset(); }

void RelativePoseFuser::reset() {
    state_ = initial_info_state(sigma0_);
    mean_ = Pose2::identity();
}

Pose2 RelativePoseFuser::step(const Pose2& u, const NoiseCov& R, const Pose2& z,
                              const InfoMatrix& qtilde) {
    FuseResult r = rpf_step(state_, mean_, u, R, z, qtilde);
    state_ = r.state;
    mean_ = r.mean;
    return mean_;
}

Pose2 RelativePoseFuser::step_multi(const Pose2& u, const NoiseCov& R,
                                    std::span<const Observation> obs) {
    FuseResult r = rpf_step_multi(state_, mean_, u, R, obs);
    state_ = r.state;
    mean_ = r.mean;
    return mean_;
}

Pose2 RelativePoseFuser::step_scale_free(const Pose2& u, const NoiseCov& R, const Pose2& z,
                                         const InfoMatrix& qtilde) {
    FuseResult r = eif_step(state_, mean_, u, R, z, qtilde);
    state_ = r.state;
    mean_ = r.mean;
    return mean_;
}

}  // namespace sceneloc
