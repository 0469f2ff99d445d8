#pragma once

#include <span>

#include <Eigen/Core>

#include "sceneloc/se2.hpp"

namespace sceneloc {

/// Canonical (information-form) Gaussian over a relative pose.
struct InfoState {
    Eigen::Vector3d xi = Eigen::Vector3d::Zero();
    Eigen::Matrix3d omega = Eigen::Matrix3d::Zero();
};

/// Covariance of a pose estimate, symmetric positive definite.
using NoiseCov = Eigen::Matrix3d;
/// Inverse measurement covariance, symmetric positive semidefinite. Zero
/// means the measurement carries no information.
using InfoMatrix = Eigen::Matrix3d;

struct Moments {
    Pose2 mean;
    NoiseCov cov;
};

struct FuseResult {
    InfoState state;
    Pose2 mean;
    /// Set by eif_step when the measurement was dropped (scale below floor).
    bool prediction_only = false;
};

/// One exteroceptive observation and its information matrix.
struct Observation {
    Pose2 z;
    InfoMatrix info;
};

inline constexpr double kMinEigenvalue = 1e-12;
inline constexpr double kInversionJitter = 1e-10;
inline constexpr double kDefaultInitialSigma = 1e-3;
inline constexpr double kScaleFloor = 1e-3;

Eigen::Matrix3d symmetrize(const Eigen::Matrix3d& m);

/// Inverse of a symmetric 3x3 matrix. If its smallest eigenvalue is below
/// kMinEigenvalue, kInversionJitter * I is added first. `jittered` reports it.
Eigen::Matrix3d guarded_inverse(const Eigen::Matrix3d& m, bool* jittered = nullptr);

/// Filter state after a reset: zero mean, isotropic covariance sigma0^2 I.
InfoState initial_info_state(double sigma0 = kDefaultInitialSigma);

/// mu = Omega^-1 xi, Sigma = Omega^-1. Throws SingularStateError when the
/// smallest eigenvalue of omega is not above kMinEigenvalue.
Moments info_to_moments(const InfoState& s);

/// Re-expresses the previous relative estimate in the latest vehicle frame:
/// the information vector is reset to zero (zero relative pose) and the
/// information matrix is rotated by -mu_prev.theta.
InfoState rotate_information(const InfoState& s, const Pose2& mu_prev);

/// Every intermediate of one fusion step, kept for reverse-mode
/// differentiation.
struct RpfTrace {
    Eigen::Matrix3d rot;         ///< rotation applied to the previous omega
    Eigen::Matrix3d omega_hat;   ///< rotated previous information
    Eigen::Matrix3d omega_hat_inv;
    Eigen::Matrix3d pred_cov;    ///< omega_hat^-1 + R
    Eigen::Matrix3d omega_bar;   ///< predicted information
    Eigen::Vector3d xi_bar;
    Eigen::Matrix3d omega;       ///< posterior information
    Eigen::Vector3d xi;
    Eigen::Matrix3d omega_inv;
    Eigen::Vector3d mu;          ///< raw posterior mean, angle not wrapped
};

/// Relative pose fusion step with full intermediate trace.
RpfTrace rpf_step_traced(const InfoState& s_prev, const Pose2& mu_prev, const Pose2& u,
                         const NoiseCov& R, std::span<const Observation> obs);

/// Prediction with the proprioceptive increment u (covariance R) followed
/// by the information update with the exteroceptive reading z (information
/// qtilde).
FuseResult rpf_step(const InfoState& s_prev, const Pose2& mu_prev, const Pose2& u,
                    const NoiseCov& R, const Pose2& z, const InfoMatrix& qtilde);

/// Same as rpf_step with any number of independent exteroceptive readings;
/// their information adds.
FuseResult rpf_step_multi(const InfoState& s_prev, const Pose2& mu_prev, const Pose2& u,
                          const NoiseCov& R, std::span<const Observation> obs);

/// Translation norm sqrt(x^2 + y^2).
double translation_scale(const Pose2& v);

/// Scale-fixing measurement model g(x) = s(z) x / s(x) and its Jacobian.
Eigen::Vector3d scale_measurement(const Eigen::Vector3d& x, double target_scale);
Eigen::Matrix3d scale_measurement_jacobian(const Eigen::Vector3d& x, double target_scale);

/// Extended information filter step for odometry without reliable scale:
/// the measurement model is linearized at the prediction mean u. Falls back
/// to a prediction-only step when s(u) <= kScaleFloor.
FuseResult eif_step(const InfoState& s_prev, const Pose2& mu_prev, const Pose2& u,
                    const NoiseCov& R, const Pose2& z, const InfoMatrix& qtilde);

/// Recurrent wrapper that carries state and the previous mean between steps.
class RelativePoseFuser {
public:
    explicit RelativePoseFuser(double sigma0 = kDefaultInitialSigma);

    void reset();
    Pose2 step(const Pose2& u, const NoiseCov& R, const Pose2& z, const InfoMatrix& qtilde);
    Pose2 step_multi(const Pose2& u, const NoiseCov& R, std::span<const Observation> obs);
    Pose2 step_scale_free(const Pose2& u, const NoiseCov& R, const Pose2& z,
                          const InfoMatrix& qtilde);

    const InfoState& state() const { return state_; }
    const Pose2& last_mean() const { return mean_; }

private:
    double sigma0_;
    InfoState state_;
    Pose2 mean_;
};

}  // namespace sceneloc
