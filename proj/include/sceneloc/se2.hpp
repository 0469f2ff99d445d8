#pragma once

#include <Eigen/Core>

namespace sceneloc {

/// Planar pose (x, y, theta). Used both for relative motions between
/// consecutive frames and for global poses. Angles are radians and every
/// operation that returns a Pose2 leaves theta in (-pi, pi].
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    static Pose2 identity() { return {}; }
    static Pose2 from_vector(const Eigen::Vector3d& v);

    Eigen::Vector3d vector() const { return {x, y, theta}; }
    Pose2 normalized() const;
    bool finite() const;

    friend bool operator==(const Pose2&, const Pose2&) = default;
};

/// 3x3 homogeneous transform, bottom row (0, 0, 1).
using HomMat3 = Eigen::Matrix3d;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

/// Shortest signed angular distance a - b, in (-pi, pi].
double angle_diff(double a, double b);

/// 2x2 rotation by theta.
Eigen::Matrix2d rotation2(double theta);

HomMat3 to_matrix(const Pose2& p);

/// Inverse of to_matrix. Throws InvalidArgument when the rotation block is
/// not orthonormal (tolerance 1e-9) or the bottom row is not (0, 0, 1).
Pose2 from_matrix(const HomMat3& m);

/// a * b in matrix form: b expressed in the frame of a.
Pose2 compose(const Pose2& a, const Pose2& b);

Pose2 inverse(const Pose2& p);

/// inverse(a) * b: pose of b seen from a.
Pose2 between(const Pose2& a, const Pose2& b);

/// One step of global pose accumulation: previous global pose followed by
/// the fused relative motion.
Pose2 accumulate_global(const Pose2& g_prev, const Pose2& rel);

}  // namespace sceneloc
