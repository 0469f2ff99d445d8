#include "sceneloc/se2.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "sceneloc/errors.hpp"

namespace sceneloc {

namespace {
constexpr double kMatrixTol = 1e-9;
}

Pose2 Pose2::from_vector(const Eigen::Vector3d& v) {
    return Pose2{v[0], v[1], normalize_angle(v[2])};
}

Pose2 Pose2::normalized() const { return {x, y, normalize_angle(theta)}; }

bool Pose2::finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta);
}

double normalize_angle(double a) {
    constexpr double pi = std::numbers::pi;
    if (a > -pi && a <= pi) return a;
    double r = std::remainder(a, 2.0 * pi);  // [-pi, pi]
    if (r <= -pi) r += 2.0 * pi;
    return r;
}

double angle_diff(double a, double b) { return normalize_angle(a - b); }

Eigen::Matrix2d rotation2(double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    return r;
}

HomMat3 to_matrix(const Pose2& p) {
    HomMat3 m = HomMat3::Identity();
    m.topLeftCorner<2, 2>() = rotation2(p.theta);
    m(0, 2) = p.x;
    m(1, 2) = p.y;
    return m;
}

Pose2 from_matrix(const HomMat3& m) {
    if (!m.allFinite()) throw InvalidArgument("from_matrix: non-finite entries");
    if (std::abs(m(2, 0)) > kMatrixTol || std::abs(m(2, 1)) > kMatrixTol ||
        std::abs(m(2, 2) - 1.0) > kMatrixTol) {
        throw InvalidArgument("from_matrix: bottom row is not (0, 0, 1)");
    }
    const Eigen::Matrix2d r = m.topLeftCorner<2, 2>();
    const double orth = (r.transpose() * r - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
    if (orth > kMatrixTol || std::abs(r.determinant() - 1.0) > kMatrixTol) {
        throw InvalidArgument("from_matrix: top-left block is not a rotation");
    }
    return Pose2{m(0, 2), m(1, 2), normalize_angle(std::atan2(r(1, 0), r(0, 0)))};
}

Pose2 compose(const Pose2& a, const Pose2& b) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    return Pose2{a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y,
                 normalize_angle(a.theta + b.theta)};
}

Pose2 inverse(const Pose2& p) {
    const double c = std::cos(p.theta);
    const double s = std::sin(p.theta);
    return Pose2{-c * p.x - s * p.y, s * p.x - c * p.y, normalize_angle(-p.theta)};
}

Pose2 between(const Pose2& a, const Pose2& b) { return compose(inverse(a), b); }

Pose2 accumulate_global(const Pose2& g_prev, const Pose2& rel) { return compose(g_prev, rel); }

}  // namespace sceneloc
