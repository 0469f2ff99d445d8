#include "sceneloc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "sceneloc/errors.hpp"

namespace sceneloc {

NoiseCov hessian_covariance(const ObjectiveEval& ev) {
    if (!(ev.sigma2 > 0.0)) throw InvalidArgument("sigma^2 must be positive");
    const Eigen::Matrix3d h = symmetrize(ev.hessian);
    Eigen::LLT<Eigen::Matrix3d> llt(h);
    if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 1e-12)) {
        throw NumericalError("Hessian is not positive definite");
    }
    const Eigen::Matrix3d inv = llt.solve(Eigen::Matrix3d::Identity());
    return symmetrize(ev.sigma2 * inv);
}

InfoMatrix hessian_information(const ObjectiveEval& ev) {
    if (!(ev.sigma2 > 0.0)) throw InvalidArgument("sigma^2 must be positive");
    return symmetrize(ev.hessian / ev.sigma2);
}

ObjectiveEval point_to_line_objective(std::span<const Eigen::Vector2d> ref,
                                      std::span<const Eigen::Vector2d> tgt, const Pose2& pose,
                                      double sigma2, double max_correspondence) {
    if (ref.empty() || tgt.empty()) throw InvalidArgument("point_to_line_objective: empty scan");
    const std::vector<Eigen::Vector2d> normals = scan_normals(ref);
    const double c = std::cos(pose.theta), s = std::sin(pose.theta);
    const double max_d2 = max_correspondence * max_correspondence;

    ObjectiveEval ev;
    ev.sigma2 = sigma2;
    for (const auto& p : tgt) {
        const Eigen::Vector2d q(c * p.x() - s * p.y() + pose.x, s * p.x() + c * p.y() + pose.y);
        double best = std::numeric_limits<double>::infinity();
        std::size_t j = 0;
        for (std::size_t k = 0; k < ref.size(); ++k) {
            const double d2 = (ref[k] - q).squaredNorm();
            if (d2 < best) {
                best = d2;
                j = k;
            }
        }
        if (best > max_d2 || normals[j].squaredNorm() == 0.0) continue;
        const Eigen::Vector2d& n = normals[j];
        const double e = n.dot(q - ref[j]);
        // d q / d theta
        const Eigen::Vector2d dq(-s * p.x() - c * p.y(), c * p.x() - s * p.y());
        const Eigen::Vector3d J(n.x(), n.y(), n.dot(dq));
        ev.value += 0.5 * e * e;
        ev.gradient += e * J;
        ev.hessian += J * J.transpose();
    }
    return ev;
}

WeightedSamples::WeightedSamples(std::vector<Pose2> poses, std::vector<double> weights)
    : poses_(std::move(poses)), weights_(std::move(weights)) {
    if (poses_.size() != weights_.size()) throw InvalidArgument("samples and weights differ in length");
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("sample weights must be finite and >= 0");
        total += w;
    }
    if (!(total > 0.0)) throw InvalidArgument("sample weights sum to zero");
    for (double& w : weights_) w /= total;
}

Moments sampling_covariance(const WeightedSamples& s) {
    if (s.size() < 2) throw InvalidArgument("sampling covariance needs at least two samples");
    const Pose2& ref = s.poses().front();
    auto offset = [&](const Pose2& p) {
        return Eigen::Vector3d(p.x, p.y, angle_diff(p.theta, ref.theta));
    };
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < s.size(); ++i) mean += s.weights()[i] * offset(s.poses()[i]);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Eigen::Vector3d d = offset(s.poses()[i]) - mean;
        cov += s.weights()[i] * d * d.transpose();
    }
    return Moments{Pose2{mean[0], mean[1], normalize_angle(ref.theta + mean[2])}, symmetrize(cov)};
}

WeightedSamples match_lattice_samples(const MatchResult& m, int half, double temperature) {
    if (half < 1 || !(temperature > 0.0)) throw InvalidArgument("bad lattice parameters");
    const ScoreGrid& g = m.grid;
    std::vector<Pose2> poses;
    std::vector<double> weights;
    for (int ix = std::max(0, m.ix - half); ix <= std::min(g.nx - 1, m.ix + half); ++ix) {
        for (int iy = std::max(0, m.iy - half); iy <= std::min(g.ny - 1, m.iy + half); ++iy) {
            poses.push_back(g.pose_at(ix, iy, m.ith));
            weights.push_back(std::exp((g.at(ix, iy, m.ith) - m.score) / temperature));
        }
    }
    return WeightedSamples(std::move(poses), std::move(weights));
}

NoiseCov match_sampling_covariance(const MatchResult& m, int half, double temperature) {
    const Moments xy = sampling_covariance(match_lattice_samples(m, half, temperature));
    const ScoreGrid& g = m.grid;

    double heading_var = 0.0;
    if (g.nth > 1) {
        std::vector<double> profile(g.nth, -std::numeric_limits<double>::infinity());
        for (int ix = 0; ix < g.nx; ++ix) {
            for (int iy = 0; iy < g.ny; ++iy) {
                for (int ith = 0; ith < g.nth; ++ith) profile[ith] = std::max(profile[ith], g.at(ix, iy, ith));
            }
        }
        double wsum = 0.0, mean = 0.0;
        std::vector<double> w(g.nth);
        for (int ith = 0; ith < g.nth; ++ith) {
            w[ith] = std::exp((profile[ith] - m.score) / temperature);
            wsum += w[ith];
            mean += w[ith] * ith;
        }
        mean /= wsum;
        for (int ith = 0; ith < g.nth; ++ith) heading_var += w[ith] * (ith - mean) * (ith - mean);
        heading_var = heading_var / wsum * g.res_theta * g.res_theta;
    }

    NoiseCov cov = NoiseCov::Zero();
    cov.topLeftCorner<2, 2>() = xy.cov.topLeftCorner<2, 2>();
    cov(2, 2) = heading_var;
    cov(0, 0) += g.res_xy * g.res_xy / 12.0;
    cov(1, 1) += g.res_xy * g.res_xy / 12.0;
    cov(2, 2) += g.res_theta * g.res_theta / 12.0;
    return cov;
}

std::vector<double> default_scale_grid() {
    std::vector<double> grid;
    for (int e = -6; e <= 6; ++e) grid.push_back(std::ldexp(1.0, e));
    return grid;
}

double rescale_search(std::span<const double> grid, const std::function<double(double)>& eval_fn) {
    if (grid.empty()) throw InvalidArgument("rescale_search: empty grid");
    double best_scale = grid.front();
    double best_err = std::numeric_limits<double>::infinity();
    bool have = false;
    for (double scale : grid) {
        double err = eval_fn(scale);
        if (std::isnan(err)) err = std::numeric_limits<double>::infinity();
        if (!have || err < best_err || (err == best_err && scale < best_scale)) {
            best_err = err;
            best_scale = scale;
            have = true;
        }
    }
    return best_scale;
}

}  // namespace sceneloc
