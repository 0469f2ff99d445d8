#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sceneloc/fusion_filter.hpp"
#include "sceneloc/scan_matcher.hpp"

namespace sceneloc {

/// Matching objective evaluated at a pose: value, gradient, Hessian, and the
/// per-measurement noise variance.
struct ObjectiveEval {
    double value = 0.0;
    Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
    Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();
    double sigma2 = 1.0;
};

/// sigma^2 * Hessian^-1. Throws NumericalError when the Hessian is not
/// positive definite, which is the degenerate corridor case.
NoiseCov hessian_covariance(const ObjectiveEval& ev);

/// Hessian / sigma^2, i.e. the information form of hessian_covariance. Stays
/// defined when the Hessian is singular.
InfoMatrix hessian_information(const ObjectiveEval& ev);

/// Point-to-line least squares objective of the target scan placed at
/// `pose` against the reference scan, with nearest-neighbour
/// correspondences. The Hessian is the Gauss-Newton J^T J.
ObjectiveEval point_to_line_objective(std::span<const Eigen::Vector2d> ref,
                                      std::span<const Eigen::Vector2d> tgt, const Pose2& pose,
                                      double sigma2, double max_correspondence = 1.0);

/// Poses with weights normalized to sum to one.
class WeightedSamples {
public:
    /// Throws InvalidArgument on size mismatch, negative or all-zero weights.
    WeightedSamples(std::vector<Pose2> poses, std::vector<double> weights);

    const std::vector<Pose2>& poses() const { return poses_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return poses_.size(); }

private:
    std::vector<Pose2> poses_;
    std::vector<double> weights_;
};

/// Weighted mean and covariance of the samples. Headings are averaged as
/// offsets from the first sample. Throws InvalidArgument for fewer than two
/// samples.
Moments sampling_covariance(const WeightedSamples& s);

/// Samples on a (2*half+1)^2 translation lattice around the best match at
/// the matched heading, weighted by exp((score - best) / temperature).
WeightedSamples match_lattice_samples(const MatchResult& m, int half = 7, double temperature = 1.0);

/// Sampling-method covariance from a match: the translation block comes from
/// the fixed-heading lattice, the heading variance from the per-heading best
/// score profile, and a uniform quantization variance res^2/12 is added on
/// each axis so the result is invertible.
NoiseCov match_sampling_covariance(const MatchResult& m, int half = 7, double temperature = 1.0);

/// 13 scales 2^-6 ... 2^6.
std::vector<double> default_scale_grid();

/// Scale of `grid` minimizing eval_fn; among tied scales the smallest wins.
/// Throws InvalidArgument on an empty grid.
double rescale_search(std::span<const double> grid, const std::function<double(double)>& eval_fn);

}  // namespace sceneloc
