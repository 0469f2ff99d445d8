#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sceneloc/network.hpp"
#include "sceneloc/run_config.hpp"
#include "sceneloc/simulator.hpp"

namespace sceneloc {

struct Aggregate {
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;  ///< 25th percentile, linear interpolation
    double q3 = 0.0;  ///< 75th percentile
};

/// Throws InvalidArgument on an empty sample.
Aggregate aggregate(std::vector<double> values);

struct SegmentStats {
    double seg_len = 0.0;
    std::vector<double> dist_err;     ///< meters, one per segment
    std::vector<double> heading_err;  ///< radians, one per segment
    Aggregate dist;
    Aggregate heading;
};

/// Cuts the trajectories at ground-truth arc lengths k * seg_len (the
/// remainder is dropped), replays the estimated motion of each piece from
/// the true pose at its start and measures the error at its end. Throws
/// DataError if the trajectories differ in length or the truth is shorter
/// than one segment.
SegmentStats segment_errors(const std::vector<Pose2>& est, const std::vector<Pose2>& truth, double seg_len);

/// Information matrix of the exteroceptive reading of frame t (t >= 1).
using InfoProvider = std::function<InfoMatrix(int t)>;

std::vector<Pose2> dead_reckoning_trajectory(const Dataset& ds);
std::vector<Pose2> eso_trajectory(const Dataset& ds);
/// Runs the relative pose fuser over every frame, starting at the true start.
std::vector<Pose2> fused_trajectory(const Dataset& ds, const InfoProvider& q, double sigma0 = kDefaultInitialSigma);

struct EvalOptions {
    double seg_len = 40.0;
    /// Per-point noise variance of the point-to-line objective.
    double hessian_sigma = 0.01;
    int sampling_half = 7;
    double sampling_temperature = 10.0;  ///< score units per e-fold of weight
    double fixed_sigma_xy = 0.05;
    double fixed_sigma_theta = 0.005;
    double grid_cell = 2.4;
    double sigma0 = kDefaultInitialSigma;
};

EvalOptions eval_options_from(Config& c);

/// Per-frame uncertainty of the scene-agnostic baselines, before rescaling.
struct BaselineInputs {
    NoiseCov fixed_cov;
    std::vector<InfoMatrix> hessian_info;  ///< index t, entry 0 unused
    std::vector<NoiseCov> sampling_cov;
};

/// `with_sampling` = false skips the (slow) correlative matches.
BaselineInputs compute_baselines(const Dataset& ds, const EvalOptions& opt, bool with_sampling = true);

/// Learned information matrix for every frame from the previous scan.
std::vector<InfoMatrix> learned_information(const Dataset& ds, const NetParams& params, double grid_cell);

inline const std::vector<std::string>& all_methods() {
    static const std::vector<std::string> m{"dr_only",       "eso_only",       "fused_fixed",
                                            "fused_hessian", "fused_sampling", "fused_learned"};
    return m;
}

/// Information provider of a baseline method with its covariance scaled by
/// `scale`. Throws InvalidArgument for unknown or non-baseline methods.
InfoProvider baseline_provider(const std::string& method, const BaselineInputs& in, double scale);

struct MethodRow {
    std::string method;
    double scale = 1.0;
    SegmentStats stats;
    std::vector<Pose2> trajectory;
};

struct CompareResult {
    std::vector<Pose2> truth;
    std::vector<MethodRow> rows;
};

/// Evaluates each method on `test`. Rescalable baselines pick their scale
/// from the default grid by mean segment position error on `calib`; without
/// calib they keep scale 1. Throws InvalidArgument if fused_learned is
/// requested without a model.
CompareResult compare_methods(const Dataset& test, const std::optional<Dataset>& calib,
                              const std::optional<NetParams>& model, const std::vector<std::string>& methods,
                              const EvalOptions& opt);

inline constexpr const char* kMetricsHeader =
    "method,scale,segments,dist_mean,dist_median,dist_q1,dist_q3,heading_mean,heading_median,heading_q1,heading_q3";
std::string format_metrics_row(const MethodRow& row);
std::string format_metrics(const CompareResult& r);

/// `t,x,y,theta,source` rows for the truth and every method.
std::string format_trajectories(const CompareResult& r);

}  // namespace sceneloc
