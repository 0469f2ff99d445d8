#include "sceneloc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sceneloc/baselines.hpp"
#include "sceneloc/errors.hpp"
#include "sceneloc/fusion_filter.hpp"
#include "sceneloc/trainer.hpp"

namespace sceneloc {

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<Pose2> accumulate(const Dataset& ds, Pose2 Frame::*reading) {
    std::vector<Pose2> out;
    out.reserve(ds.frames.size());
    Pose2 g = ds.start;
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        if (i > 0) g = compose(g, ds.frames[i].*reading);
        out.push_back(g);
    }
    return out;
}

}  // namespace

Aggregate aggregate(std::vector<double> values) {
    if (values.empty()) throw InvalidArgument("aggregate of an empty sample");
    std::sort(values.begin(), values.end());
    Aggregate a;
    double sum = 0.0;
    for (double v : values) sum += v;
    a.mean = sum / static_cast<double>(values.size());
    a.median = quantile_sorted(values, 0.5);
    a.q1 = quantile_sorted(values, 0.25);
    a.q3 = quantile_sorted(values, 0.75);
    return a;
}

SegmentStats segment_errors(const std::vector<Pose2>& est, const std::vector<Pose2>& truth, double seg_len) {
    if (!(seg_len > 0.0)) throw InvalidArgument("segment length must be positive");
    if (est.size() != truth.size()) throw DataError("estimate and truth differ in length");
    std::vector<double> arc(truth.size(), 0.0);
    for (std::size_t i = 1; i < truth.size(); ++i) {
        arc[i] = arc[i - 1] + std::hypot(truth[i].x - truth[i - 1].x, truth[i].y - truth[i - 1].y);
    }
    const double total = truth.empty() ? 0.0 : arc.back();
    const auto count = static_cast<std::size_t>(std::floor(total / seg_len));
    if (count == 0) throw DataError("trajectory is shorter than one segment");

    // Boundary k is the first index whose arc length reaches k * seg_len.
    std::vector<std::size_t> bounds{0};
    std::size_t i = 0;
    for (std::size_t k = 1; k <= count; ++k) {
        while (arc[i] < static_cast<double>(k) * seg_len) ++i;
        bounds.push_back(i);
    }

    SegmentStats st;
    st.seg_len = seg_len;
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t a = bounds[k], b = bounds[k + 1];
        const Pose2 pred = compose(truth[a], between(est[a], est[b]));
        st.dist_err.push_back(std::hypot(pred.x - truth[b].x, pred.y - truth[b].y));
        st.heading_err.push_back(std::abs(angle_diff(pred.theta, truth[b].theta)));
    }
    st.dist = aggregate(st.dist_err);
    st.heading = aggregate(st.heading_err);
    return st;
}

std::vector<Pose2> dead_reckoning_trajectory(const Dataset& ds) { return accumulate(ds, &Frame::u); }
std::vector<Pose2> eso_trajectory(const Dataset& ds) { return accumulate(ds, &Frame::z); }

std::vector<Pose2> fused_trajectory(const Dataset& ds, const InfoProvider& q, double sigma0) {
    std::vector<Pose2> out;
    out.reserve(ds.frames.size());
    RelativePoseFuser fuser(sigma0);
    Pose2 g = ds.start;
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        if (i > 0) {
            const Frame& f = ds.frames[i];
            const Pose2 mu = fuser.step(f.u, ds.sim.dr_cov(translation_scale(f.u)), f.z, q(static_cast<int>(i)));
            g = compose(g, mu);
        }
        out.push_back(g);
    }
    return out;
}

EvalOptions eval_options_from(Config& c) {
    EvalOptions o;
    o.seg_len = c.get_double("eval.seg_len", o.seg_len);
    o.hessian_sigma = c.get_double("eval.hessian_sigma", o.hessian_sigma);
    o.sampling_half = c.get_int("eval.sampling_half", o.sampling_half);
    o.sampling_temperature = c.get_double("eval.sampling_temperature", o.sampling_temperature);
    o.fixed_sigma_xy = c.get_double("eval.fixed_sigma_xy", o.fixed_sigma_xy);
    o.fixed_sigma_theta = c.get_double("eval.fixed_sigma_theta", o.fixed_sigma_theta);
    o.grid_cell = c.get_double("grid.cell", o.grid_cell);
    o.sigma0 = c.get_double("filter.sigma0", o.sigma0);
    if (!(o.seg_len > 0.0) || !(o.hessian_sigma > 0.0) || o.sampling_half < 1 || !(o.sampling_temperature > 0.0) ||
        !(o.fixed_sigma_xy > 0.0) || !(o.fixed_sigma_theta > 0.0)) {
        throw InvalidArgument("evaluation parameters must be positive");
    }
    return o;
}

BaselineInputs compute_baselines(const Dataset& ds, const EvalOptions& opt, bool with_sampling) {
    BaselineInputs in;
    const double sxy2 = opt.fixed_sigma_xy * opt.fixed_sigma_xy;
    in.fixed_cov = Eigen::Vector3d(sxy2, sxy2, opt.fixed_sigma_theta * opt.fixed_sigma_theta).asDiagonal();
    const std::size_t n = ds.frames.size();
    in.hessian_info.assign(n, InfoMatrix::Zero());
    if (with_sampling) in.sampling_cov.assign(n, NoiseCov::Identity());
    for (std::size_t t = 1; t < n; ++t) {
        const ScanPoints& ref = ds.frames[t - 1].scan;
        const ScanPoints& tgt = ds.frames[t].scan;
        if (ref.empty() || tgt.empty()) continue;
        const Pose2& z = ds.frames[t].z;
        in.hessian_info[t] =
            hessian_information(point_to_line_objective(ref, tgt, z, opt.hessian_sigma * opt.hessian_sigma));
        if (with_sampling) {
            const MatchResult m = correlative_match(ref, tgt, z, ds.sim.window);
            in.sampling_cov[t] = match_sampling_covariance(m, opt.sampling_half, opt.sampling_temperature);
        }
    }
    return in;
}

std::vector<InfoMatrix> learned_information(const Dataset& ds, const NetParams& params, double grid_cell) {
    const GridSpec spec = grid_spec_for(params.arch, grid_cell);
    std::vector<InfoMatrix> out(ds.frames.size(), InfoMatrix::Zero());
    for (std::size_t t = 1; t < ds.frames.size(); ++t) {
        out[t] = predict_information(params, rasterize(ds.frames[t - 1].scan, spec));
    }
    return out;
}

InfoProvider baseline_provider(const std::string& method, const BaselineInputs& in, double scale) {
    if (!(scale > 0.0)) throw InvalidArgument("scale must be positive");
    if (method == "fused_fixed") {
        const InfoMatrix q = symmetrize((scale * in.fixed_cov).inverse());
        return [q](int) { return q; };
    }
    if (method == "fused_hessian") {
        return [&in, scale](int t) { return InfoMatrix(in.hessian_info.at(t) / scale); };
    }
    if (method == "fused_sampling") {
        if (in.sampling_cov.empty()) throw InvalidArgument("sampling baseline was not computed");
        return [&in, scale](int t) { return InfoMatrix(symmetrize(guarded_inverse(scale * in.sampling_cov.at(t)))); };
    }
    throw InvalidArgument("not a rescalable baseline: " + method);
}

CompareResult compare_methods(const Dataset& test, const std::optional<Dataset>& calib,
                              const std::optional<NetParams>& model, const std::vector<std::string>& methods,
                              const EvalOptions& opt) {
    for (const auto& m : methods) {
        if (std::find(all_methods().begin(), all_methods().end(), m) == all_methods().end()) {
            throw InvalidArgument("unknown method '" + m + "'");
        }
        if (m == "fused_learned" && !model) throw InvalidArgument("fused_learned needs a model checkpoint");
    }
    const bool need_sampling = std::find(methods.begin(), methods.end(), "fused_sampling") != methods.end();

    CompareResult res;
    res.truth = test.truth_global();
    const BaselineInputs test_in = compute_baselines(test, opt, need_sampling);
    std::optional<BaselineInputs> calib_in;
    std::vector<Pose2> calib_truth;
    if (calib) {
        calib_in = compute_baselines(*calib, opt, need_sampling);
        calib_truth = calib->truth_global();
    }

    for (const auto& m : methods) {
        MethodRow row;
        row.method = m;
        if (m == "dr_only") {
            row.trajectory = dead_reckoning_trajectory(test);
        } else if (m == "eso_only") {
            row.trajectory = eso_trajectory(test);
        } else if (m == "fused_learned") {
            const std::vector<InfoMatrix> q = learned_information(test, *model, opt.grid_cell);
            row.trajectory = fused_trajectory(test, [&q](int t) { return q[t]; }, opt.sigma0);
        } else {
            if (calib_in) {
                const std::vector<double> grid = default_scale_grid();
                row.scale = rescale_search(grid, [&](double s) {
                    try {
                        const auto traj = fused_trajectory(*calib, baseline_provider(m, *calib_in, s), opt.sigma0);
                        return segment_errors(traj, calib_truth, opt.seg_len).dist.mean;
                    } catch (const NumericalError&) {
                        return std::numeric_limits<double>::infinity();
                    }
                });
            }
            row.trajectory = fused_trajectory(test, baseline_provider(m, test_in, row.scale), opt.sigma0);
        }
        row.stats = segment_errors(row.trajectory, res.truth, opt.seg_len);
        res.rows.push_back(std::move(row));
    }
    return res;
}

std::string format_metrics_row(const MethodRow& r) {
    const auto& d = r.stats.dist;
    const auto& h = r.stats.heading;
    std::string s = r.method + ',' + format_double(r.scale) + ',' + std::to_string(r.stats.dist_err.size());
    for (double v : {d.mean, d.median, d.q1, d.q3, h.mean, h.median, h.q1, h.q3}) s += ',' + format_double(v);
    return s;
}

std::string format_metrics(const CompareResult& r) {
    std::string s = std::string(kMetricsHeader) + "\n";
    for (const auto& row : r.rows) s += format_metrics_row(row) + "\n";
    return s;
}

std::string format_trajectories(const CompareResult& r) {
    std::string s = "t,x,y,theta,source\n";
    auto emit = [&s](const std::vector<Pose2>& traj, const std::string& source) {
        for (std::size_t t = 0; t < traj.size(); ++t) {
            s += std::to_string(t) + ',' + format_double(traj[t].x) + ',' + format_double(traj[t].y) + ',' +
                 format_double(traj[t].theta) + ',' + source + '\n';
        }
    };
    emit(r.truth, "truth");
    for (const auto& row : r.rows) emit(row.trajectory, row.method);
    return s;
}

}  // namespace sceneloc
