#include "sceneloc/simulator.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "sceneloc/errors.hpp"
#include "sceneloc/rng.hpp"

namespace sceneloc {

namespace {

constexpr std::uint32_t kTagDeadReckoning = 1;
constexpr std::uint32_t kTagEso = 2;
constexpr std::uint32_t kTagGps = 3;
constexpr std::uint32_t kTagScan = 4;

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be positive");
}

void require_non_negative(double v, const char* what) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be >= 0");
}

Pose2 inject(const Pose2& x, const ScanPoints& ref, const SimConfig& cfg, CounterRng& rng) {
    const NoiseCov cov = injection_covariance(ref, cfg);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov.topLeftCorner<2, 2>());
    const Eigen::Vector2d d = es.eigenvectors() *
                              Eigen::Vector2d(std::sqrt(std::max(0.0, es.eigenvalues()[0])) * rng.normal(),
                                              std::sqrt(std::max(0.0, es.eigenvalues()[1])) * rng.normal());
    const double dth = std::sqrt(cov(2, 2)) * rng.normal();
    return Pose2{x.x + d.x(), x.y + d.y(), normalize_angle(x.theta + dth)};
}

}  // namespace

std::string to_string(EsoMode m) {
    switch (m) {
        case EsoMode::match: return "match";
        case EsoMode::inject: return "inject";
        case EsoMode::inject_scale_free: return "inject_scale_free";
    }
    return "?";
}

EsoMode parse_eso_mode(const std::string& s) {
    if (s == "match") return EsoMode::match;
    if (s == "inject") return EsoMode::inject;
    if (s == "inject_scale_free") return EsoMode::inject_scale_free;
    throw InvalidArgument("unknown eso mode '" + s + "'");
}

void SimConfig::validate() const {
    if (lidar.beams < 0) throw InvalidArgument("lidar beams must be >= 0");
    require_positive(lidar.max_range, "lidar max range");
    require_positive(lidar.span, "lidar span");
    // Noise levels may be zero for noise-free runs.
    require_non_negative(lidar.range_sigma, "lidar range sigma");
    require_non_negative(dr_sigma_x, "dead reckoning sigma_x");
    require_non_negative(dr_sigma_y, "dead reckoning sigma_y");
    require_non_negative(dr_sigma_theta, "dead reckoning sigma_theta");
    require_positive(dr_min_distance, "dead reckoning minimum distance");
    require_non_negative(injection.sigma_min, "injection sigma_min");
    require_non_negative(injection.sigma_max, "injection sigma_max");
    require_non_negative(injection.sigma_theta, "injection sigma_theta");
    require_non_negative(gps_sigma, "gps sigma");
    require_non_negative(gps_sigma_theta, "gps heading sigma");
    if (gps_every < 1) throw InvalidArgument("gps interval must be >= 1");
    require_positive(trigger_distance, "trigger distance");
    require_positive(trigger_heading, "trigger heading");
    require_positive(window.res_xy, "match resolution");
    require_positive(window.res_theta, "match heading resolution");
}

NoiseCov SimConfig::dr_cov_per_meter() const {
    return Eigen::Vector3d(dr_sigma_x * dr_sigma_x, dr_sigma_y * dr_sigma_y, dr_sigma_theta * dr_sigma_theta)
        .asDiagonal();
}

NoiseCov SimConfig::dr_cov(double distance) const {
    return dr_cov_per_meter() * std::max(distance, dr_min_distance);
}

World build_world(const Scenario& sc) {
    if (sc.world == "corridor") return build_corridor(sc.length, sc.width, OpeningSpec{sc.end_caps});
    if (sc.world == "ring") return build_ring_corridor(sc.side, sc.width);
    throw InvalidArgument("unknown world type '" + sc.world + "'");
}

PathSamples build_path(const Scenario& sc) {
    if (sc.world == "corridor") {
        return make_corridor_path(sc.margin, sc.length - sc.margin, sc.weave, sc.path_step);
    }
    if (sc.world == "ring") return make_ring_path(sc.side, sc.width, sc.laps, sc.weave, sc.path_step);
    throw InvalidArgument("unknown world type '" + sc.world + "'");
}

std::vector<Pose2> Dataset::truth_global() const {
    std::vector<Pose2> out;
    out.reserve(frames.size());
    Pose2 g = start;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (i > 0) g = compose(g, frames[i].x);
        out.push_back(g);
    }
    return out;
}

std::vector<std::size_t> trigger_indices(const PathSamples& path, double distance, double heading) {
    std::vector<std::size_t> idx;
    if (path.empty()) return idx;
    idx.push_back(0);
    double arc = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        arc += std::hypot(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y);
        const Pose2& last = path[idx.back()];
        if (arc >= distance || std::abs(angle_diff(path[i].theta, last.theta)) >= heading) {
            idx.push_back(i);
            arc = 0.0;
        }
    }
    return idx;
}

NoiseCov injection_covariance(const ScanPoints& ref, const SimConfig& cfg) {
    const InjectionSpec& in = cfg.injection;
    const Eigen::Matrix2d scatter = normal_scatter(ref);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(scatter);
    Eigen::Matrix2d xy = Eigen::Matrix2d::Zero();
    for (int k = 0; k < 2; ++k) {
        const double f = std::max(0.0, 1.0 - 2.0 * es.eigenvalues()[k]);
        const double var = in.sigma_min * in.sigma_min +
                           (in.sigma_max * in.sigma_max - in.sigma_min * in.sigma_min) * f * f;
        xy += var * es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose();
    }
    NoiseCov cov = NoiseCov::Zero();
    cov.topLeftCorner<2, 2>() = 0.5 * (xy + xy.transpose());
    cov(2, 2) = in.sigma_theta * in.sigma_theta;
    return cov;
}

Dataset simulate_run(const World& world, const PathSamples& path, const SimConfig& cfg) {
    cfg.validate();
    if (path.empty()) throw InvalidArgument("empty path");
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (!path[i].finite() || !world.contains({path[i].x, path[i].y})) {
            throw InvalidArgument("path leaves the world at sample " + std::to_string(i));
        }
    }
    const std::vector<std::size_t> idx = trigger_indices(path, cfg.trigger_distance, cfg.trigger_heading);

    Dataset ds;
    ds.sim = cfg;
    ds.start = path[idx.front()];
    ds.frames.reserve(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const Pose2& pose = path[idx[k]];
        Frame f;
        f.t = static_cast<int>(k);
        CounterRng scan_rng(cfg.seed, stream_id(kTagScan, k));
        f.scan = raycast_scan(world, pose, cfg.lidar, &scan_rng);
        if (k > 0) {
            const Frame& prev = ds.frames.back();
            f.x = between(path[idx[k - 1]], pose);

            CounterRng dr_rng(cfg.seed, stream_id(kTagDeadReckoning, k));
            const NoiseCov r = cfg.dr_cov(translation_scale(f.x));
            f.u = Pose2{f.x.x + std::sqrt(r(0, 0)) * dr_rng.normal(), f.x.y + std::sqrt(r(1, 1)) * dr_rng.normal(),
                        normalize_angle(f.x.theta + std::sqrt(r(2, 2)) * dr_rng.normal())};

            CounterRng eso_rng(cfg.seed, stream_id(kTagEso, k));
            switch (cfg.eso_mode) {
                case EsoMode::match:
                    f.z = correlative_match(prev.scan, f.scan, f.u, cfg.window).pose;
                    break;
                case EsoMode::inject:
                    f.z = inject(f.x, prev.scan, cfg, eso_rng);
                    break;
                case EsoMode::inject_scale_free: {
                    const Pose2 z = inject(f.x, prev.scan, cfg, eso_rng);
                    const double s = translation_scale(z);
                    f.z = s > kScaleFloor ? Pose2{z.x / s, z.y / s, z.theta / s} : z;
                    break;
                }
            }
        }
        if (k % static_cast<std::size_t>(cfg.gps_every) == 0) {
            CounterRng gps_rng(cfg.seed, stream_id(kTagGps, k));
            Pose2 g{pose.x + cfg.gps_sigma * gps_rng.normal(), pose.y + cfg.gps_sigma * gps_rng.normal(),
                    normalize_angle(pose.theta + cfg.gps_sigma_theta * gps_rng.normal())};
            f.gps = g;
        }
        ds.frames.push_back(std::move(f));
    }
    return ds;
}

SimConfig sim_config_from(Config& c) {
    SimConfig s;
    s.seed = c.get_u64("seed", s.seed);
    s.lidar.beams = c.get_int("lidar.beams", s.lidar.beams);
    s.lidar.max_range = c.get_double("lidar.max_range", s.lidar.max_range);
    s.lidar.span = c.get_double("lidar.span", s.lidar.span);
    s.lidar.range_sigma = c.get_double("lidar.range_sigma", s.lidar.range_sigma);
    s.dr_sigma_x = c.get_double("dr.sigma_x", s.dr_sigma_x);
    s.dr_sigma_y = c.get_double("dr.sigma_y", s.dr_sigma_y);
    s.dr_sigma_theta = c.get_double("dr.sigma_theta", s.dr_sigma_theta);
    s.dr_min_distance = c.get_double("dr.min_distance", s.dr_min_distance);
    s.eso_mode = parse_eso_mode(c.get_string("eso.mode", to_string(s.eso_mode)));
    s.injection.sigma_min = c.get_double("eso.sigma_min", s.injection.sigma_min);
    s.injection.sigma_max = c.get_double("eso.sigma_max", s.injection.sigma_max);
    s.injection.sigma_theta = c.get_double("eso.sigma_theta", s.injection.sigma_theta);
    s.window.half_xy = c.get_double("match.half_xy", s.window.half_xy);
    s.window.half_theta = c.get_double("match.half_theta", s.window.half_theta);
    s.window.res_xy = c.get_double("match.res_xy", s.window.res_xy);
    s.window.res_theta = c.get_double("match.res_theta", s.window.res_theta);
    s.gps_sigma = c.get_double("gps.sigma", s.gps_sigma);
    s.gps_sigma_theta = c.get_double("gps.sigma_theta", s.gps_sigma_theta);
    s.gps_every = c.get_int("gps.every", s.gps_every);
    s.trigger_distance = c.get_double("trigger.distance", s.trigger_distance);
    s.trigger_heading = c.get_double("trigger.heading", s.trigger_heading);
    s.validate();
    return s;
}

void write_sim_config(const SimConfig& s, Config& c) {
    c.set("seed", std::to_string(s.seed));
    c.set("lidar.beams", std::to_string(s.lidar.beams));
    c.set("lidar.max_range", s.lidar.max_range);
    c.set("lidar.span", s.lidar.span);
    c.set("lidar.range_sigma", s.lidar.range_sigma);
    c.set("dr.sigma_x", s.dr_sigma_x);
    c.set("dr.sigma_y", s.dr_sigma_y);
    c.set("dr.sigma_theta", s.dr_sigma_theta);
    c.set("dr.min_distance", s.dr_min_distance);
    c.set("eso.mode", to_string(s.eso_mode));
    c.set("eso.sigma_min", s.injection.sigma_min);
    c.set("eso.sigma_max", s.injection.sigma_max);
    c.set("eso.sigma_theta", s.injection.sigma_theta);
    c.set("match.half_xy", s.window.half_xy);
    c.set("match.half_theta", s.window.half_theta);
    c.set("match.res_xy", s.window.res_xy);
    c.set("match.res_theta", s.window.res_theta);
    c.set("gps.sigma", s.gps_sigma);
    c.set("gps.sigma_theta", s.gps_sigma_theta);
    c.set("gps.every", std::to_string(s.gps_every));
    c.set("trigger.distance", s.trigger_distance);
    c.set("trigger.heading", s.trigger_heading);
}

Scenario scenario_from(Config& c) {
    Scenario sc;
    sc.world = c.get_string("world.type", sc.world);
    sc.length = c.get_double("world.length", sc.length);
    sc.width = c.get_double("world.width", sc.width);
    sc.side = c.get_double("world.side", sc.side);
    sc.end_caps = c.get_bool("world.end_caps", sc.end_caps);
    sc.laps = c.get_int("path.laps", sc.laps);
    sc.weave.amplitude = c.get_double("path.amplitude", sc.weave.amplitude);
    sc.weave.period = c.get_double("path.period", sc.weave.period);
    sc.weave.phase = c.get_double("path.phase", sc.weave.phase);
    sc.margin = c.get_double("path.margin", sc.margin);
    sc.path_step = c.get_double("path.step", sc.path_step);
    return sc;
}

Dataset simulate_from_config(Config& c) {
    const SimConfig sim = sim_config_from(c);
    const Scenario sc = scenario_from(c);
    const World world = build_world(sc);
    Dataset ds = simulate_run(world, build_path(sc), sim);
    ds.meta = c;
    ds.meta.set("start.x", ds.start.x);
    ds.meta.set("start.y", ds.start.y);
    ds.meta.set("start.theta", ds.start.theta);
    return ds;
}

}  // namespace sceneloc
