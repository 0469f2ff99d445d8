#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sceneloc/fusion_filter.hpp"
#include "sceneloc/run_config.hpp"
#include "sceneloc/scan_matcher.hpp"
#include "sceneloc/world.hpp"

namespace sceneloc {

enum class EsoMode {
    match,              ///< correlative scan matching between consecutive scans
    inject,             ///< truth plus scene-dependent Gaussian noise
    inject_scale_free,  ///< as inject, then rescaled to unit translation norm
};

std::string to_string(EsoMode m);
/// Throws InvalidArgument for unknown names.
EsoMode parse_eso_mode(const std::string& s);

/// Injected noise: per principal direction k of the reference scan's normal
/// scatter (eigenvalue l_k, trace 1) the variance is
/// sigma_min^2 + (sigma_max^2 - sigma_min^2) * max(0, 1 - 2 l_k)^2,
/// so directions without wall normals get sigma_max.
struct InjectionSpec {
    double sigma_min = 0.01;
    double sigma_max = 0.5;
    double sigma_theta = 0.001;
};

struct SimConfig {
    LidarSpec lidar{180, 30.0, 2.0 * std::numbers::pi, 0.01};
    /// Dead reckoning noise standard deviations per square-root meter, with
    /// x forward and y lateral in the vehicle frame.
    double dr_sigma_x = 0.02;
    double dr_sigma_y = 0.02;
    double dr_sigma_theta = 0.2 * std::numbers::pi / 180.0;
    /// Distance floor used when scaling the per-meter covariance.
    double dr_min_distance = 0.1;
    EsoMode eso_mode = EsoMode::inject;
    InjectionSpec injection;
    MatchWindow window;
    double gps_sigma = 0.05;
    double gps_sigma_theta = 0.001;
    int gps_every = 10;
    double trigger_distance = 1.0;
    double trigger_heading = 30.0 * std::numbers::pi / 180.0;
    std::uint64_t seed = 1;

    /// Throws InvalidArgument on non-positive noise levels or intervals.
    void validate() const;
    NoiseCov dr_cov_per_meter() const;
    /// Per-meter covariance times max(distance, dr_min_distance).
    NoiseCov dr_cov(double distance) const;
};

/// World and path description.
struct Scenario {
    std::string world = "corridor";  ///< "corridor" or "ring"
    double length = 200.0;           ///< corridor length
    double width = 6.0;
    double side = 60.0;              ///< ring outer side
    bool end_caps = false;
    int laps = 1;
    WeaveSpec weave;
    double margin = 5.0;             ///< corridor path keeps this far from the ends
    double path_step = 0.02;
};

World build_world(const Scenario& sc);
PathSamples build_path(const Scenario& sc);

struct Frame {
    int t = 0;
    Pose2 x;  ///< true motion since the previous frame, in its ego frame
    Pose2 u;  ///< dead reckoning reading
    Pose2 z;  ///< exteroceptive odometry reading
    ScanPoints scan;
    std::optional<Pose2> gps;
};

struct Dataset {
    SimConfig sim;
    /// Every parameter used to generate the run, including the start pose.
    Config meta;
    Pose2 start;
    std::vector<Frame> frames;

    /// start composed with the true relative motions, one pose per frame.
    std::vector<Pose2> truth_global() const;
};

/// Path sample indices where a frame is emitted: the first sample, then every
/// sample at which the arc length since the last frame reaches `distance` or
/// the heading has turned by at least `heading`.
std::vector<std::size_t> trigger_indices(const PathSamples& path, double distance, double heading);

/// Covariance of the injected exteroceptive noise for a reference scan.
NoiseCov injection_covariance(const ScanPoints& ref, const SimConfig& cfg);

/// Throws InvalidArgument when the path leaves the drivable region.
Dataset simulate_run(const World& world, const PathSamples& path, const SimConfig& cfg);

SimConfig sim_config_from(Config& c);
Scenario scenario_from(Config& c);
void write_sim_config(const SimConfig& s, Config& c);

/// Builds the scenario and simulates it; meta holds the resolved config.
Dataset simulate_from_config(Config& c);

}  // namespace sceneloc
