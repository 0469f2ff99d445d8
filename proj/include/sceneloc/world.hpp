#pragma once

#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "sceneloc/rng.hpp"
#include "sceneloc/scene_grid.hpp"
#include "sceneloc/se2.hpp"

namespace sceneloc {

struct Segment {
    Eigen::Vector2d a;
    Eigen::Vector2d b;
};

/// Wall segments plus the drivable region: inside `bounds` and outside every
/// box in `solids`.
struct World {
    std::vector<Segment> walls;
    Eigen::AlignedBox2d bounds;
    std::vector<Eigen::AlignedBox2d> solids;

    bool contains(const Eigen::Vector2d& p) const;
};

struct OpeningSpec {
    bool end_caps = false;
};

/// Straight corridor along +x from x = 0 to `length`, walls at y = +-width/2.
/// Throws InvalidArgument for non-positive dimensions.
World build_corridor(double length, double width, const OpeningSpec& openings = {});

/// Closed square loop of corridors. Outer walls span [0, side]^2, the inner
/// block is [width, side - width]^2.
World build_ring_corridor(double side, double width);

struct LidarSpec {
    int beams = 180;
    double max_range = 30.0;
    double span = 2.0 * std::numbers::pi;
    double range_sigma = 0.0;

    double beam_angle(int i) const { return -0.5 * span + i * span / beams; }
};

/// Distance along the unit ray to the segment, if it is hit.
std::optional<double> ray_segment_distance(const Eigen::Vector2d& origin, const Eigen::Vector2d& dir,
                                           const Segment& seg);

/// Ego-frame hit points, one per beam that reaches a wall within range, in
/// beam order. Range noise is drawn from `rng` when range_sigma > 0.
ScanPoints raycast_scan(const World& world, const Pose2& pose, const LidarSpec& lidar,
                        CounterRng* rng = nullptr);

/// Lateral weaving applied on top of a centerline.
struct WeaveSpec {
    double amplitude = 1.5;
    double period = 15.0;
    double phase = 0.0;
};

/// Densely sampled pose sequence; headings follow the direction of travel.
using PathSamples = std::vector<Pose2>;

/// Weaving drive along the corridor centerline from x0 to x1.
PathSamples make_corridor_path(double x0, double x1, const WeaveSpec& weave, double step = 0.02);

/// Counter-clockwise laps around the ring corridor centerline with rounded
/// corners. Weaving fades out near the corners.
PathSamples make_ring_path(double side, double width, int laps, const WeaveSpec& weave,
                           double step = 0.02);

}  // namespace sceneloc
