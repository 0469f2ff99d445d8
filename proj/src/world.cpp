#include "sceneloc/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sceneloc/errors.hpp"

namespace sceneloc {

namespace {

// Fade factor in [0, 1]: 0 within `margin` of either end of [0, len].
double taper(double s, double len, double margin) {
    if (margin <= 0.0) return 1.0;
    const double d = std::min(s, len - s);
    if (d <= 0.0) return 0.0;
    if (d >= margin) return 1.0;
    return 0.5 - 0.5 * std::cos(std::numbers::pi * d / margin);
}

PathSamples headings_from_positions(const std::vector<Eigen::Vector2d>& pts, bool closed) {
    PathSamples out;
    out.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        Eigen::Vector2d d;
        if (i + 1 < pts.size()) {
            d = pts[i + 1] - pts[i];
        } else if (closed) {
            d = pts.front() - pts[i];
        } else {
            d = pts[i] - pts[i - 1];
        }
        out.push_back(Pose2{pts[i].x(), pts[i].y(), std::atan2(d.y(), d.x())});
    }
    return out;
}

}  // namespace

bool World::contains(const Eigen::Vector2d& p) const {
    if (!bounds.contains(p)) return false;
    for (const auto& s : solids) {
        if (s.contains(p)) return false;
    }
    return true;
}

World build_corridor(double length, double width, const OpeningSpec& openings) {
    if (!(length > 0.0) || !(width > 0.0)) throw InvalidArgument("corridor dimensions must be positive");
    const double h = 0.5 * width;
    World w;
    w.walls.push_back({{0.0, -h}, {length, -h}});
    w.walls.push_back({{0.0, h}, {length, h}});
    if (openings.end_caps) {
        w.walls.push_back({{0.0, -h}, {0.0, h}});
        w.walls.push_back({{length, -h}, {length, h}});
    }
    w.bounds = Eigen::AlignedBox2d(Eigen::Vector2d(0.0, -h), Eigen::Vector2d(length, h));
    return w;
}

World build_ring_corridor(double side, double width) {
    if (!(side > 0.0) || !(width > 0.0) || !(2.0 * width < side)) {
        throw InvalidArgument("ring corridor needs side > 2 * width > 0");
    }
    const double a = width, b = side - width;
    World w;
    const Eigen::Vector2d o0(0, 0), o1(side, 0), o2(side, side), o3(0, side);
    const Eigen::Vector2d i0(a, a), i1(b, a), i2(b, b), i3(a, b);
    w.walls = {{o0, o1}, {o1, o2}, {o2, o3}, {o3, o0}, {i0, i1}, {i1, i2}, {i2, i3}, {i3, i0}};
    w.bounds = Eigen::AlignedBox2d(o0, o2);
    // Open box so that points exactly on the inner walls stay drivable.
    const double eps = 1e-9;
    w.solids.emplace_back(Eigen::Vector2d(a + eps, a + eps), Eigen::Vector2d(b - eps, b - eps));
    return w;
}

std::optional<double> ray_segment_distance(const Eigen::Vector2d& origin, const Eigen::Vector2d& dir,
                                           const Segment& seg) {
    const Eigen::Vector2d e = seg.b - seg.a;
    const double denom = dir.x() * e.y() - dir.y() * e.x();
    if (std::abs(denom) < 1e-15) return std::nullopt;  // parallel
    const Eigen::Vector2d w = seg.a - origin;
    const double t = (w.x() * e.y() - w.y() * e.x()) / denom;  // along ray
    const double u = (w.x() * dir.y() - w.y() * dir.x()) / denom;  // along segment
    if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
    return t;
}

ScanPoints raycast_scan(const World& world, const Pose2& pose, const LidarSpec& lidar, CounterRng* rng) {
    ScanPoints pts;
    if (lidar.beams <= 0) return pts;
    pts.reserve(lidar.beams);
    const Eigen::Vector2d origin(pose.x, pose.y);
    for (int i = 0; i < lidar.beams; ++i) {
        const double ego_angle = lidar.beam_angle(i);
        const double a = pose.theta + ego_angle;
        const Eigen::Vector2d dir(std::cos(a), std::sin(a));
        double best = std::numeric_limits<double>::infinity();
        for (const Segment& s : world.walls) {
            if (auto d = ray_segment_distance(origin, dir, s); d && *d < best) best = *d;
        }
        // The noise draw happens for every beam so streams stay aligned.
        const double noise = (rng && lidar.range_sigma > 0.0) ? lidar.range_sigma * rng->normal() : 0.0;
        if (!(best <= lidar.max_range)) continue;
        const double r = best + noise;
        pts.emplace_back(r * std::cos(ego_angle), r * std::sin(ego_angle));
    }
    return pts;
}

PathSamples make_corridor_path(double x0, double x1, const WeaveSpec& weave, double step) {
    if (!(x1 > x0) || !(step > 0.0)) throw InvalidArgument("corridor path needs x1 > x0 and step > 0");
    const double len = x1 - x0;
    const int n = static_cast<int>(std::floor(len / step)) + 1;
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double s = i * step;
        const double d = weave.amplitude * taper(s, len, 0.5 * weave.period) *
                         std::sin(2.0 * std::numbers::pi * s / weave.period + weave.phase);
        pts.emplace_back(x0 + s, d);
    }
    return headings_from_positions(pts, false);
}

PathSamples make_ring_path(double side, double width, int laps, const WeaveSpec& weave, double step) {
    if (laps <= 0 || !(step > 0.0)) throw InvalidArgument("ring path needs laps > 0 and step > 0");
    const double h = 0.5 * width;
    const double rc = 0.9 * h;              // corner radius of the centerline
    const double lo = h + rc, hi = side - h - rc;
    const double straight = hi - lo;
    if (!(straight > 0.0)) throw InvalidArgument("ring too small for its width");
    const double arc = 0.5 * std::numbers::pi * rc;
    const double leg = straight + arc;
    const double lap = 4.0 * leg;

    // Leg k runs along direction k * 90 deg starting at a corner point.
    const Eigen::Vector2d starts[4] = {{lo, h}, {side - h, lo}, {hi, side - h}, {h, hi}};
    const Eigen::Vector2d centers[4] = {{hi, lo}, {hi, hi}, {lo, hi}, {lo, lo}};

    const double total = lap * laps;
    const int n = static_cast<int>(std::floor(total / step));
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double s_all = i * step;
        const double s = std::fmod(s_all, lap);
        const int k = std::min(3, static_cast<int>(s / leg));
        const double sl = s - k * leg;
        const double dir = k * 0.5 * std::numbers::pi;
        const Eigen::Vector2d tangent(std::cos(dir), std::sin(dir));
        const Eigen::Vector2d normal(-tangent.y(), tangent.x());
        if (sl < straight) {
            const double d = weave.amplitude * taper(sl, straight, 0.5 * weave.period) *
                             std::sin(2.0 * std::numbers::pi * sl / weave.period + weave.phase);
            pts.push_back(starts[k] + sl * tangent + d * normal);
        } else {
            const double phi = dir - 0.5 * std::numbers::pi + (sl - straight) / rc;
            pts.push_back(centers[k] + rc * Eigen::Vector2d(std::cos(phi), std::sin(phi)));
        }
    }
    return headings_from_positions(pts, true);
}

}  // namespace sceneloc
