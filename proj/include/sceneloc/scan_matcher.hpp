#pragma once

#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sceneloc/scene_grid.hpp"
#include "sceneloc/se2.hpp"

namespace sceneloc {

/// Exhaustive search window, centered on the initial guess.
struct MatchWindow {
    double half_xy = 2.4;
    double half_theta = 10.0 * std::numbers::pi / 180.0;
    double res_xy = 0.1;
    double res_theta = 0.5 * std::numbers::pi / 180.0;

    int cells_xy() const;     ///< steps from the center to the window edge
    int cells_theta() const;
};

/// Match score for every candidate pose of the window, indexed (ix, iy, ith)
/// with ix fastest-varying last: ((ix * ny) + iy) * nth + ith.
struct ScoreGrid {
    int nx = 0, ny = 0, nth = 0;
    Pose2 center;
    double res_xy = 0.0;
    double res_theta = 0.0;
    std::vector<double> scores;

    double at(int ix, int iy, int ith) const {
        return scores[(static_cast<std::size_t>(ix) * ny + iy) * nth + ith];
    }
    Pose2 pose_at(int ix, int iy, int ith) const;
};

struct MatchResult {
    Pose2 pose;
    double score = 0.0;
    int ix = 0, iy = 0, ith = 0;
    ScoreGrid grid;
};

/// Finds the pose of the target scan in the reference frame by scoring every
/// window candidate against a rasterized likelihood of the reference scan.
/// Cells containing a reference point score 1, nearby cells fall off as a
/// Gaussian of the cell distance (sigma = one cell), the rest score 0.
/// Ties go to the lexicographically smallest (ix, iy, ith).
/// Throws InvalidArgument when either scan is empty.
MatchResult correlative_match(std::span<const Eigen::Vector2d> ref, std::span<const Eigen::Vector2d> tgt,
                              const Pose2& init, const MatchWindow& window = {});

/// Unit normals from neighbouring points in scan order. Points without a
/// close neighbour on either side get a zero normal.
std::vector<Eigen::Vector2d> scan_normals(std::span<const Eigen::Vector2d> scan);

/// Mean outer product of the non-zero normals; trace 1 unless no normals exist.
Eigen::Matrix2d normal_scatter(std::span<const Eigen::Vector2d> scan);

}  // namespace sceneloc
