#include "sceneloc/scan_matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sceneloc/errors.hpp"

namespace sceneloc {

namespace {

constexpr int kFalloffCells = 3;

// Consecutive hits closer than this are taken to lie on one surface.
bool same_surface(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a - b).norm() < 0.5 + 0.1 * a.norm();
}

// Reference likelihood raster padded so that every in-window shift of a
// "valid" base cell stays inside the buffer.
class LikelihoodRaster {
public:
    LikelihoodRaster(std::span<const Eigen::Vector2d> ref, double res, int shift_cells) : res_(res) {
        Eigen::Vector2d lo = ref.front(), hi = ref.front();
        for (const auto& p : ref) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        inner_pad_ = kFalloffCells + 1;
        const int pad = inner_pad_ + 2 * shift_cells;
        origin_ = lo - Eigen::Vector2d::Constant(pad * res);
        cols_ = static_cast<int>(std::floor((hi.x() - lo.x()) / res)) + 1 + 2 * pad;
        rows_ = static_cast<int>(std::floor((hi.y() - lo.y()) / res)) + 1 + 2 * pad;
        // Cells of the padded bbox of ref (plus falloff) that a valid base may sit in.
        valid_lo_ = pad - inner_pad_ - shift_cells;
        valid_hi_col_ = cols_ - 1 - valid_lo_;
        valid_hi_row_ = rows_ - 1 - valid_lo_;
        values_.assign(static_cast<std::size_t>(rows_) * cols_, 0.0);

        // Walls are traced between neighbouring hits so the field is continuous
        // along a surface rather than a row of isolated blobs.
        std::vector<std::pair<int, int>> occupied;
        occupied.reserve(ref.size());
        const std::size_t n = ref.size();
        for (std::size_t i = 0; i < n; ++i) {
            occupied.push_back(cell_of(ref[i]));
            const std::size_t j = (i + 1) % n;
            if (n < 2 || !same_surface(ref[i], ref[j])) continue;
            const Eigen::Vector2d d = ref[j] - ref[i];
            const int steps = static_cast<int>(std::ceil(d.norm() / (0.5 * res)));
            for (int k = 1; k < steps; ++k) occupied.push_back(cell_of(ref[i] + d * (double(k) / steps)));
        }
        for (const auto& [c, r] : occupied) {
            for (int dr = -kFalloffCells; dr <= kFalloffCells; ++dr) {
                for (int dc = -kFalloffCells; dc <= kFalloffCells; ++dc) {
                    const double v = std::exp(-0.5 * (dr * dr + dc * dc));
                    double& cell = values_[index(c + dc, r + dr)];
                    cell = std::max(cell, v);
                }
            }
        }
    }

    std::pair<int, int> cell_of(const Eigen::Vector2d& p) const {
        return {static_cast<int>(std::floor((p.x() - origin_.x()) / res_)),
                static_cast<int>(std::floor((p.y() - origin_.y()) / res_))};
    }

    bool valid_base(int c, int r) const {
        return c >= valid_lo_ && c <= valid_hi_col_ && r >= valid_lo_ && r <= valid_hi_row_;
    }

    std::ptrdiff_t index(int c, int r) const { return static_cast<std::ptrdiff_t>(r) * cols_ + c; }
    int cols() const { return cols_; }
    const double* data() const { return values_.data(); }

private:
    double res_;
    Eigen::Vector2d origin_;
    int rows_ = 0, cols_ = 0;
    int inner_pad_ = 0;
    int valid_lo_ = 0, valid_hi_col_ = 0, valid_hi_row_ = 0;
    std::vector<double> values_;
};

}  // namespace

int MatchWindow::cells_xy() const { return static_cast<int>(std::lround(half_xy / res_xy)); }
int MatchWindow::cells_theta() const { return static_cast<int>(std::lround(half_theta / res_theta)); }

Pose2 ScoreGrid::pose_at(int ix, int iy, int ith) const {
    return Pose2{center.x + (ix - nx / 2) * res_xy, center.y + (iy - ny / 2) * res_xy,
                 normalize_angle(center.theta + (ith - nth / 2) * res_theta)};
}

MatchResult correlative_match(std::span<const Eigen::Vector2d> ref, std::span<const Eigen::Vector2d> tgt,
                              const Pose2& init, const MatchWindow& window) {
    if (ref.empty() || tgt.empty()) throw InvalidArgument("correlative_match: empty scan");
    if (!(window.res_xy > 0.0) || !(window.res_theta > 0.0) || window.half_xy < 0.0 ||
        window.half_theta < 0.0) {
        throw InvalidArgument("correlative_match: bad window");
    }
    const int wxy = window.cells_xy();
    const int wth = window.cells_theta();
    const LikelihoodRaster raster(ref, window.res_xy, wxy);

    MatchResult result;
    ScoreGrid& g = result.grid;
    g.nx = g.ny = 2 * wxy + 1;
    g.nth = 2 * wth + 1;
    g.center = init;
    g.res_xy = window.res_xy;
    g.res_theta = window.res_theta;
    g.scores.assign(static_cast<std::size_t>(g.nx) * g.ny * g.nth, 0.0);

    std::vector<std::ptrdiff_t> base;
    base.reserve(tgt.size());
    const double* values = raster.data();
    const std::ptrdiff_t stride = raster.cols();
    for (int ith = 0; ith < g.nth; ++ith) {
        const double th = init.theta + (ith - wth) * window.res_theta;
        const double c = std::cos(th), s = std::sin(th);
        base.clear();
        for (const auto& p : tgt) {
            const Eigen::Vector2d q(c * p.x() - s * p.y() + init.x, s * p.x() + c * p.y() + init.y);
            const auto [col, row] = raster.cell_of(q);
            if (raster.valid_base(col, row)) base.push_back(raster.index(col, row));
        }
        for (int ix = 0; ix < g.nx; ++ix) {
            for (int iy = 0; iy < g.ny; ++iy) {
                const std::ptrdiff_t off = (iy - wxy) * stride + (ix - wxy);
                double sum = 0.0;
                for (std::ptrdiff_t b : base) sum += values[b + off];
                g.scores[(static_cast<std::size_t>(ix) * g.ny + iy) * g.nth + ith] = sum;
            }
        }
    }

    // Scores are laid out in lexicographic (ix, iy, ith) order, so the first
    // strict maximum is the tie-break winner.
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < g.scores.size(); ++i) {
        if (g.scores[i] > best) {
            best = g.scores[i];
            best_i = i;
        }
    }
    result.ith = static_cast<int>(best_i % g.nth);
    result.iy = static_cast<int>((best_i / g.nth) % g.ny);
    result.ix = static_cast<int>(best_i / (static_cast<std::size_t>(g.nth) * g.ny));
    result.score = best;
    result.pose = g.pose_at(result.ix, result.iy, result.ith);
    return result;
}

std::vector<Eigen::Vector2d> scan_normals(std::span<const Eigen::Vector2d> scan) {
    const std::size_t n = scan.size();
    std::vector<Eigen::Vector2d> normals(n, Eigen::Vector2d::Zero());
    auto close = [&](std::size_t i, std::size_t j) { return same_surface(scan[i], scan[j]); };
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t prev = (i + n - 1) % n;
        const std::size_t next = (i + 1) % n;
        const bool has_prev = n > 1 && close(i, prev);
        const bool has_next = n > 1 && close(i, next);
        if (!has_prev && !has_next) continue;
        const Eigen::Vector2d a = has_prev ? scan[prev] : scan[i];
        const Eigen::Vector2d b = has_next ? scan[next] : scan[i];
        const Eigen::Vector2d t = b - a;
        if (t.norm() < 1e-12) continue;
        normals[i] = Eigen::Vector2d(-t.y(), t.x()).normalized();
    }
    return normals;
}

Eigen::Matrix2d normal_scatter(std::span<const Eigen::Vector2d> scan) {
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    int count = 0;
    for (const auto& n : scan_normals(scan)) {
        if (n.squaredNorm() == 0.0) continue;
        m += n * n.transpose();
        ++count;
    }
    return count > 0 ? Eigen::Matrix2d(m / count) : m;
}

}  // namespace sceneloc
