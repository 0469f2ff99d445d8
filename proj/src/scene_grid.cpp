#include "sceneloc/scene_grid.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "sceneloc/errors.hpp"

namespace sceneloc {

SceneGrid::SceneGrid(const GridSpec& spec) : spec_(spec) {
    if (spec.width <= 0 || spec.height <= 0 || !(spec.cell_size > 0.0)) {
        throw InvalidArgument("grid spec must have positive dimensions");
    }
    cells_.assign(static_cast<std::size_t>(spec.width) * spec.height, 0);
}

int SceneGrid::occupied_count() const {
    return static_cast<int>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

SceneGrid rasterize(std::span<const Eigen::Vector2d> scan, const GridSpec& spec) {
    SceneGrid grid(spec);
    const double hw = spec.half_width();
    const double hh = spec.half_height();
    for (const Eigen::Vector2d& p : scan) {
        if (!(p.x() >= -hw && p.x() < hw && p.y() >= -hh && p.y() < hh)) continue;
        const int col = static_cast<int>(std::floor((p.x() + hw) / spec.cell_size));
        const int row = static_cast<int>(std::floor((p.y() + hh) / spec.cell_size));
        // Guards the rounding case p.x() + hw == width * cell_size.
        if (col < 0 || col >= spec.width || row < 0 || row >= spec.height) continue;
        grid.set(row, col, 1);
    }
    return grid;
}

InfoDescriptor InfoDescriptor::from_factor(const Eigen::Matrix3d& lower) {
    InfoDescriptor d;
    d.a << lower(0, 0), lower(1, 0), lower(1, 1), lower(2, 0), lower(2, 1), lower(2, 2);
    return d;
}

Eigen::Matrix3d InfoDescriptor::factor() const {
    Eigen::Matrix3d l = Eigen::Matrix3d::Zero();
    l(0, 0) = a[0];
    l(1, 0) = a[1];
    l(1, 1) = a[2];
    l(2, 0) = a[3];
    l(2, 1) = a[4];
    l(2, 2) = a[5];
    return l;
}

InfoMatrix descriptor_to_info(const InfoDescriptor& d) {
    if (!d.a.allFinite()) throw InvalidArgument("descriptor has non-finite entries");
    if (!(d.a[0] > 0.0 && d.a[2] > 0.0 && d.a[5] > 0.0)) {
        throw InvalidArgument("descriptor diagonal must be positive");
    }
    const Eigen::Matrix3d l = d.factor();
    return symmetrize(l * l.transpose());
}

InfoDescriptor info_to_descriptor(const InfoMatrix& q) {
    Eigen::LLT<Eigen::Matrix3d> llt(q);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("information matrix is not positive definite");
    }
    return InfoDescriptor::from_factor(llt.matrixL());
}

}  // namespace sceneloc
