#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sceneloc/fusion_filter.hpp"

namespace sceneloc {

/// Ego-centered raster geometry. The defaults give a 120 m x 120 m square
/// of 2.4 m cells.
struct GridSpec {
    int width = 50;
    int height = 50;
    double cell_size = 2.4;

    double half_width() const { return 0.5 * width * cell_size; }
    double half_height() const { return 0.5 * height * cell_size; }
};

/// Binary occupancy image of one scan, row-major with row = y index and
/// column = x index. The vehicle sits at cell (height/2, width/2).
class SceneGrid {
public:
    SceneGrid() = default;
    explicit SceneGrid(const GridSpec& spec);

    const GridSpec& spec() const { return spec_; }
    int rows() const { return spec_.height; }
    int cols() const { return spec_.width; }

    std::uint8_t at(int row, int col) const { return cells_[index(row, col)]; }
    void set(int row, int col, std::uint8_t v) { cells_[index(row, col)] = v; }
    std::span<const std::uint8_t> cells() const { return cells_; }
    int occupied_count() const;

private:
    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * spec_.width + col;
    }

    GridSpec spec_;
    std::vector<std::uint8_t> cells_;
};

using ScanPoints = std::vector<Eigen::Vector2d>;

/// Marks every cell hit by at least one point. Points outside the
/// half-open square [-w/2, w/2) x [-h/2, h/2) are dropped.
SceneGrid rasterize(std::span<const Eigen::Vector2d> scan, const GridSpec& spec = {});

/// Lower-triangular Cholesky entries (a11, a21, a22, a31, a32, a33).
struct InfoDescriptor {
    Eigen::Matrix<double, 6, 1> a = Eigen::Matrix<double, 6, 1>::Zero();

    static InfoDescriptor from_factor(const Eigen::Matrix3d& lower);
    Eigen::Matrix3d factor() const;
};

/// Q = L L^T. Throws InvalidArgument if any diagonal entry is not positive.
InfoMatrix descriptor_to_info(const InfoDescriptor& d);

/// Cholesky factor of an SPD information matrix as a descriptor. Throws
/// NumericalError if the matrix is not positive definite.
InfoDescriptor info_to_descriptor(const InfoMatrix& q);

}  // namespace sceneloc
