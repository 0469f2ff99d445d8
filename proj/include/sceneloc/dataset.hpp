#pragma once

#include <filesystem>

#include "sceneloc/simulator.hpp"

namespace sceneloc {

/// Dataset directory layout:
///
///   meta            resolved config, `key = value` per line
///   frames.csv      t,u_dx,u_dy,u_dth,z_dx,z_dy,z_dth,x_dx,x_dy,x_dth,gx,gy,gth,has_gps
///   scans/<t>.csv   x,y per point, ego frame
///
/// Numbers are written in shortest round-trip form, so load(save(d))
/// reproduces every value exactly.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Throws DataError on missing files, bad headers or malformed numbers.
Dataset load_dataset(const std::filesystem::path& dir);

inline constexpr const char* kFramesHeader =
    "t,u_dx,u_dy,u_dth,z_dx,z_dy,z_dth,x_dx,x_dy,x_dth,gx,gy,gth,has_gps";

}  // namespace sceneloc
