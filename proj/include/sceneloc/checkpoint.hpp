#pragma once

#include <filesystem>
#include <string>

#include "sceneloc/network.hpp"

namespace sceneloc {

/// Model file layout, all integers little-endian:
///
///   char[8]  magic "SLNETCK1"
///   u32      format version (1)
///   u32      input height, u32 input width
///   u32      conv layer count, then per layer u32 out_channels, kernel, stride
///   u32      hidden layer count, then per layer u32 width
///   u32      output count (6)
///   u64      parameter count
///   f64[n]   parameters in layer order (weights then bias per layer)
inline constexpr char kCheckpointMagic[8] = {'S', 'L', 'N', 'E', 'T', 'C', 'K', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const NetParams& params);
NetParams decode_checkpoint(const std::string& bytes);

void save_checkpoint(const NetParams& params, const std::filesystem::path& path);
/// Throws DataError for missing files, bad magic, version or sizes.
NetParams load_checkpoint(const std::filesystem::path& path);

}  // namespace sceneloc
